#include "phantom/core/types.hpp"

#include <cmath>

#include "phantom/ad/ops.hpp"
#include "phantom/util/error.hpp"

namespace phantom::core {

Window Window::from_weeks(int weeks_before, int weeks_after) {
  require(weeks_before > 0 && weeks_after > 0, "window weeks must be positive");
  return {kDaysPerWeek * (weeks_before + weeks_after), kDaysPerWeek * weeks_before};
}

void Window::validate() const {
  require(length > 0, "window length must be positive");
  require(day0_index >= 0 && day0_index < length, "day0_index outside window");
}

int weekday_at(int index, int weekday_of_day0, const Window& window) {
  const int r = (weekday_of_day0 + index - window.day0_index) % kDaysPerWeek;
  return r < 0 ? r + kDaysPerWeek : r;
}

void ActionTrajectory::validate() const {
  require(!counts.empty(), "trajectory '" + user_id + "' has no counts");
  for (int c : counts) require(c >= 0, "trajectory '" + user_id + "' has a negative count");
  require(weekday_of_day0 >= 0 && weekday_of_day0 < kDaysPerWeek,
          "trajectory '" + user_id + "' weekday_of_day0 must be in 0..6");
  require(day0_index >= 0 && day0_index < static_cast<int>(counts.size()),
          "trajectory '" + user_id + "' day0_index outside counts");
}

void PreferredProfile::validate() const {
  for (int i = 0; i < kDaysPerWeek; ++i)
    require(std::isfinite(p1_week[i]) && std::isfinite(p2_week[i]), "profile values must be finite");
}

SteeringDeviation SteeringDeviation::zero(const Window& w) {
  w.validate();
  return {std::vector<double>(w.length, 0.0), std::vector<double>(w.length, 0.0), w.day0_index};
}

void SteeringDeviation::validate() const {
  require(beta1.size() == beta2.size() && !beta1.empty(), "beta channels must have equal length");
  window().validate();
  for (std::size_t d = 0; d < beta1.size(); ++d) {
    require(std::isfinite(beta1[d]) && std::isfinite(beta2[d]), "beta must be finite");
    const bool pre = static_cast<int>(d) <= day0_index;
    if (pre)
      require(beta1[d] >= 0.0 && beta2[d] >= 0.0,
              "beta must be nonnegative up to day 0 (index " + std::to_string(d) + ")");
    else
      require(beta1[d] <= 0.0 && beta2[d] <= 0.0,
              "beta must be nonpositive after day 0 (index " + std::to_string(d) + ")");
  }
}

SteeringStrength SteeringStrength::from_logits(double l1, double l2) {
  return {ad::sigmoid(l1), ad::sigmoid(l2)};
}

void SteeringStrength::validate() const {
  require(s1 >= 0.0 && s1 <= 1.0 && s2 >= 0.0 && s2 <= 1.0, "steering strength must lie in [0, 1]");
}

ModelKind model_from_int(int m) {
  require(m >= 0 && m <= 2, "model must be 0, 1 or 2");
  return static_cast<ModelKind>(m);
}

int to_int(ModelKind m) { return static_cast<int>(m); }

std::string to_string(SteeringClass c) {
  switch (c) {
    case SteeringClass::non_steerer:
      return "non-steerer";
    case SteeringClass::other:
      return "other";
    case SteeringClass::strong_steerer:
      return "strong-steerer";
  }
  return "other";
}

SteeringClass steering_class_from_string(const std::string& s) {
  if (s == "non-steerer") return SteeringClass::non_steerer;
  if (s == "other") return SteeringClass::other;
  if (s == "strong-steerer") return SteeringClass::strong_steerer;
  throw InvalidArgument("unknown steering class '" + s + "'");
}

}  // namespace phantom::core
