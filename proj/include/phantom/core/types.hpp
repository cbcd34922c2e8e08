#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace phantom::core {

inline constexpr int kDaysPerWeek = 7;

/// Observation window around the badge day. Defaults: 5 weeks either side.
struct Window {
  int length = 70;
  int day0_index = 35;

  static Window from_weeks(int weeks_before, int weeks_after);
  int relative_day(int index) const noexcept { return index - day0_index; }
  void validate() const;
  friend bool operator==(const Window&, const Window&) = default;
};

/// Weekday (0 = Monday .. 6 = Sunday) of window position `index`.
int weekday_at(int index, int weekday_of_day0, const Window& window);

struct ActionTrajectory {
  std::string user_id;
  std::vector<int> counts;
  int weekday_of_day0 = 0;
  int day0_index = 35;

  Window window() const { return {static_cast<int>(counts.size()), day0_index}; }
  void validate() const;
  friend bool operator==(const ActionTrajectory&, const ActionTrajectory&) = default;
};

/// Pre-link weekday values for the activity (p1) and intensity (p2) channels.
struct PreferredProfile {
  std::array<double, kDaysPerWeek> p1_week{};
  std::array<double, kDaysPerWeek> p2_week{};
  void validate() const;
};

/// Global per-day deviation: nonnegative up to and including day 0,
/// nonpositive afterwards.
struct SteeringDeviation {
  std::vector<double> beta1;
  std::vector<double> beta2;
  int day0_index = 35;

  static SteeringDeviation zero(const Window& w);
  Window window() const { return {static_cast<int>(beta1.size()), day0_index}; }
  void validate() const;
};

/// Per-user multiplier of the deviation. Model 0 and Model 1 pin it to the
/// endpoints (0, 0) and (1, 1); inferred strengths lie strictly inside.
struct SteeringStrength {
  double s1 = 0.0;
  double s2 = 0.0;

  static SteeringStrength from_logits(double l1, double l2);
  void validate() const;
};

struct DayRates {
  std::vector<double> alpha;   // P(active)
  std::vector<double> lambda;  // Poisson rate when active

  double expected_count(std::size_t d) const { return alpha[d] * lambda[d]; }
};

enum class ModelKind { no_steering = 0, uniform_steering = 1, user_steering = 2 };

ModelKind model_from_int(int m);
int to_int(ModelKind m);

enum class SteeringClass { non_steerer, other, strong_steerer };

std::string to_string(SteeringClass c);
SteeringClass steering_class_from_string(const std::string& s);

}  // namespace phantom::core
