#include "phantom/core/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "phantom/ad/ops.hpp"
#include "phantom/util/error.hpp"

namespace phantom::core {
namespace {

double clipped_sigmoid(double x) { return std::clamp(ad::sigmoid(x), kMinActivity, kMaxActivity); }

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + " must be finite");
}

}  // namespace

DayRates compute_rates(const PreferredProfile& profile, const SteeringStrength& strength,
                       const SteeringDeviation& beta, int weekday_of_day0) {
  profile.validate();
  require_finite(strength.s1, "s1");
  require_finite(strength.s2, "s2");
  strength.validate();
  beta.validate();
  require(weekday_of_day0 >= 0 && weekday_of_day0 < kDaysPerWeek, "weekday_of_day0 must be in 0..6");
  const Window w = beta.window();
  DayRates r{std::vector<double>(w.length), std::vector<double>(w.length)};
  for (int d = 0; d < w.length; ++d) {
    const int wd = weekday_at(d, weekday_of_day0, w);
    r.alpha[d] = clipped_sigmoid(profile.p1_week[wd] + strength.s1 * beta.beta1[d]);
    r.lambda[d] = ad::softplus(profile.p2_week[wd] + strength.s2 * beta.beta2[d]);
  }
  return r;
}

DayRates baseline_rates(const PreferredProfile& profile, const Window& window, int weekday_of_day0) {
  return compute_rates(profile, {0.0, 0.0}, SteeringDeviation::zero(window), weekday_of_day0);
}

double zip_log_pmf(int k, double alpha, double lambda) {
  require(k >= 0, "zip_log_pmf: k must be nonnegative");
  require(alpha > 0.0 && alpha <= 1.0, "zip_log_pmf: alpha must be in (0, 1]");
  require(lambda > 0.0 && std::isfinite(lambda), "zip_log_pmf: lambda must be positive");
  const double log_alpha = std::log(alpha);
  if (k > 0)
    return log_alpha + k * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0);
  const double inactive = std::log1p(-alpha);
  const double active = log_alpha - lambda;
  const double m = std::max(inactive, active);
  return m + std::log1p(std::exp(std::min(inactive, active) - m));
}

int zip_sample(Rng& rng, double alpha, double lambda) {
  require(alpha >= 0.0 && alpha <= 1.0, "zip_sample: alpha must be in [0, 1]");
  require(lambda > 0.0 && std::isfinite(lambda), "zip_sample: lambda must be positive");
  if (!std::bernoulli_distribution(alpha)(rng)) return 0;
  return std::poisson_distribution<int>(lambda)(rng);
}

SteeringStrength effective_strength(ModelKind model, const SteeringStrength& strength) {
  switch (model) {
    case ModelKind::no_steering:
      return {0.0, 0.0};
    case ModelKind::uniform_steering:
      return {1.0, 1.0};
    case ModelKind::user_steering:
      break;
  }
  return strength;
}

ActionTrajectory simulate_user(ModelKind model, const PreferredProfile& profile,
                               const SteeringStrength& strength, const SteeringDeviation& beta,
                               int weekday_of_day0, Rng& rng) {
  const DayRates r =
      compute_rates(profile, effective_strength(model, strength), beta, weekday_of_day0);
  ActionTrajectory t;
  t.weekday_of_day0 = weekday_of_day0;
  t.day0_index = beta.day0_index;
  t.counts.resize(r.alpha.size());
  for (std::size_t d = 0; d < r.alpha.size(); ++d) t.counts[d] = zip_sample(rng, r.alpha[d], r.lambda[d]);
  return t;
}

SteeringDeviation planted_beta(const Window& window) {
  window.validate();
  SteeringDeviation b = SteeringDeviation::zero(window);
  const int peak = planted_beta2_peak_relative_day();
  for (int d = 0; d < window.length; ++d) {
    const double rel = window.relative_day(d);
    if (rel <= 0) {
      b.beta1[d] = 3.0 * std::exp(rel / 7.0);
      b.beta2[d] = 15.0 * std::exp(-std::abs(rel - peak) / 4.0);
    } else {
      b.beta1[d] = -4.0 * std::exp(-(rel - 1.0) / 20.0);
      b.beta2[d] = -3.0 * std::exp(-(rel - 1.0) / 15.0);
    }
  }
  return b;
}

int planted_beta2_peak_relative_day() { return -1; }

void CohortSpec::validate() const {
  double total = 0.0;
  for (double p : proportions) {
    require(p >= 0.0, "cohort proportions must be nonnegative");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, "cohort proportions must sum to 1");
  for (const auto& r : strength)
    require(r.low >= 0.0 && r.low <= r.high && r.high <= 1.0,
            "strength ranges must satisfy 0 <= low <= high <= 1");
  window.validate();
  beta.validate();
  require(beta.window() == window, "cohort beta does not match the window");
}

std::string user_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%06zu", index);
  return buf;
}

Cohort simulate_cohort(const CohortSpec& spec) {
  spec.validate();
  Cohort c;
  c.trajectories.reserve(spec.users);
  constexpr std::array<SteeringClass, 3> kGroups{SteeringClass::strong_steerer,
                                                SteeringClass::non_steerer, SteeringClass::other};
  for (std::size_t i = 0; i < spec.users; ++i) {
    Rng rng = stream_rng(spec.seed, i);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    std::size_t g = 3;
    double acc = 0.0;
    for (std::size_t k = 0; k < 3 && g == 3; ++k) {
      acc += spec.proportions[k];
      if (u < acc) g = k;
    }
    if (g == 3)  // rounding slack at the top: last group with mass
      for (std::size_t k = 0; k < 3; ++k)
        if (spec.proportions[k] > 0.0) g = k;

    const StrengthRange& range = spec.strength[g];
    std::uniform_real_distribution<double> s_draw(range.low, range.high);
    const double s1 = s_draw(rng);
    const double s2 = s_draw(rng);

    const ProfilePrior& pp = spec.profile;
    std::normal_distribution<double> normal;
    PreferredProfile profile;
    const double base1 = pp.p1_mean + pp.p1_user_sd * normal(rng);
    const double base2 = pp.p2_mean + pp.p2_user_sd * normal(rng);
    for (int wd = 0; wd < kDaysPerWeek; ++wd) {
      profile.p1_week[wd] = base1 + pp.p1_weekday_sd * normal(rng);
      profile.p2_week[wd] = base2 + pp.p2_weekday_sd * normal(rng);
    }
    const int weekday = std::uniform_int_distribution<int>(0, kDaysPerWeek - 1)(rng);

    ActionTrajectory t = simulate_user(spec.model, profile, {s1, s2}, spec.beta, weekday, rng);
    if (spec.require_day0_action && t.counts[t.day0_index] == 0) {
      const DayRates r =
          compute_rates(profile, effective_strength(spec.model, {s1, s2}), spec.beta, weekday);
      const int d0 = t.day0_index;
      for (int attempt = 0; attempt < 10000 && t.counts[d0] == 0; ++attempt)
        t.counts[d0] = zip_sample(rng, r.alpha[d0], r.lambda[d0]);
      if (t.counts[d0] == 0) t.counts[d0] = 1;
    }
    t.user_id = user_id_for(i);
    c.trajectories.push_back(std::move(t));
    c.labels.push_back(kGroups[g]);
    c.strengths.push_back({s1, s2});
    c.profiles.push_back(profile);
  }
  return c;
}

BadgeHistory simulate_badge_history(const PreferredProfile& profile, int start_weekday,
                                    long threshold, int days_after, Rng& rng, int max_days) {
  require(threshold >= 1, "badge threshold must be at least 1");
  require(days_after >= 0, "days_after must be nonnegative");
  require(start_weekday >= 0 && start_weekday < kDaysPerWeek, "start_weekday must be in 0..6");
  profile.validate();
  std::array<double, kDaysPerWeek> alpha{}, lambda{};
  for (int wd = 0; wd < kDaysPerWeek; ++wd) {
    alpha[wd] = clipped_sigmoid(profile.p1_week[wd]);
    lambda[wd] = ad::softplus(profile.p2_week[wd]);
  }
  BadgeHistory h;
  h.start_weekday = start_weekday;
  long total = 0;
  for (int day = 0; day < max_days; ++day) {
    const int wd = (start_weekday + day) % kDaysPerWeek;
    const int k = zip_sample(rng, alpha[wd], lambda[wd]);
    h.counts.push_back(k);
    total += k;
    if (total >= threshold) {
      h.badge_index = day;
      break;
    }
  }
  if (h.badge_index < 0)
    throw NumericalError("badge threshold not reached within " + std::to_string(max_days) + " days");
  for (int day = 1; day <= days_after; ++day) {
    const int wd = (start_weekday + h.badge_index + day) % kDaysPerWeek;
    h.counts.push_back(zip_sample(rng, alpha[wd], lambda[wd]));
  }
  return h;
}

}  // namespace phantom::core
