#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "phantom/core/types.hpp"
#include "phantom/util/rng.hpp"

namespace phantom::core {

/// Bounds applied to sigmoid outputs before they enter a logarithm.
inline constexpr double kMinActivity = 1e-7;
inline constexpr double kMaxActivity = 1.0 - 1e-7;

/// Tiles the weekday profile over the window and adds the strength-scaled
/// deviation: alpha = sigmoid(P1 + s1 * beta1), lambda = softplus(P2 + s2 * beta2).
DayRates compute_rates(const PreferredProfile& profile, const SteeringStrength& strength,
                       const SteeringDeviation& beta, int weekday_of_day0);

/// Rates of the profile alone (Model 0).
DayRates baseline_rates(const PreferredProfile& profile, const Window& window, int weekday_of_day0);

/// log Pr[k actions] under the zero-inflated Poisson with activity alpha and rate lambda.
double zip_log_pmf(int k, double alpha, double lambda);
int zip_sample(Rng& rng, double alpha, double lambda);

/// Strength actually used by a model: (0, 0) for Model 0, (1, 1) for Model 1.
SteeringStrength effective_strength(ModelKind model, const SteeringStrength& strength);

ActionTrajectory simulate_user(ModelKind model, const PreferredProfile& profile,
                               const SteeringStrength& strength, const SteeringDeviation& beta,
                               int weekday_of_day0, Rng& rng);

/// Deviation used for synthetic cohorts: ramps up to a beta2 peak one day
/// before the badge, then stays negative.
SteeringDeviation planted_beta(const Window& window);
int planted_beta2_peak_relative_day();

struct StrengthRange {
  double low;
  double high;
};

struct ProfilePrior {
  double p1_mean = 0.5;
  double p1_user_sd = 0.8;
  double p1_weekday_sd = 0.3;
  double p2_mean = 1.2;
  double p2_user_sd = 0.6;
  double p2_weekday_sd = 0.25;
};

struct CohortSpec {
  std::size_t users = 1000;
  // Group order: strong-steerer, non-steerer, other.
  std::array<double, 3> proportions{0.2, 0.4, 0.4};
  std::array<StrengthRange, 3> strength{{{0.90, 0.99}, {0.005, 0.05}, {0.12, 0.28}}};
  ProfilePrior profile;
  Window window;
  SteeringDeviation beta = planted_beta(Window{});
  ModelKind model = ModelKind::user_steering;
  std::uint64_t seed = 1;
  // Redraw day 0 until at least one action occurs, as on a real badge day.
  bool require_day0_action = false;

  void validate() const;
};

struct Cohort {
  std::vector<ActionTrajectory> trajectories;
  std::vector<SteeringClass> labels;
  std::vector<SteeringStrength> strengths;
  std::vector<PreferredProfile> profiles;
};

/// Deterministic for a fixed seed; user i draws from its own stream.
Cohort simulate_cohort(const CohortSpec& spec);

std::string user_id_for(std::size_t index);

/// Model-0 daily counts from a start weekday until the cumulative count first
/// reaches `threshold`, followed by `days_after` further days.
struct BadgeHistory {
  std::vector<int> counts;
  int start_weekday = 0;
  int badge_index = -1;
};

BadgeHistory simulate_badge_history(const PreferredProfile& profile, int start_weekday,
                                    long threshold, int days_after, Rng& rng,
                                    int max_days = 100000);

}  // namespace phantom::core
