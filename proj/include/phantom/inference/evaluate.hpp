#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "phantom/core/types.hpp"
#include "phantom/inference/model.hpp"

namespace phantom::inference {

/// Table-2 thresholds: non-steerer when S1 < 0.2 and S2 < 0.1, strong-steerer
/// when both exceed 0.3, other otherwise.
core::SteeringClass classify_user(const core::SteeringStrength& s);

struct EvalConfig {
  std::size_t n_mc = 64;           // ELBO samples per user
  std::size_t n_strength = 64;     // posterior samples for the S summary
  std::uint64_t seed = 1;
  std::size_t batch_size = 256;
};

struct UserFit {
  std::string user_id;
  double elbo = 0.0;
  core::SteeringStrength strength;  // posterior mean; fixed (0,0) / (1,1) for Models 0 / 1
  core::SteeringClass label = core::SteeringClass::other;
  double squared_error = 0.0;       // summed over days
  std::vector<double> expected_counts;
};

struct FitReport {
  core::ModelKind model = core::ModelKind::no_steering;
  std::size_t users = 0;
  double elbo_per_user = 0.0;
  double mse = 0.0;  // per user-day
  std::vector<UserFit> fits;

  std::array<std::size_t, 3> census() const;  // non-steerer, other, strong-steerer
};

/// ELBO with n_mc samples, posterior-mean S from n_strength samples, and MSE
/// of counts against alpha * lambda decoded at zK = flow(mu).
FitReport evaluate(const SteeringModel& model, std::span<const core::ActionTrajectory> data,
                   const EvalConfig& config = {});

/// Per-day rates of the naive baseline fitted on a training set.
struct NaiveBaseline {
  core::DayRates rates;
  static constexpr double kEmptyDayRate = 1e-3;
};

/// alpha_d = fraction of users with a nonzero count on day d; lambda_d = mean
/// count of those users (kEmptyDayRate when nobody is active).
NaiveBaseline naive_baseline(std::span<const core::ActionTrajectory> train_set);
/// Mean per-user log-likelihood under the baseline (alpha clipped to [1e-7, 1]).
double naive_log_likelihood(const NaiveBaseline& b, std::span<const core::ActionTrajectory> data);
double naive_mse(const NaiveBaseline& b, std::span<const core::ActionTrajectory> data);

struct BetaReport {
  core::SteeringDeviation beta;
  // Expected-count change alpha*lambda(S = (1,1)) - alpha*lambda(S = 0) per day
  // for the reference profile.
  std::vector<double> expected_deviation;
  double beta_grad_norm = 0.0;
  bool identifiability_warning = false;
};

/// Norm of the ELBO gradient with respect to the raw deviation parameters on
/// `data` with fixed noise.
double beta_gradient_norm(const SteeringModel& model, std::span<const core::ActionTrajectory> data,
                          std::uint64_t seed, std::size_t n_mc = 1);

/// Realized deviation plus its implied count deviation for `reference`. The
/// warning is raised when `grad_norm` is below `tolerance`.
BetaReport extract_beta(const SteeringModel& model, const core::PreferredProfile& reference, double grad_norm,
                        double tolerance = 1e-6);

/// Profile decoded at the flow image of the prior mean (z0 = 0).
core::PreferredProfile reference_profile(const SteeringModel& model);

/// Relative day of the largest beta2 entry.
int beta2_peak_relative_day(const core::SteeringDeviation& beta);

void write_fit_csv(std::ostream& out, const FitReport& report);
nlohmann::ordered_json fit_summary(const FitReport& report);
void write_beta_csv(std::ostream& out, const BetaReport& report);

}  // namespace phantom::inference
