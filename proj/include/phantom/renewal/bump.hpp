#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "phantom/core/types.hpp"
#include "phantom/renewal/discrete_dist.hpp"

namespace phantom::renewal {

/// lim E[count on the crossing day] = E[X] + Var[X] / E[X] = E[X^2] / E[X].
double expected_bump_limit(const DiscreteDist& dist);

/// Sum_tau E[(X^tau)^2] / Sum_tau E[X^tau].
double weekly_bump_limit(const WeeklySchedule& schedule);

enum class StartSlot { first, uniform };

struct CrossingOptions {
  long threshold = 1000;
  std::size_t trials = 200000;
  std::uint64_t seed = 1;
  StartSlot start = StartSlot::first;
};

struct CrossingResult {
  long threshold = 0;
  std::size_t trials = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::map<long, std::size_t> histogram;  // crossing-day draw -> trials
  std::vector<std::size_t> slot_counts;   // crossing slot -> trials
};

/// Simulates partial sums until S_n >= threshold and records the draw X_n and
/// its slot. Reproducible for a seed regardless of thread count.
CrossingResult mc_crossing(const WeeklySchedule& schedule, const CrossingOptions& options);
CrossingResult mc_crossing(const DiscreteDist& dist, const CrossingOptions& options);

struct ConvergenceRow {
  long threshold;
  double mc_mean;
  double stderr_mean;
  double analytic_limit;
};

std::vector<ConvergenceRow> convergence_table(const WeeklySchedule& schedule,
                                              const std::vector<long>& thresholds,
                                              const CrossingOptions& base);

/// ZIP(alpha, lambda) truncated where the remaining Poisson tail is below `tail`.
DiscreteDist zip_distribution(double alpha, double lambda, double tail = 1e-15);

/// Monday-to-Sunday schedule of the profile's baseline daily ZIP counts.
WeeklySchedule weekly_schedule(const core::PreferredProfile& profile);

struct GroupCurve {
  std::string group;
  std::size_t users = 0;
  std::vector<double> mean;
};

struct CenteredCurves {
  std::vector<int> relative_days;
  std::vector<GroupCurve> groups;  // "all" first, then each class present
  std::vector<std::string> warnings;

  const GroupCurve& group(const std::string& name) const;
  double at(const std::string& name, int relative_day) const;
};

/// Mean count per relative day. `labels` may be empty; otherwise one per
/// trajectory. Classes without members are omitted with a warning.
CenteredCurves centered_mean_curve(std::span<const core::ActionTrajectory> trajectories,
                                   std::span<const core::SteeringClass> labels = {});

void write_visit_csv(std::ostream& out, std::span<const double> p);
void write_curve_csv(std::ostream& out, const CenteredCurves& curves);
void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows);

}  // namespace phantom::renewal
