#include "phantom/renewal/bump.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "phantom/ad/ops.hpp"
#include "phantom/util/csv.hpp"
#include "phantom/util/error.hpp"
#include "phantom/util/parallel.hpp"
#include "phantom/util/rng.hpp"

namespace phantom::renewal {

double expected_bump_limit(const DiscreteDist& dist) {
  const double mu = dist.mean();
  require(mu > 0.0, "bump limit needs E[X] > 0");
  return dist.second_moment() / mu;
}

double weekly_bump_limit(const WeeklySchedule& schedule) {
  require(!schedule.slots.empty(), "schedule needs at least one slot");
  const WeeklySchedule cycle = minimal_period(schedule);
  const double mu = cycle.total_mean();
  require(mu > 0.0, "bump limit needs a schedule with positive total mean");
  return cycle.total_second_moment() / mu;
}

namespace {

// Inverse-CDF lookup over a small support.
class SlotSampler {
 public:
  explicit SlotSampler(const DiscreteDist& d) : values_(d.support()) {
    double c = 0.0;
    for (double p : d.probs()) cumulative_.push_back(c += p);
    cumulative_.back() = 1.0;
  }
  long operator()(Rng& rng) const {
    if (values_.size() == 1) return values_[0];
    const double u = std::generate_canonical<double, 53>(rng);
    std::size_t i = 0;
    while (u >= cumulative_[i]) ++i;
    return values_[i];
  }

 private:
  std::vector<long> values_;
  std::vector<double> cumulative_;
};

struct ChunkTally {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::map<long, std::size_t> histogram;
  std::vector<std::size_t> slots;
};

constexpr std::size_t kTrialChunk = 4096;

}  // namespace

CrossingResult mc_crossing(const WeeklySchedule& schedule, const CrossingOptions& options) {
  schedule.validate();
  require(options.threshold >= 1, "threshold must be at least 1");
  require(options.trials >= 1, "trials must be at least 1");
  const std::size_t T = schedule.size();
  std::vector<SlotSampler> samplers;
  for (const auto& d : schedule.slots) samplers.emplace_back(d);

  const std::size_t chunks = chunk_count(options.trials, kTrialChunk);
  std::vector<ChunkTally> tallies(chunks);
  parallel_for(options.trials, kTrialChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    Rng rng = stream_rng(options.seed, c);
    ChunkTally& t = tallies[c];
    t.slots.assign(T, 0);
    for (std::size_t trial = begin; trial < end; ++trial) {
      std::size_t slot = 0;
      if (options.start == StartSlot::uniform) slot = std::uniform_int_distribution<std::size_t>(0, T - 1)(rng);
      long s = 0;
      long x = 0;
      for (;;) {
        x = samplers[slot](rng);
        s += x;
        if (s >= options.threshold) break;
        if (++slot == T) slot = 0;
      }
      const double xd = static_cast<double>(x);
      t.sum += xd;
      t.sum_sq += xd * xd;
      ++t.histogram[x];
      ++t.slots[slot];
    }
  });

  CrossingResult r;
  r.threshold = options.threshold;
  r.trials = options.trials;
  r.slot_counts.assign(T, 0);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& t : tallies) {
    sum += t.sum;
    sum_sq += t.sum_sq;
    for (const auto& [k, v] : t.histogram) r.histogram[k] += v;
    for (std::size_t i = 0; i < T; ++i) r.slot_counts[i] += t.slots[i];
  }
  const double n = static_cast<double>(options.trials);
  r.mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * r.mean * r.mean) / (n - 1)) : 0.0;
  r.stderr_mean = std::sqrt(var / n);
  return r;
}

CrossingResult mc_crossing(const DiscreteDist& dist, const CrossingOptions& options) {
  return mc_crossing(WeeklySchedule{{dist}}, options);
}

std::vector<ConvergenceRow> convergence_table(const WeeklySchedule& schedule,
                                              const std::vector<long>& thresholds,
                                              const CrossingOptions& base) {
  const double limit = weekly_bump_limit(schedule);
  std::vector<ConvergenceRow> rows;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    CrossingOptions o = base;
    o.threshold = thresholds[i];
    o.seed = splitmix64(base.seed + i);
    const auto r = mc_crossing(schedule, o);
    rows.push_back({thresholds[i], r.mean, r.stderr_mean, limit});
  }
  return rows;
}

DiscreteDist zip_distribution(double alpha, double lambda, double tail) {
  require(alpha > 0.0 && alpha <= 1.0, "ZIP activity must lie in (0, 1]");
  require(lambda > 0.0 && std::isfinite(lambda), "ZIP rate must be positive");
  require(tail > 0.0 && tail < 1.0, "tail must lie in (0, 1)");
  std::vector<long> values;
  std::vector<double> weights;
  double pk = std::exp(-lambda);
  double cdf = 0.0;
  for (long k = 0;; ++k) {
    if (k > 0) pk *= lambda / static_cast<double>(k);
    cdf += pk;
    values.push_back(k);
    weights.push_back(alpha * pk + (k == 0 ? 1.0 - alpha : 0.0));
    if (static_cast<double>(k) > lambda && 1.0 - cdf < tail) break;
    require(k < 100000, "ZIP rate too large to tabulate");
  }
  return DiscreteDist::from_weights(values, weights);
}

WeeklySchedule weekly_schedule(const core::PreferredProfile& profile) {
  profile.validate();
  WeeklySchedule s;
  for (int d = 0; d < core::kDaysPerWeek; ++d) {
    const double a = std::clamp(ad::sigmoid(profile.p1_week[d]), 1e-7, 1.0);
    s.slots.push_back(zip_distribution(a, ad::softplus(profile.p2_week[d])));
  }
  return s;
}

const GroupCurve& CenteredCurves::group(const std::string& name) const {
  for (const auto& g : groups)
    if (g.group == name) return g;
  throw InvalidArgument("no curve for group '" + name + "'");
}

double CenteredCurves::at(const std::string& name, int relative_day) const {
  const auto it = std::find(relative_days.begin(), relative_days.end(), relative_day);
  require(it != relative_days.end(), "relative day " + std::to_string(relative_day) + " outside the curve");
  return group(name).mean[static_cast<std::size_t>(it - relative_days.begin())];
}

CenteredCurves centered_mean_curve(std::span<const core::ActionTrajectory> trajectories,
                                   std::span<const core::SteeringClass> labels) {
  require(!trajectories.empty(), "centered curve needs at least one trajectory");
  require(labels.empty() || labels.size() == trajectories.size(),
          "labels must be empty or one per trajectory");
  const std::size_t D = trajectories.front().counts.size();
  const int day0 = trajectories.front().day0_index;
  for (const auto& t : trajectories) {
    t.validate();
    require(t.counts.size() == D && t.day0_index == day0,
            "trajectory " + t.user_id + " is not aligned with the others");
  }
  CenteredCurves out;
  for (std::size_t d = 0; d < D; ++d) out.relative_days.push_back(static_cast<int>(d) - day0);

  auto curve = [&](const std::string& name, auto&& member) {
    GroupCurve g{name, 0, std::vector<double>(D, 0.0)};
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      if (!member(i)) continue;
      ++g.users;
      for (std::size_t d = 0; d < D; ++d) g.mean[d] += trajectories[i].counts[d];
    }
    for (double& v : g.mean) v /= static_cast<double>(std::max<std::size_t>(g.users, 1));
    return g;
  };
  out.groups.push_back(curve("all", [](std::size_t) { return true; }));
  if (!labels.empty()) {
    for (auto cls : {core::SteeringClass::non_steerer, core::SteeringClass::other,
                     core::SteeringClass::strong_steerer}) {
      auto g = curve(core::to_string(cls), [&](std::size_t i) { return labels[i] == cls; });
      if (g.users == 0) {
        out.warnings.push_back("group " + g.group + " is empty; omitted");
      } else {
        out.groups.push_back(std::move(g));
      }
    }
  }
  return out;
}

void write_visit_csv(std::ostream& out, std::span<const double> p) {
  out << "m,p_m\n";
  for (std::size_t m = 0; m < p.size(); ++m) out << m << ',' << format_fixed(p[m], 12) << '\n';
}

void write_curve_csv(std::ostream& out, const CenteredCurves& curves) {
  out << "relative_day,group,mean_count\n";
  for (const auto& g : curves.groups)
    for (std::size_t d = 0; d < curves.relative_days.size(); ++d)
      out << curves.relative_days[d] << ',' << g.group << ',' << format_fixed(g.mean[d], 6) << '\n';
}

void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows) {
  out << "N,mc_mean,stderr,analytic_limit\n";
  for (const auto& r : rows)
    out << r.threshold << ',' << format_fixed(r.mc_mean, 6) << ',' << format_fixed(r.stderr_mean, 6) << ','
        << format_fixed(r.analytic_limit, 6) << '\n';
}

}  // namespace phantom::renewal
