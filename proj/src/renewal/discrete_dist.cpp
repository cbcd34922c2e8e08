#include "phantom/renewal/discrete_dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phantom/util/csv.hpp"
#include "phantom/util/error.hpp"

namespace phantom::renewal {

DiscreteDist::DiscreteDist(std::vector<long> support, std::vector<double> probs) {
  require(!support.empty(), "distribution needs a nonempty support");
  require(support.size() == probs.size(), "support and probabilities differ in length");
  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return support[a] < support[b]; });
  double total = 0.0;
  for (std::size_t i : order) {
    require(support[i] >= 0, "support values must be nonnegative");
    require(probs[i] > 0.0 && std::isfinite(probs[i]), "probabilities must be positive");
    if (!support_.empty()) require(support_.back() != support[i], "support values must be distinct");
    support_.push_back(support[i]);
    probs_.push_back(probs[i]);
    total += probs[i];
  }
  require(std::abs(total - 1.0) <= 1e-12, "probabilities must sum to 1 (got " + format_exact(total) + ")");
}

DiscreteDist DiscreteDist::point(long value) { return DiscreteDist({value}, {1.0}); }

DiscreteDist DiscreteDist::uniform(const std::vector<long>& values) {
  return from_weights(values, std::vector<double>(values.size(), 1.0));
}

DiscreteDist DiscreteDist::from_weights(const std::vector<long>& values,
                                        const std::vector<double>& weights) {
  require(values.size() == weights.size(), "values and weights differ in length");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0 && std::isfinite(w), "weights must be nonnegative");
    total += w;
  }
  require(total > 0.0, "weights must not all be zero");
  std::vector<long> s;
  std::vector<double> p;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (weights[i] == 0.0) continue;
    s.push_back(values[i]);
    p.push_back(weights[i] / total);
  }
  // Renormalize the rounded quotients so the sum is 1 to within an ulp or two.
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= sum;
  return DiscreteDist(std::move(s), std::move(p));
}

DiscreteDist DiscreteDist::parse(std::string_view text) {
  std::vector<long> values;
  std::vector<double> weights;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    require(parts.size() == 2, "distribution entry '" + item + "' is not value:weight");
    values.push_back(parse_long(parts[0], "distribution value"));
    weights.push_back(parse_double(parts[1], "distribution weight"));
  }
  return from_weights(values, weights);
}

double DiscreteDist::prob(long k) const {
  const auto it = std::lower_bound(support_.begin(), support_.end(), k);
  if (it == support_.end() || *it != k) return 0.0;
  return probs_[static_cast<std::size_t>(it - support_.begin())];
}

double DiscreteDist::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) m += static_cast<double>(support_[i]) * probs_[i];
  return m;
}

double DiscreteDist::second_moment() const {
  double m = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    const double x = static_cast<double>(support_[i]);
    m += x * x * probs_[i];
  }
  return m;
}

double DiscreteDist::variance() const {
  const double mu = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    const double d = static_cast<double>(support_[i]) - mu;
    v += d * d * probs_[i];
  }
  return v;
}

long DiscreteDist::gcd() const {
  long g = 0;
  for (long v : support_) g = std::gcd(g, v);
  return g;
}

DiscreteDist DiscreteDist::conditional_positive() const {
  std::vector<long> s;
  std::vector<double> w;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (support_[i] == 0) continue;
    s.push_back(support_[i]);
    w.push_back(probs_[i]);
  }
  require(!s.empty(), "X | X > 0 is undefined: all mass at zero");
  return from_weights(s, w);
}

DiscreteDist DiscreteDist::divided(long g) const {
  require(g >= 1, "divisor must be positive");
  std::vector<long> s;
  for (long v : support_) {
    require(v % g == 0, "support value " + std::to_string(v) + " not divisible by " + std::to_string(g));
    s.push_back(v / g);
  }
  return DiscreteDist(std::move(s), probs_);
}

std::string DiscreteDist::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(support_[i]) + ":" + format_exact(probs_[i]);
  }
  return out;
}

WeeklySchedule WeeklySchedule::parse(std::string_view text) {
  WeeklySchedule s;
  for (const auto& slot : split(text, ';')) s.slots.push_back(DiscreteDist::parse(slot));
  s.validate();
  return s;
}

double WeeklySchedule::total_mean() const {
  double m = 0.0;
  for (const auto& d : slots) m += d.mean();
  return m;
}

double WeeklySchedule::total_second_moment() const {
  double m = 0.0;
  for (const auto& d : slots) m += d.second_moment();
  return m;
}

long WeeklySchedule::gcd() const {
  long g = 0;
  for (const auto& d : slots) g = std::gcd(g, d.gcd());
  return g;
}

void WeeklySchedule::validate() const {
  require(!slots.empty(), "schedule needs at least one slot");
  require(total_mean() > 0.0, "schedule can never progress: every slot is identically zero");
}

bool operator==(const DiscreteDist& a, const DiscreteDist& b) {
  return a.support() == b.support() && a.probs() == b.probs();
}

WeeklySchedule minimal_period(const WeeklySchedule& schedule) {
  const std::size_t T = schedule.size();
  for (std::size_t p = 1; p < T; ++p) {
    if (T % p != 0) continue;
    bool periodic = true;
    for (std::size_t i = p; i < T && periodic; ++i) periodic = schedule.slots[i] == schedule.slots[i - p];
    if (periodic) return WeeklySchedule{{schedule.slots.begin(), schedule.slots.begin() + static_cast<long>(p)}};
  }
  return schedule;
}

Reduced<DiscreteDist> gcd_reduce(const DiscreteDist& dist) {
  const long g = dist.gcd();
  require(g > 0, "gcd_reduce: all mass at zero");
  return {dist.divided(g), g};
}

Reduced<WeeklySchedule> gcd_reduce(const WeeklySchedule& schedule) {
  const long g = schedule.gcd();
  require(g > 0, "gcd_reduce: every slot is identically zero");
  WeeklySchedule out;
  for (const auto& d : schedule.slots) out.slots.push_back(d.divided(g));
  return {std::move(out), g};
}

}  // namespace phantom::renewal
