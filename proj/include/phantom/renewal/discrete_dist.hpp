#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace phantom::renewal {

/// Finite-support distribution on the nonnegative integers. Support is kept
/// sorted ascending; every listed probability is positive and they sum to 1.
class DiscreteDist {
 public:
  DiscreteDist(std::vector<long> support, std::vector<double> probs);

  static DiscreteDist point(long value);
  static DiscreteDist uniform(const std::vector<long>& values);
  /// Normalizes nonnegative weights; zero-weight values are dropped.
  static DiscreteDist from_weights(const std::vector<long>& values, const std::vector<double>& weights);
  /// "value:weight,value:weight,..." (weights normalized).
  static DiscreteDist parse(std::string_view text);

  const std::vector<long>& support() const noexcept { return support_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  double prob(long k) const;
  double mean() const;
  double second_moment() const;
  double variance() const;
  long max_value() const { return support_.back(); }
  double zero_mass() const { return prob(0); }
  /// gcd of the support (0 when the support is {0}).
  long gcd() const;

  /// Distribution of X | X > 0. Requires some positive support.
  DiscreteDist conditional_positive() const;
  /// Distribution of X / g; every support value must be divisible by g.
  DiscreteDist divided(long g) const;

  std::string to_string() const;

 private:
  std::vector<long> support_;
  std::vector<double> probs_;
};

/// Distributions drawn in turn: slot 0, 1, ..., T-1, 0, 1, ...
struct WeeklySchedule {
  std::vector<DiscreteDist> slots;

  /// Slots separated by ';', each in DiscreteDist::parse syntax.
  static WeeklySchedule parse(std::string_view text);
  std::size_t size() const noexcept { return slots.size(); }
  double total_mean() const;
  double total_second_moment() const;
  long gcd() const;
  void validate() const;
};

bool operator==(const DiscreteDist& a, const DiscreteDist& b);

/// Shortest prefix whose repetition reproduces the schedule.
WeeklySchedule minimal_period(const WeeklySchedule& schedule);

template <class T>
struct Reduced {
  T value;
  long g;
};

/// Divides the support by its gcd. Throws InvalidArgument when all mass is at 0.
Reduced<DiscreteDist> gcd_reduce(const DiscreteDist& dist);
Reduced<WeeklySchedule> gcd_reduce(const WeeklySchedule& schedule);

}  // namespace phantom::renewal
