#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "phantom/renewal/discrete_dist.hpp"

namespace phantom::renewal {

/// Expected number of partial sums S_n equal to m, for m = 0..m_max.
/// For X > 0 this is Pr[m is visited]; mass at zero makes the walk linger,
/// scaling each value by 1/(1 - Pr[X = 0]).
std::vector<double> visit_probabilities(const DiscreteDist& dist, long m_max);

/// Block transition matrix for visit probabilities of a zero-free, gcd-1
/// distribution with max support M: the vector of p over block k+1 equals A
/// times the vector over block k. Right stochastic and primitive.
class EpochMatrix {
 public:
  explicit EpochMatrix(const DiscreteDist& zero_free_reduced);

  std::size_t order() const noexcept { return order_; }
  double operator()(std::size_t r, std::size_t s) const { return entries_[r * order_ + s]; }
  const std::vector<double>& entries() const noexcept { return entries_; }

  /// Row vector u with uA = u, sum 1.
  std::vector<double> stationary() const;
  /// A^k (row-major).
  std::vector<double> power(unsigned k) const;
  /// ||A^{k+1} - A^k||_inf for k = 0..count-1.
  std::vector<double> power_step_norms(std::size_t count) const;
  /// Block vector after k steps starting from (0, ..., 0, 1), i.e. p_{(k-1)M+1..kM}.
  std::vector<double> block(unsigned k) const;
  bool primitive() const;

 private:
  std::size_t order_;
  std::vector<double> entries_;
};

/// Builds the epoch matrix for `dist` after gcd and zero-mass reduction.
EpochMatrix epoch_matrix(const DiscreteDist& dist);

struct VisitLimit {
  long g = 1;
  double zero_mass = 0.0;
  std::vector<double> stationary;
  double limit = 0.0;  // lim p_{g n}
};

/// lim p_{g n} computed from the epoch matrix's left Perron vector.
VisitLimit epoch_visit_limit(const DiscreteDist& dist);

/// First index n such that |values[j] - limit| < tol for every j >= n.
std::optional<std::size_t> convergence_knee(std::span<const double> values, double limit, double tol);

/// Least-squares slope of log(values) against index, over positive entries.
double log_slope(std::span<const double> values);

}  // namespace phantom::renewal
