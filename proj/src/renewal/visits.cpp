#include "phantom/renewal/visits.hpp"

#include <algorithm>
#include <cmath>

#include "phantom/util/error.hpp"

namespace phantom::renewal {
namespace {

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

std::vector<double> multiply(const std::vector<double>& a, const std::vector<double>& b, std::size_t n) {
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a[i * n + k];
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += aik * b[k * n + j];
    }
  }
  return c;
}

}  // namespace

std::vector<double> visit_probabilities(const DiscreteDist& dist, long m_max) {
  require(m_max >= 0, "m_max must be nonnegative");
  require(dist.mean() > 0.0, "visit probabilities need E[X] > 0");
  const double alpha = dist.zero_mass();
  const double linger = 1.0 / (1.0 - alpha);
  std::vector<double> p(static_cast<std::size_t>(m_max) + 1, 0.0);
  const auto& support = dist.support();
  const auto& probs = dist.probs();
  for (long m = 0; m <= m_max; ++m) {
    CompensatedSum acc;
    if (m == 0) acc.add(1.0);
    for (std::size_t i = 0; i < support.size(); ++i) {
      const long j = support[i];
      if (j == 0 || j > m) continue;
      acc.add(p[static_cast<std::size_t>(m - j)] * probs[i]);
    }
    p[static_cast<std::size_t>(m)] = acc.value() * linger;
  }
  return p;
}

EpochMatrix::EpochMatrix(const DiscreteDist& dist) : order_(static_cast<std::size_t>(dist.max_value())) {
  require(dist.zero_mass() == 0.0, "epoch matrix needs a zero-free distribution");
  require(dist.gcd() == 1, "epoch matrix needs a gcd-1 distribution");
  const std::size_t M = order_;
  // Row r (1-based) expresses p_{kM+r} in terms of the previous block
  // (p_{(k-1)M+1..kM}); steps landing inside the current block reuse the rows
  // already built.
  entries_.assign(M * M, 0.0);
  for (std::size_t r = 1; r <= M; ++r) {
    double* row = &entries_[(r - 1) * M];
    for (std::size_t j = r; j <= M; ++j) row[M + r - j - 1] += dist.prob(static_cast<long>(j));
    for (std::size_t j = 1; j < r; ++j) {
      const double pj = dist.prob(static_cast<long>(j));
      if (pj == 0.0) continue;
      const double* prev = &entries_[(r - j - 1) * M];
      for (std::size_t s = 0; s < M; ++s) row[s] += pj * prev[s];
    }
  }
  for (std::size_t r = 0; r < M; ++r) {
    double total = 0.0;
    for (std::size_t s = 0; s < M; ++s) total += entries_[r * M + s];
    if (std::abs(total - 1.0) > 1e-12) throw NumericalError("epoch matrix row does not sum to 1");
  }
}

bool EpochMatrix::primitive() const {
  const std::size_t n = order_;
  std::vector<char> base(n * n), cur(n * n);
  for (std::size_t i = 0; i < n * n; ++i) base[i] = cur[i] = entries_[i] > 0.0;
  const std::size_t bound = (n - 1) * (n - 1) + 1;
  for (std::size_t step = 1; step <= bound; ++step) {
    if (std::all_of(cur.begin(), cur.end(), [](char c) { return c != 0; })) return true;
    std::vector<char> next(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        if (cur[i * n + k])
          for (std::size_t j = 0; j < n; ++j) next[i * n + j] |= base[k * n + j];
    cur.swap(next);
  }
  return std::all_of(cur.begin(), cur.end(), [](char c) { return c != 0; });
}

std::vector<double> EpochMatrix::stationary() const {
  const std::size_t n = order_;
  // Solve (A^T - I) u = 0 with the last equation replaced by sum(u) = 1.
  std::vector<double> m(n * (n + 1), 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return m[r * (n + 1) + c]; };
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) at(r, c) = entries_[c * n + r] - (r == c ? 1.0 : 0.0);
  }
  for (std::size_t c = 0; c < n; ++c) at(n - 1, c) = 1.0;
  at(n - 1, n) = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(at(r, col)) > std::abs(at(pivot, col))) pivot = r;
    if (std::abs(at(pivot, col)) < 1e-300) throw NumericalError("epoch matrix stationary system is singular");
    if (pivot != col)
      for (std::size_t c = 0; c <= n; ++c) std::swap(at(pivot, c), at(col, c));
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = at(r, col) / at(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c <= n; ++c) at(r, c) -= f * at(col, c);
    }
  }
  std::vector<double> u(n);
  for (std::size_t r = 0; r < n; ++r) u[r] = at(r, n) / at(r, r);
  return u;
}

std::vector<double> EpochMatrix::power(unsigned k) const {
  const std::size_t n = order_;
  std::vector<double> result(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) result[i * n + i] = 1.0;
  std::vector<double> base = entries_;
  while (k > 0) {
    if (k & 1U) result = multiply(result, base, n);
    k >>= 1U;
    if (k) base = multiply(base, base, n);
  }
  return result;
}

std::vector<double> EpochMatrix::power_step_norms(std::size_t count) const {
  const std::size_t n = order_;
  std::vector<double> norms;
  std::vector<double> cur(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) cur[i * n + i] = 1.0;
  for (std::size_t k = 0; k < count; ++k) {
    auto next = multiply(cur, entries_, n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += std::abs(next[i * n + j] - cur[i * n + j]);
      norm = std::max(norm, row);
    }
    norms.push_back(norm);
    cur.swap(next);
  }
  return norms;
}

std::vector<double> EpochMatrix::block(unsigned k) const {
  const std::size_t n = order_;
  std::vector<double> q(n, 0.0);
  q[n - 1] = 1.0;
  for (unsigned step = 0; step < k; ++step) {
    std::vector<double> next(n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t s = 0; s < n; ++s) next[r] += entries_[r * n + s] * q[s];
    q.swap(next);
  }
  return q;
}

namespace {

DiscreteDist zero_free_reduced(const DiscreteDist& dist, long* g) {
  const auto reduced = gcd_reduce(dist);
  *g = reduced.g;
  return reduced.value.zero_mass() > 0.0 ? reduced.value.conditional_positive() : reduced.value;
}

}  // namespace

EpochMatrix epoch_matrix(const DiscreteDist& dist) {
  long g = 1;
  EpochMatrix a(zero_free_reduced(dist, &g));
  if (!a.primitive()) throw NumericalError("epoch matrix is not primitive");
  return a;
}

VisitLimit epoch_visit_limit(const DiscreteDist& dist) {
  VisitLimit out;
  const auto reduced = gcd_reduce(dist);
  out.g = reduced.g;
  out.zero_mass = reduced.value.zero_mass();
  const EpochMatrix a = epoch_matrix(dist);
  out.stationary = a.stationary();
  out.limit = out.stationary.back() / (1.0 - out.zero_mass);
  return out;
}

std::optional<std::size_t> convergence_knee(std::span<const double> values, double limit, double tol) {
  std::optional<std::size_t> knee;
  for (std::size_t i = values.size(); i-- > 0;) {
    if (!(std::abs(values[i] - limit) < tol)) break;
    knee = i;
  }
  return knee;
}

double log_slope(std::span<const double> values) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) continue;
    const double x = static_cast<double>(i);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  require(n >= 2, "log_slope needs at least two positive values");
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace phantom::renewal
