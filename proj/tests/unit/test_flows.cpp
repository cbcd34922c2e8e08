#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gradcheck.hpp"
#include "phantom/ad/parameters.hpp"
#include "phantom/flows/planar.hpp"
#include "phantom/util/error.hpp"

using namespace phantom;
using namespace phantom::ad;
using namespace phantom::flows;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

FlowStack random_stack(std::size_t m, std::size_t layers, std::uint64_t seed, double scale) {
  Rng rng(seed);
  return FlowStack("flow", m, layers, rng, scale);
}

std::vector<double> push(const FlowStack& s, const std::vector<double>& z0) {
  const auto out = flow_forward(s, constant(Tensor(1, z0.size(), z0)));
  return {out.z.value().values().begin(), out.z.value().values().end()};
}

// log|det| of a small dense matrix by Gaussian elimination.
double log_abs_det(std::vector<double> a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[p * n + c])) p = r;
    for (std::size_t k = 0; k < n; ++k) std::swap(a[p * n + k], a[c * n + k]);
    acc += std::log(std::abs(a[c * n + c]));
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("reparameterized u keeps every layer invertible") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> u(4), w(4);
    for (auto& x : u) x = n(rng);
    for (auto& x : w) x = n(rng);
    if (trial % 3 == 0)
      for (std::size_t i = 0; i < 4; ++i) u[i] = -5.0 * w[i];  // strongly anti-aligned
    const auto uh = enforce_invertibility(u, w);
    const double wu = dot(w, u);
    CHECK(dot(w, uh) >= -1.0 - 1e-12);
    CHECK(dot(w, uh) == doctest::Approx(std::log1p(std::exp(-std::abs(wu))) + std::max(wu, 0.0) - 1.0)
                            .epsilon(1e-9)
                            .scale(1.0));
  }
  const std::vector<double> zero_w{0.0, 0.0};
  const std::vector<double> u{1.5, -2.0};
  CHECK(enforce_invertibility(u, zero_w) == u);
}

TEST_CASE("log-determinant matches the dense Jacobian for small dimensions") {
  for (std::size_t m : {1u, 2u, 3u}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const FlowStack s = random_stack(m, 6, seed, 1.0);
      std::mt19937_64 rng(seed + 100);
      std::normal_distribution<double> normal;
      std::vector<double> z0(m);
      for (auto& x : z0) x = normal(rng);
      const auto out = flow_forward(s, constant(Tensor(1, m, z0)));
      std::vector<double> jac(m * m);
      const double h = 1e-6;
      for (std::size_t j = 0; j < m; ++j) {
        auto up = z0, down = z0;
        up[j] += h;
        down[j] -= h;
        const auto fu = push(s, up);
        const auto fd = push(s, down);
        for (std::size_t i = 0; i < m; ++i) jac[i * m + j] = (fu[i] - fd[i]) / (2 * h);
      }
      CAPTURE(m);
      CHECK(std::abs(out.log_det.value()[0] - log_abs_det(jac, m)) < 1e-5);
    }
  }
}

TEST_CASE("one-dimensional flow density integrates to one") {
  const FlowStack s = random_stack(1, 8, 9, 1.5);
  // Integrate p(z_K) dz_K by walking a fine grid of base points; the map is
  // monotone so consecutive images bracket the integration cells.
  const std::size_t n = 200001;
  Tensor z0(n, 1);
  for (std::size_t i = 0; i < n; ++i) z0[i] = -9.0 + 18.0 * static_cast<double>(i) / (n - 1);
  const auto out = flow_forward(s, constant(z0));
  double total = 0.0;
  auto density = [&](std::size_t i) {
    return std::exp(-0.5 * z0[i] * z0[i] - out.log_det.value()[i]) / std::sqrt(2 * std::numbers::pi);
  };
  for (std::size_t i = 1; i < n; ++i) {
    const double dz = out.z.value()[i] - out.z.value()[i - 1];
    CHECK_MESSAGE(dz > 0.0, "flow is not monotone");
    total += 0.5 * (density(i) + density(i - 1)) * dz;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("flow outputs are differentiable in parameters and inputs") {
  FlowStack s = random_stack(3, 4, 21, 0.8);
  ParameterSet ps;
  s.collect(ps);
  CHECK(ps.size() == 12);
  Var z0 = parameter(Tensor(2, 3, std::vector<double>{0.3, -1.0, 0.8, 1.2, 0.1, -0.4}), "z0");
  auto params = ps.vars();
  params.push_back(z0);
  const auto g = testing::grad_check(params, [&] {
    const auto out = flow_forward(s, z0);
    return sum(add(sum_cols(square(out.z)), scale(out.log_det, 0.7)));
  });
  CAPTURE(g.where);
  CHECK(g.max_rel_error < 1e-4);
}

TEST_CASE("default-size stack is finite and invertible on wide inputs") {
  const FlowStack s = random_stack(20, 12, 4, 0.01);
  for (const auto& l : s.layers()) {
    const auto uh = enforce_invertibility(l.u.value().values(), l.w.value().values());
    CHECK(dot({l.w.value().values().begin(), l.w.value().values().end()}, uh) > -1.0);
  }
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 4.0);
  Tensor z0(256, 20);
  for (double& x : z0.values()) x = normal(rng);
  const auto out = flow_forward(s, constant(z0));
  CHECK(out.z.value().all_finite());
  CHECK(out.log_det.value().all_finite());
}

TEST_CASE("explicit layers reproduce the planar formula") {
  const auto s = FlowStack::from_values("f", 2, {{0.5, -0.25}}, {{1.0, 2.0}}, {0.1});
  const std::vector<double> z0{0.4, -0.3};
  const auto uh = enforce_invertibility(std::vector<double>{0.5, -0.25}, std::vector<double>{1.0, 2.0});
  const double a = 1.0 * 0.4 + 2.0 * -0.3 + 0.1;
  const auto z = push(s, z0);
  CHECK(z[0] == doctest::Approx(0.4 + uh[0] * std::tanh(a)));
  CHECK(z[1] == doctest::Approx(-0.3 + uh[1] * std::tanh(a)));
  const auto out = flow_forward(s, constant(Tensor(1, 2, z0)));
  const double t = std::tanh(a);
  CHECK(out.log_det.value()[0] == doctest::Approx(std::log(1 + (1 - t * t) * (uh[0] + 2 * uh[1]))));
}

TEST_CASE("non-finite inputs raise a numerical error") {
  const FlowStack s = random_stack(2, 3, 1, 0.01);
  CHECK_THROWS_AS(flow_forward(s, constant(Tensor(1, 2, std::vector<double>{std::nan(""), 0.0}))),
                  NumericalError);
  CHECK_THROWS_AS(flow_forward(s, constant(Tensor(1, 3))), InvalidArgument);
}

TEST_CASE("latent sampling is reproducible and its density is consistent") {
  const FlowStack s = random_stack(2, 3, 8, 0.5);
  Rng a(77), b(77);
  const auto x = sample_latent(s, a, 500);
  const auto y = sample_latent(s, b, 500);
  CHECK(x.z.rows() == 500);
  for (std::size_t i = 0; i < x.z.size(); ++i) CHECK(x.z[i] == y.z[i]);
  for (double ld : x.log_density) CHECK(std::isfinite(ld));
}

TEST_CASE("zero effective u gives the identity flow") {
  const auto zero = FlowStack::from_values("f", 3, {{0, 0, 0}, {0, 0, 0}}, {{0, 0, 0}, {0, 0, 0}}, {0.4, -1.0});
  const std::vector<double> z0{0.3, -2.0, 1.1};
  const auto out = flow_forward(zero, constant(Tensor(1, 3, z0)));
  for (std::size_t i = 0; i < 3; ++i) CHECK(out.z.value()[i] == z0[i]);
  CHECK(out.log_det.value()[0] == 0.0);

  // With w != 0 the reparameterization maps u = log(e - 1) w / |w|^2 to u_hat = 0.
  const std::vector<double> w{0.5, -1.0, 2.0};
  const double c = std::log(std::numbers::e - 1.0) / dot(w, w);
  const std::vector<double> u{c * w[0], c * w[1], c * w[2]};
  for (double x : enforce_invertibility(u, w)) CHECK(std::abs(x) < 1e-15);
  const auto s = FlowStack::from_values("g", 3, {u}, {w}, {0.2});
  const auto out2 = flow_forward(s, constant(Tensor(1, 3, z0)));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(out2.z.value()[i] - z0[i]) < 1e-14);
  CHECK(std::abs(out2.log_det.value()[0]) < 1e-14);
}

TEST_CASE("one-dimensional single layer: derivative matches finite differences") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = FlowStack::from_values("f", 1, {{n(rng)}}, {{n(rng)}}, {n(rng)});
    const double z = n(rng), h = 1e-6;
    const double numeric = (push(s, {z + h})[0] - push(s, {z - h})[0]) / (2 * h);
    const double analytic = std::exp(flow_forward(s, constant(Tensor::scalar(z))).log_det.value()[0]);
    CHECK(std::abs(numeric - analytic) / analytic < 1e-6);
  }
}

TEST_CASE("invertibility constraint: direct value and property sweep") {
  const std::vector<double> e1{1.0, 0.0, 0.0}, u{-5.0, 0.0, 0.0};
  const auto uh = enforce_invertibility(u, e1);
  const double expected = std::log1p(std::exp(-5.0)) - 1.0;
  CHECK(dot(e1, uh) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(dot(e1, uh) > -1.0);

  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 2.0);
  // w.u_hat + 1 = softplus(w.u) exactly; once softplus(w.u) drops below the
  // rounding level of the dot product the strict margin is not representable.
  std::size_t violations = 0, below_rounding = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    std::vector<double> a(5), b(5);
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    const double wuh = dot(b, enforce_invertibility(a, b));
    if (dot(a, b) < -30.0) {
      ++below_rounding;
      if (!(wuh >= -1.0 - 1e-12)) ++violations;
    } else if (!(wuh > -1.0)) {
      ++violations;
    }
  }
  CHECK(violations == 0);
  CHECK(below_rounding < 1000);
}

TEST_CASE("identity flow samples are standard normal") {
  const FlowStack s = random_stack(2, 0, 1, 0.0);
  Rng rng(5);
  const auto smp = sample_latent(s, rng, 1000000);
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < smp.z.rows(); ++r) mean += smp.z(r, c);
    mean /= static_cast<double>(smp.z.rows());
    for (std::size_t r = 0; r < smp.z.rows(); ++r) sq += (smp.z(r, c) - mean) * (smp.z(r, c) - mean);
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(sq / static_cast<double>(smp.z.rows()) - 1.0) < 0.02);
  }
}

namespace {

// Inverts a planar stack layer by layer: w.y + b = a + w.u_hat tanh(a) is
// strictly increasing in a, so a is found by bisection.
std::vector<double> invert(const FlowStack& s, std::vector<double> y) {
  for (std::size_t k = s.size(); k-- > 0;) {
    const auto& l = s.layers()[k];
    const std::vector<double> w(l.w.value().values().begin(), l.w.value().values().end());
    const auto uh = enforce_invertibility(l.u.value().values(), l.w.value().values());
    const double target = dot(w, y) + l.b.value()[0], wu = dot(w, uh);
    double lo = -1e3, hi = 1e3;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mid + wu * std::tanh(mid) < target ? lo : hi) = mid;
    }
    const double t = std::tanh(0.5 * (lo + hi));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= uh[i] * t;
  }
  return y;
}

}  // namespace

TEST_CASE("change of variables by numerical inversion") {
  for (std::size_t m : {1u, 2u, 3u}) {
    const FlowStack s = random_stack(m, 4, 40 + m, 1.2);
    Rng rng(m);
    const auto smp = sample_latent(s, rng, 50);
    for (std::size_t r = 0; r < 50; ++r) {
      std::vector<double> zk(m);
      for (std::size_t c = 0; c < m; ++c) zk[c] = smp.z(r, c);
      const auto z0 = invert(s, zk);
      const auto back = push(s, z0);
      for (std::size_t c = 0; c < m; ++c) REQUIRE(std::abs(back[c] - zk[c]) < 1e-9);
      std::vector<double> jac(m * m);
      const double h = 1e-6;
      for (std::size_t j = 0; j < m; ++j) {
        auto up = z0, down = z0;
        up[j] += h;
        down[j] -= h;
        const auto fu = push(s, up), fd = push(s, down);
        for (std::size_t i = 0; i < m; ++i) jac[i * m + j] = (fu[i] - fd[i]) / (2 * h);
      }
      const double log_base = -0.5 * dot(z0, z0) - 0.5 * static_cast<double>(m) * std::log(2 * std::numbers::pi);
      CHECK(std::abs(log_base - log_abs_det(jac, m) - smp.log_density[r]) < 1e-4);
    }
  }
}

TEST_CASE("one layer in one dimension: sample histogram matches the density") {
  const auto s = FlowStack::from_values("f", 1, {{1.5}}, {{2.0}}, {0.3});
  Rng rng(7);
  constexpr std::size_t kN = 1000000;
  const auto smp = sample_latent(s, rng, kN);
  constexpr int kBins = 100;
  const double lo = -5.0, hi = 5.0, width = (hi - lo) / kBins;
  std::vector<double> hist(kBins, 0.0);
  std::size_t outside = 0;
  for (std::size_t r = 0; r < kN; ++r) {
    const double z = smp.z(r, 0);
    if (z < lo || z >= hi) {
      ++outside;
      continue;
    }
    hist[static_cast<std::size_t>((z - lo) / width)] += 1.0 / kN;
  }
  // Exact bin mass: Phi(f^-1(right edge)) - Phi(f^-1(left edge)).
  auto cdf = [&](double edge) { return 0.5 * std::erfc(-invert(s, {edge})[0] / std::sqrt(2.0)); };
  double tv = 0.0, inside = 0.0;
  for (int b = 0; b < kBins; ++b) {
    const double p = cdf(lo + (b + 1) * width) - cdf(lo + b * width);
    inside += p;
    tv += std::abs(hist[b] - p);
  }
  tv += std::abs(static_cast<double>(outside) / kN - (1.0 - inside));
  CHECK(0.5 * tv < 0.01);
}
