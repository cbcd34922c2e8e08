#include "phantom/flows/planar.hpp"

#include <cmath>
#include <numbers>

#include "phantom/ad/ops.hpp"
#include "phantom/util/error.hpp"

namespace phantom::flows {

using ad::Tensor;
using ad::Var;

FlowStack::FlowStack(std::string name, std::size_t dim, std::size_t layers, Rng& rng,
                     double init_scale)
    : dim_(dim) {
  require(dim > 0, "flow dimension must be positive");
  std::uniform_real_distribution<double> init(-init_scale, init_scale);
  auto draw = [&](std::size_t cols) {
    Tensor t(1, cols);
    for (double& x : t.values()) x = init(rng);
    return t;
  };
  for (std::size_t k = 0; k < layers; ++k) {
    const std::string p = name + "." + std::to_string(k);
    // Drawn in a fixed order (u, w, b) so checkpoints are seed-stable.
    Tensor u = draw(dim), w = draw(dim), b = draw(1);
    layers_.push_back({ad::parameter(std::move(u), p + ".u"), ad::parameter(std::move(w), p + ".w"),
                       ad::parameter(std::move(b), p + ".b")});
  }
}

FlowStack FlowStack::from_values(const std::string& name, std::size_t dim,
                                 const std::vector<std::vector<double>>& u,
                                 const std::vector<std::vector<double>>& w,
                                 const std::vector<double>& b) {
  require(u.size() == w.size() && w.size() == b.size(), "from_values: layer count mismatch");
  FlowStack s;
  s.dim_ = dim;
  for (std::size_t k = 0; k < u.size(); ++k) {
    require(u[k].size() == dim && w[k].size() == dim, "from_values: vector length mismatch");
    const std::string p = name + "." + std::to_string(k);
    s.layers_.push_back({ad::parameter(Tensor::row(u[k]), p + ".u"),
                         ad::parameter(Tensor::row(w[k]), p + ".w"),
                         ad::parameter(Tensor::scalar(b[k]), p + ".b")});
  }
  return s;
}

void FlowStack::collect(ad::ParameterSet& out) const {
  for (const auto& l : layers_) {
    out.add(l.u);
    out.add(l.w);
    out.add(l.b);
  }
}

std::vector<double> enforce_invertibility(std::span<const double> u, std::span<const double> w) {
  require(u.size() == w.size(), "enforce_invertibility: length mismatch");
  double wu = 0.0, ww = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    wu += w[i] * u[i];
    ww += w[i] * w[i];
  }
  std::vector<double> out(u.begin(), u.end());
  if (ww == 0.0) return out;
  const double coeff = (ad::softplus(wu) - 1.0 - wu) / ww;
  for (std::size_t i = 0; i < u.size(); ++i) out[i] += coeff * w[i];
  return out;
}

Var effective_u(const PlanarLayer& layer) {
  const Var ww = ad::sum(ad::square(layer.w));
  if (ww.item() == 0.0) return layer.u;
  const Var wu = ad::sum(ad::mul(layer.w, layer.u));
  const Var coeff = ad::sub(ad::add_scalar(ad::softplus(wu), -1.0), wu);
  return ad::add(layer.u, ad::mul(ad::div(coeff, ww), layer.w));
}

FlowOutput flow_forward(const FlowStack& stack, const Var& z0) {
  require(z0.cols() == stack.dim(), "flow_forward: expected " + std::to_string(stack.dim()) +
                                        " columns, got " + std::to_string(z0.cols()));
  if (!z0.value().all_finite()) throw NumericalError("flow_forward: non-finite base sample");
  Var z = z0;
  Var log_det = ad::constant(Tensor(z0.rows(), 1));
  for (std::size_t k = 0; k < stack.size(); ++k) {
    const PlanarLayer& layer = stack.layers()[k];
    const Var u_hat = effective_u(layer);
    const Var h = ad::tanh(ad::add(ad::sum_cols(ad::mul(z, layer.w)), layer.b));  // B x 1
    z = ad::add(z, ad::mul(h, u_hat));
    const Var w_dot_u = ad::sum(ad::mul(layer.w, u_hat));
    const Var slope = ad::add_scalar(ad::neg(ad::square(h)), 1.0);  // tanh'
    const Var det = ad::add_scalar(ad::mul(slope, w_dot_u), 1.0);
    log_det = ad::add(log_det, ad::log(det));
    if (!z.value().all_finite() || !log_det.value().all_finite())
      throw NumericalError("flow_forward: non-finite value after planar layer " +
                           std::to_string(k));
  }
  return {z, log_det};
}

LatentSamples sample_latent(const FlowStack& stack, Rng& rng, std::size_t n) {
  const std::size_t m = stack.dim();
  LatentSamples out{Tensor(n, m), std::vector<double>(n)};
  std::normal_distribution<double> normal;
  const double log_norm = -0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi);
  constexpr std::size_t kChunk = 1 << 15;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t rows = std::min(kChunk, n - start);
    Tensor z0(rows, m);
    for (double& x : z0.values()) x = normal(rng);
    const FlowOutput f = flow_forward(stack, ad::constant(z0));
    for (std::size_t r = 0; r < rows; ++r) {
      double sq = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        sq += z0(r, c) * z0(r, c);
        out.z(start + r, c) = f.z.value()(r, c);
      }
      out.log_density[start + r] = log_norm - 0.5 * sq - f.log_det.value()(r, 0);
    }
  }
  return out;
}

}  // namespace phantom::flows
