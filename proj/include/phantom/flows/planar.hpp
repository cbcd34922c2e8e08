#pragma once

// Planar normalizing flows f(z) = z + u_hat * tanh(w.z + b). u_hat is a
// reparameterization of the free vector u that keeps every layer invertible
// (w.u_hat > -1), so log|det J| = log(1 + tanh'(w.z + b) * w.u_hat) is finite.

#include <span>
#include <string>
#include <vector>

#include "phantom/ad/parameters.hpp"
#include "phantom/util/rng.hpp"

namespace phantom::flows {

struct PlanarLayer {
  ad::Var u;  // 1 x m
  ad::Var w;  // 1 x m
  ad::Var b;  // 1 x 1
};

class FlowStack {
 public:
  FlowStack() = default;
  /// Parameters drawn uniform(-init_scale, init_scale).
  FlowStack(std::string name, std::size_t dim, std::size_t layers, Rng& rng,
            double init_scale = 0.01);
  /// Layers built from explicit values (u, w of length dim).
  static FlowStack from_values(const std::string& name, std::size_t dim,
                               const std::vector<std::vector<double>>& u,
                               const std::vector<std::vector<double>>& w,
                               const std::vector<double>& b);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return layers_.size(); }
  const std::vector<PlanarLayer>& layers() const noexcept { return layers_; }
  std::vector<PlanarLayer>& layers() noexcept { return layers_; }
  void collect(ad::ParameterSet& out) const;

 private:
  std::size_t dim_ = 0;
  std::vector<PlanarLayer> layers_;
};

struct FlowOutput {
  ad::Var z;        // B x m
  ad::Var log_det;  // B x 1, sum over layers of log|det J_k|
};

/// u_hat = u + (softplus(w.u) - 1 - w.u) * w / |w|^2, or u when |w| = 0.
std::vector<double> enforce_invertibility(std::span<const double> u, std::span<const double> w);
ad::Var effective_u(const PlanarLayer& layer);

/// Pushes a batch of base points (B x m) through the stack. Throws
/// NumericalError naming the layer when an intermediate becomes non-finite.
FlowOutput flow_forward(const FlowStack& stack, const ad::Var& z0);

struct LatentSamples {
  ad::Tensor z;                      // n x m
  std::vector<double> log_density;   // log N(z0; 0, I) - log_det, per sample
};

LatentSamples sample_latent(const FlowStack& stack, Rng& rng, std::size_t n);

}  // namespace phantom::flows
