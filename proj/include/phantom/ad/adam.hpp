#pragma once

#include <cstdint>
#include <vector>

#include "phantom/ad/var.hpp"

namespace phantom::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

AdamState make_adam_state(const std::vector<Var>& params, AdamConfig config = {});

/// One bias-corrected Adam descent step on the accumulated grads of `params`.
/// Throws NumericalError naming the parameter if any gradient is not finite;
/// in that case no parameter is modified.
void adam_step(AdamState& state, std::vector<Var>& params);

}  // namespace phantom::ad
