#include "phantom/ad/adam.hpp"

#include <cmath>

#include "phantom/kernels/kernels.hpp"
#include "phantom/util/error.hpp"

namespace phantom::ad {

AdamState make_adam_state(const std::vector<Var>& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const Var& p : params) {
    s.first_moment.emplace_back(p.rows(), p.cols());
    s.second_moment.emplace_back(p.rows(), p.cols());
  }
  return s;
}

void adam_step(AdamState& state, std::vector<Var>& params) {
  require(params.size() == state.first_moment.size(), "adam_step: parameter count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i].value().same_shape(state.first_moment[i]),
            "adam_step: shape mismatch for '" + params[i].name() + "'");
    const Tensor& g = params[i].grad();
    if (!g.empty() && !g.all_finite())
      throw NumericalError("non-finite gradient in parameter '" + params[i].name() + "'");
  }
  ++state.step;
  const auto& cfg = state.config;
  const double t = static_cast<double>(state.step);
  const kernels::AdamCoefficients c{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps,
                                    1.0 - std::pow(cfg.beta1, t), 1.0 - std::pow(cfg.beta2, t)};
  const auto& kt = kernels::active();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& grad = params[i].mutable_grad();
    kt.adam_update(grad.size(), params[i].mutable_value().data(), grad.data(),
                   state.first_moment[i].data(), state.second_moment[i].data(), c);
  }
}

}  // namespace phantom::ad
