#include "phantom/ad/network.hpp"

#include <cmath>

#include "phantom/ad/ops.hpp"
#include "phantom/util/error.hpp"

namespace phantom::ad {

DenseNetwork::DenseNetwork(std::string name, std::vector<std::size_t> sizes, Activation act,
                           Rng& rng)
    : name_(std::move(name)), sizes_(std::move(sizes)), activation_(act) {
  require(sizes_.size() >= 2, "DenseNetwork needs at least input and output sizes");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t fan_in = sizes_[l], fan_out = sizes_[l + 1];
    require(fan_in > 0 && fan_out > 0, "DenseNetwork layer sizes must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> init(-limit, limit);
    Tensor w(fan_in, fan_out);
    for (double& x : w.values()) x = init(rng);
    weights_.push_back(parameter(std::move(w), name_ + ".W" + std::to_string(l)));
    biases_.push_back(parameter(Tensor(1, fan_out), name_ + ".b" + std::to_string(l)));
  }
}

Var DenseNetwork::forward(const Var& x) const {
  if (x.cols() != input_size())
    throw InvalidArgument(name_ + ": expected " + std::to_string(input_size()) +
                          " input columns, got " + std::to_string(x.cols()));
  Var h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = add(matmul(h, weights_[l]), biases_[l]);
    if (l + 1 < weights_.size()) h = activation_ == Activation::tanh ? tanh(h) : relu(h);
  }
  return h;
}

void DenseNetwork::collect(ParameterSet& out) const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.add(weights_[l]);
    out.add(biases_[l]);
  }
}

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw InvalidArgument("unknown activation '" + s + "'");
}

}  // namespace phantom::ad
