#pragma once

#include <string>
#include <vector>

#include "phantom/ad/parameters.hpp"
#include "phantom/util/rng.hpp"

namespace phantom::ad {

enum class Activation { tanh, relu };

/// Fully connected network: affine + nonlinearity on hidden layers, linear output.
class DenseNetwork {
 public:
  DenseNetwork() = default;
  /// Glorot-uniform weights, zero biases. sizes = {in, hidden..., out}.
  DenseNetwork(std::string name, std::vector<std::size_t> sizes, Activation act, Rng& rng);

  Var forward(const Var& x) const;

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  Activation activation() const noexcept { return activation_; }
  std::size_t layer_count() const noexcept { return weights_.size(); }
  Var& weight(std::size_t layer) { return weights_.at(layer); }
  Var& bias(std::size_t layer) { return biases_.at(layer); }
  const Var& weight(std::size_t layer) const { return weights_.at(layer); }
  const Var& bias(std::size_t layer) const { return biases_.at(layer); }

  void collect(ParameterSet& out) const;

 private:
  std::string name_;
  std::vector<std::size_t> sizes_;
  Activation activation_ = Activation::tanh;
  std::vector<Var> weights_;  // in x out
  std::vector<Var> biases_;   // 1 x out
};

inline Var mlp_forward(const DenseNetwork& net, const Var& x) { return net.forward(x); }

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

}  // namespace phantom::ad
