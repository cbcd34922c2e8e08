#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "phantom/ad/tensor.hpp"

namespace phantom::ad {

struct Node {
  Tensor value;
  Tensor grad;  // empty until the node receives a gradient
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;
  bool requires_grad = false;
  std::string name;

  Tensor& grad_buffer();  // allocates a zero grad on first use
};

/// Handle to a node of the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  Tensor& mutable_grad() { return node_->grad_buffer(); }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  const std::string& name() const { return node_->name; }
  double item() const;

  void zero_grad();
  bool valid() const noexcept { return static_cast<bool>(node_); }
  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
Var constant(double value);
/// A leaf that accumulates gradients across backward() calls until zeroed.
Var parameter(Tensor value, std::string name);

/// Builds an interior node; parents that do not require grad are not retained.
Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

/// Reverse sweep from a 1x1 root. Leaf grads accumulate; interior grads are
/// reset at the start of every sweep.
void backward(const Var& root);

}  // namespace phantom::ad
