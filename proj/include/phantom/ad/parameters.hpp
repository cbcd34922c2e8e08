#pragma once

#include <string_view>
#include <vector>

#include "phantom/ad/var.hpp"

namespace phantom::ad {

/// Ordered collection of named trainable leaves.
class ParameterSet {
 public:
  void add(Var v);
  void extend(const ParameterSet& other);

  const std::vector<Var>& vars() const noexcept { return vars_; }
  std::size_t size() const noexcept { return vars_.size(); }
  std::size_t scalar_count() const;
  /// Throws InvalidArgument for an unknown name.
  Var find(std::string_view name) const;
  bool contains(std::string_view name) const;

  void zero_grad();
  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  std::vector<Var> vars_;
};

}  // namespace phantom::ad
