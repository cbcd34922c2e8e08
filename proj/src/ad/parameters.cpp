#include "phantom/ad/parameters.hpp"

#include <algorithm>

#include "phantom/util/error.hpp"

namespace phantom::ad {

void ParameterSet::add(Var v) {
  require(v.valid() && v.requires_grad(), "ParameterSet::add expects a parameter leaf");
  require(!contains(v.name()), "duplicate parameter name '" + v.name() + "'");
  vars_.push_back(std::move(v));
}

void ParameterSet::extend(const ParameterSet& other) {
  for (const Var& v : other.vars_) add(v);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const Var& v : vars_) n += v.value().size();
  return n;
}

bool ParameterSet::contains(std::string_view name) const {
  return std::any_of(vars_.begin(), vars_.end(), [&](const Var& v) { return v.name() == name; });
}

Var ParameterSet::find(std::string_view name) const {
  for (const Var& v : vars_)
    if (v.name() == name) return v;
  throw InvalidArgument("no parameter named '" + std::string(name) + "'");
}

void ParameterSet::zero_grad() {
  for (Var& v : vars_) v.zero_grad();
}

std::vector<Tensor> ParameterSet::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(vars_.size());
  for (const Var& v : vars_) out.push_back(v.value());
  return out;
}

void ParameterSet::restore(const std::vector<Tensor>& values) {
  require(values.size() == vars_.size(), "restore: parameter count mismatch");
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    require(values[i].same_shape(vars_[i].value()),
            "restore: shape mismatch for '" + vars_[i].name() + "'");
    vars_[i].mutable_value() = values[i];
  }
}

}  // namespace phantom::ad
