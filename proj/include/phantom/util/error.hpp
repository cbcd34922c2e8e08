#pragma once

#include <stdexcept>
#include <string>

namespace phantom {

/// Bad caller input: domain violations, malformed files, inconsistent shapes.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced NaN/Inf or failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void throw_invalid(const std::string& what) { throw InvalidArgument(what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace phantom
