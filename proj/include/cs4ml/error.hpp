#pragma once

#include <stdexcept>
#include <string>

namespace cs4ml {

/// Precondition violated by the caller (bad sizes, empty inputs, non-finite data).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation could not produce a meaningful result (singular systems,
/// zero-mass measures, rank-0 subspaces).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when no element of the model class produces a nonzero measurement,
/// i.e. the Christoffel function vanishes identically on a channel.
class DegenerateSubspace : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace cs4ml
