#pragma once

#include <stdexcept>
#include <string>

namespace rgcca {

/// Raised for invalid inputs and configurations (bad shapes, out-of-range
/// hyperparameters, malformed files).
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical routine cannot produce a usable result.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace rgcca
