#pragma once

#include <stdexcept>
#include <string>

namespace windpass {

// Raised for inputs that violate an operation's preconditions (bad sizes,
// nonpositive speeds, unknown edges). The CLI maps these to exit code 1.
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when a numerically valid input cannot be processed (singular
// network, degenerate fit, covariance collapse, disconnected graph).
// The CLI maps these to exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace windpass
