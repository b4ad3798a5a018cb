#pragma once

#include <stdexcept>
#include <string>

namespace lvgp {

// Bad user input: malformed files, unknown labels, inconsistent shapes.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: singular covariance after jitter escalation, all
// optimizer restarts failed, non-finite gradients.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal invariant breach. Indicates a bug, not a user error.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace lvgp
