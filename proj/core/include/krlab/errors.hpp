#pragma once

#include <stdexcept>
#include <string>

namespace krlab {

// Thrown when a computation leaves its numerical validity domain
// (positivity loss, non-positive-definite Gram, NaN/Inf in a field).
// Contract violations use std::invalid_argument instead.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace krlab
