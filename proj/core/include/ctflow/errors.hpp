#pragma once

#include <stdexcept>
#include <string>

namespace ctflow {

/// Malformed input data or configuration. The CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// An algorithm failed numerically (degenerate fit, underflow, empty mask).
/// The CLI maps this to exit code 3.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ctflow
