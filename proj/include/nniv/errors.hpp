#pragma once

#include <stdexcept>
#include <string>

namespace nniv {

// Bad user input: malformed specs, ranges, state vectors. CLI maps this to exit 2.
struct validation_error : std::invalid_argument {
  explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failure: eigensolver did not converge, threshold scan exhausted its
// ceiling, degenerate quadrature denominator. CLI maps this to exit 3.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}
