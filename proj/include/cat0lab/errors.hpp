#pragma once

#include <stdexcept>
#include <string>

namespace cat0lab {

/// Precondition or schema violation in caller-supplied data.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver ran out of budget before reaching its tolerance.
class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cat0lab
