#pragma once

#include <stdexcept>
#include <string>

namespace otpr {

// Out-of-range or inconsistent caller-supplied parameters (bad eps, size caps).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or unusable input data (unbalanced masses, bad images).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Byte-level file format problems (bad magic, truncated payload).
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

// Numerical failure of an iterative method, e.g. kernel underflow in the
// entropic solver. Never silent NaN.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A solver state check failed; indicates a bug, not bad input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace otpr
