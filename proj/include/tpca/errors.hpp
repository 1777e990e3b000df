#pragma once

#include <stdexcept>
#include <string>

namespace tpca {

/// Invalid input shapes or parameters (CLI exit code 2).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The observation pattern does not identify the model, e.g. two units are
/// never jointly observed (CLI exit code 3).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure such as a singular time-t Gram matrix (CLI exit code 4).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tpca
