#pragma once

#include <stdexcept>
#include <string>

namespace latnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs with inconsistent shapes (wrong vector length, non-square matrix).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Parameters that cannot produce a valid object (infeasible generator
/// settings, probabilities outside (0,1), too few observations).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A model precondition was breached at run time, e.g. a non-positive
/// equilibrium consumption or non-positive optimal revenue.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: singular systems, divergence, non-convergence, NaN.
class NumericError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DivergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ConvergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace latnet
