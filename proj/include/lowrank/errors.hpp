#pragma once

#include <stdexcept>
#include <string>

namespace lowrank {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid inputs or configuration (bad dimensions, inconsistent options).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidDimension : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class MissingGroundTruth : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Numerical failures: the inputs were well formed but the computation
/// could not produce a trustworthy answer.
class NumericError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public NumericError {
 public:
  using NumericError::NumericError;
};

class RankDeficient : public NumericError {
 public:
  using NumericError::NumericError;
};

class NumericFailure : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Two finite-difference step sizes (or a closed form and a finite
/// difference) disagree beyond the requested tolerance.
class FDInconsistent : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace lowrank
