#pragma once

#include <stdexcept>
#include <string>

namespace carcheck {

/// Invalid user configuration (bad flags, inconsistent iteration counts, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: non-finite densities, failed decompositions, ...
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the support of a density (phi outside the CAR interval,
/// non-positive variance, non-finite latent values).
class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace carcheck
