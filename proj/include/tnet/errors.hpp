#pragma once

#include <stdexcept>
#include <string>

namespace tnet {

// Base for everything thrown by the library. The CLI maps subtypes to
// process exit codes (config 2, data/format 3, numerical 4).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller broke an API precondition (shape mismatch, bad argument).
struct ContractViolation : Error {
  using Error::Error;
};

// Invalid configuration: bad config keys, impossible experiment specs.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed files: bad magic, truncation, dimension overflow.
struct DataFormatError : Error {
  using Error::Error;
};

// Numerical failure: divergence, non-finite values, failed convergence.
struct NumericalError : Error {
  using Error::Error;
};

// Cholesky input is not positive-definite. Callers may regularize and retry.
struct DefinitenessError : NumericalError {
  using NumericalError::NumericalError;
};

// Operation requires a fitted model/pipeline that is not fitted.
struct StateError : Error {
  using Error::Error;
};

}  // namespace tnet
