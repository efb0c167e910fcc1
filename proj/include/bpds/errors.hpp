#pragma once

#include <stdexcept>
#include <string>

namespace bpds {

/// Bad inputs: configs, shapes, out-of-range parameters. CLI exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical solver failures. CLI exit code 3.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mixture covariance is not positive definite.
struct DegenerateMixtureError : SolverError {
  using SolverError::SolverError;
};

/// Scores carry no usable information (singular Hessian, non-finite weights).
struct DegenerateScoreError : SolverError {
  using SolverError::SolverError;
};

/// Tilt constraint set is empty or inconsistent.
struct ConstraintError : SolverError {
  using SolverError::SolverError;
};

/// Markowitz Gram system is singular (forecast mean collinear with 1).
struct CollinearTargetError : SolverError {
  using SolverError::SolverError;
};

/// Regression design matrix is rank deficient after masking.
struct FitError : SolverError {
  using SolverError::SolverError;
};

/// Malformed or non-positive price data.
struct IngestionError : ValidationError {
  using ValidationError::ValidationError;
};

/// Not enough history to build a lag regressor.
struct StartupError : ValidationError {
  using ValidationError::ValidationError;
};

}  // namespace bpds
