#pragma once

#include <stdexcept>
#include <string>

namespace hrigame {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs that violate a documented precondition (shape, range, definiteness).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SingularInertiaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IndefiniteWeightError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SingularWeightError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class WindowError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateNormalizerError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical failures of the solvers and the integrator.
class SolverError : public Error {
 public:
  using Error::Error;
};

class NonFiniteStateError : public SolverError {
 public:
  using SolverError::SolverError;
};

class NotHurwitzError : public SolverError {
 public:
  using SolverError::SolverError;
};

class NoStabilizingSolutionError : public SolverError {
 public:
  using SolverError::SolverError;
};

class NoConvergenceError : public SolverError {
 public:
  NoConvergenceError(const std::string& what, double residual_h, double residual_r)
      : SolverError(what), residual_h_(residual_h), residual_r_(residual_r) {}

  double residual_h() const noexcept { return residual_h_; }
  double residual_r() const noexcept { return residual_r_; }

 private:
  double residual_h_;
  double residual_r_;
};

/// File-system failures, reported with the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

class StaleSessionError : public Error {
 public:
  using Error::Error;
};

}  // namespace hrigame
