#pragma once

#include <stdexcept>
#include <string>

namespace spikelab {

/// Base class for numerical failures raised by the solvers. Precondition
/// violations are reported with std::invalid_argument instead.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear system that should be invertible was singular or too badly
/// conditioned to trust (reciprocal condition estimate below 1e-12).
class SingularSystemError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// An iterative method ran out of iterations.
class ConvergenceError : public SolverError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : SolverError(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Newton iteration left the constant-sign regime.
class SignFlipError : public SolverError {
 public:
  SignFlipError(const std::string& what, int spike)
      : SolverError(what), spike_(spike) {}
  int spike() const { return spike_; }

 private:
  int spike_;
};

}  // namespace spikelab
