#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sobolev {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid grid, model, solver or scenario configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Vector or operator sizes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values in an input.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an operation (zero state, nonpositive data).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operator failed a structural requirement, e.g. CG met nonpositive curvature.
class OperatorError : public Error {
 public:
  using Error::Error;
};

/// Iterative linear solve did not reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double final_residual, int iterations)
      : Error(what), final_residual_(final_residual), iterations_(iterations) {}

  double final_residual() const { return final_residual_; }
  int iterations() const { return iterations_; }

 private:
  double final_residual_;
  int iterations_;
};

/// Eigensolver stagnated; carries the residual reached for each requested pair.
class EigenSolverError : public Error {
 public:
  EigenSolverError(const std::string& what, std::vector<double> residuals)
      : Error(what), residuals_(std::move(residuals)) {}

  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// A diagnostic could not be computed from the data it was given.
class DiagnosticError : public Error {
 public:
  using Error::Error;
};

}  // namespace sobolev
