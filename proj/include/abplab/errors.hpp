#pragma once

#include <stdexcept>
#include <string>

namespace abplab {

/// Bad argument: out-of-range index, dimension mismatch, malformed spec.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// A documented precondition of an operation does not hold for the input.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numerical procedure could not meet its accuracy contract.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// An iterative procedure ran out of iterations.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, int iterations)
      : std::runtime_error(what), iterations_(iterations) {}
  int iterations() const { return iterations_; }

 private:
  int iterations_;
};

}  // namespace abplab
