#pragma once

#include <stdexcept>
#include <string>

namespace corrlab {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment parameters or unknown enumerations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented input precondition does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A size or admissibility guard was violated (support overflow, dense-oracle
/// size limit, summation radius too small).
class GuardError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// An iterative solve did not reach its residual target.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A quadrature did not reach its accuracy target.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// A distribution with zero spread was asked to be studentized.
class DegenerateDistribution : public Error {
 public:
  using Error::Error;
};

}  // namespace corrlab
