#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace homog {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched grids, empty balls, supports that do not fit.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range generator or experiment parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A hypothesis of an operation does not hold (non-harmonic polynomial, eps_R > 1, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Ill-conditioned dense linear algebra (fits, null spaces).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Gram matrix of a competitor family is numerically singular.
class DegenerateBasisError : public Error {
 public:
  DegenerateBasisError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// Iterative solver failed to reach the requested tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Malformed field file or config file.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::int64_t offset = -1)
      : Error(what), offset_(offset) {}
  std::int64_t offset() const { return offset_; }

 private:
  std::int64_t offset_;
};

}  // namespace homog
