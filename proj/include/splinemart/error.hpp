#pragma once

#include <stdexcept>
#include <string>

namespace splinemart {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A knot would exceed its admissible multiplicity.
class MultiplicityError : public Error {
 public:
  using Error::Error;
};

/// Two spline spaces are not nested although the operation requires it.
class NestingError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization met a non-positive pivot.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// A spline-martingale consistency or stabilization check failed.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace splinemart
