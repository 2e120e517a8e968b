#pragma once

#include <stdexcept>
#include <string>

namespace cemas {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: bad dimensions, violated invariants,
/// unreadable scenario files.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be symmetric positive definite is not, or is too
/// badly conditioned to factor reliably.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// An iterative method exhausted its iteration budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// The algebraic Riccati iteration did not settle on a stabilizing solution.
class NonStabilizableError : public Error {
 public:
  using Error::Error;
};

/// A truncated infinite-horizon solve never produced a quiet price tail.
class TruncationError : public Error {
 public:
  using Error::Error;
};

}  // namespace cemas
