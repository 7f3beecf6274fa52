#pragma once

#include <stdexcept>
#include <string>

namespace soapsched {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid distribution or policy parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Query outside a function's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Load at or above one.
class StabilityError : public Error {
 public:
  using Error::Error;
};

/// Operation is not defined for the requested policy.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace soapsched
