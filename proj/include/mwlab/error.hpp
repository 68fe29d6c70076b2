#pragma once

#include <stdexcept>
#include <string>

namespace mwlab {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument, out-of-range level, malformed exponent triple, ...
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A matrix that should be positive definite (or invertible) is not.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

// An iterative solver hit its iteration cap.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Unreadable or malformed artifact/config file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace mwlab
