#pragma once

#include <stdexcept>
#include <string>

namespace fmargin {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver ran out of its iteration budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Input has no usable energy (all-zero channel, zero median, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Requested tail probability is below the resolution 1/count of an ECDF.
class UnresolvableError : public Error {
 public:
  using Error::Error;
};

// Trace I/O failures. Each corruption kind gets its own type so callers
// can tell them apart without parsing messages.
class IoError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public IoError {
 public:
  using IoError::IoError;
};

class VersionMismatchError : public IoError {
 public:
  using IoError::IoError;
};

class TruncatedError : public IoError {
 public:
  using IoError::IoError;
};

class NonFiniteError : public IoError {
 public:
  using IoError::IoError;
};

class MalformedError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace fmargin
