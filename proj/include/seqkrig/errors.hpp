#ifndef SEQKRIG_ERRORS_HPP
#define SEQKRIG_ERRORS_HPP

#include <stdexcept>

namespace seqkrig {

/// Base class of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Every candidate was rejected (e.g. all of them already sit in the design).
class EmptyCandidateError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// Operation not defined for the requested kernel family or parameters.
class UnsupportedOperationError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: failed factorization, impossible variance, ...
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration file or field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace seqkrig

#endif
