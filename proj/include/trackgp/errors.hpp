#pragma once

#include <stdexcept>
#include <string>

namespace trackgp {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters, kernel family mismatch, bad config values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Factorization failures and round-off beyond tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

/// Arguments outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class OptimizationError : public Error {
 public:
  using Error::Error;
};

class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed input files; the message carries the offending line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace trackgp
