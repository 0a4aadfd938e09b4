#pragma once

#include <stdexcept>
#include <string>

namespace ckt {

/// Base class for all library errors. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed, inconsistent or insufficient data (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed or left its domain (CLI exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ckt
