#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rtbctl {

/// Base class for every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or internally inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Parse failure at a specific 1-based line of an input file.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Numerical failure in a solver, fit or tuner.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A channel for which no sweep point produced a click; its click curve
/// cannot be fitted.
class UnfittableChannelError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace rtbctl
