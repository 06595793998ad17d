#pragma once

#include <stdexcept>
#include <string>

namespace icurisk {

/// Base of every error raised by the library. `exit_code()` is what the CLI
/// returns when the error escapes to `main`.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Invalid parameters or configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Stage executed before its prerequisites, e.g. scaling with missing cells.
class OrderingError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Malformed or unusable data (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

/// Carries the 1-based CSV line and the offending column name.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line, std::string column)
      : DataError(what + " (line " + std::to_string(line) + ", column '" + column + "')"),
        line_(line),
        column_(std::move(column)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::string column_;
};

class StratificationError : public DataError {
 public:
  using DataError::DataError;
};

class SelectionError : public DataError {
 public:
  using DataError::DataError;
};

/// Numerical failure such as a diverging optimizer (exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

class UnsupportedModelError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace icurisk
