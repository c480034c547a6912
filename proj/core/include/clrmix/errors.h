#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace clrmix {

// Root of every error thrown by the library. Callers that only need to
// distinguish "bad input" from "numerical trouble" can catch the two
// intermediate classes below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input did not satisfy a documented contract.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message, std::string field = {})
      : Error(message), field_(std::move(field)) {}

  // Name of the offending field (request body key, CLI flag); may be empty.
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Predictor vectors do not conform to the coefficient vector or to each other.
class FeatureShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// An operation was called on the wrong kind of object (e.g. likelihood of a
// stratum whose outcome is unobserved).
class UsageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Sampler or optimizer settings out of range.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Elicited priors cannot be turned into log-odds effects.
class ElicitationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Located CSV parse failure. line and column are 1-based; column 0 means the
// whole row.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : ValidationError(format(message, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& message, std::size_t line,
                            std::size_t column) {
    std::string where = "line " + std::to_string(line);
    if (column > 0) where += ", column " + std::to_string(column);
    return where + ": " + message;
  }

  std::size_t line_;
  std::size_t column_;
};

// Storage or I/O failure outside the caller's control.
class StorageError : public Error {
 public:
  using Error::Error;
};

// Diagnostic cannot be computed on this data (e.g. a degenerate 2x2 table).
class DiagnosticError : public Error {
 public:
  using Error::Error;
};

}  // namespace clrmix
