#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace microgrid {

/// Invalid configuration or parameter values. `field` names the offending
/// entry using a dotted path (e.g. "system.r6c2.c_i").
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A control or state left its admissible bounds.
class ConstraintViolation : public std::domain_error {
 public:
  ConstraintViolation(std::string bound, double value, double limit)
      : std::domain_error(bound + " violated: value " + std::to_string(value) +
                          ", limit " + std::to_string(limit)),
        bound_(std::move(bound)),
        value_(value),
        limit_(limit) {}

  const std::string& bound() const noexcept { return bound_; }
  double value() const noexcept { return value_; }
  double limit() const noexcept { return limit_; }

 private:
  std::string bound_;
  double value_;
  double limit_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, std::size_t line, const std::string& message)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + message),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

/// A file could not be opened for reading or writing.
class FileError : public std::runtime_error {
 public:
  FileError(std::string path, const std::string& message)
      : std::runtime_error(message + ": " + path), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Raised when an LP that must be solvable by construction is not.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace microgrid
