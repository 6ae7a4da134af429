#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace facadeloc {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data or configuration. The CLI maps this to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed document, with a 1-based location.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : ValidationError(what + " (line " + std::to_string(line) + ", column " +
                        std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Degenerate geometric configuration (collinear points, singular basis, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

class BehindCameraError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace facadeloc
