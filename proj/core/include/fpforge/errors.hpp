#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fpforge {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed CSV content. Carries the 1-based line number of the offending row.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& detail)
      : Error("line " + std::to_string(line) + ": " + detail), line_(line), detail_(detail) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

// Header layout that does not match the fingerprint schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Precondition violated by the caller.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Factorization failed even at the jitter cap.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double jitter_reached)
      : Error(what), jitter_reached_(jitter_reached) {}
  double jitter_reached() const noexcept { return jitter_reached_; }

 private:
  double jitter_reached_;
};

// Request would exceed practical memory or work limits.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fpforge
