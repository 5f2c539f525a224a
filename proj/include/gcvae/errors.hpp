#pragma once

#include <stdexcept>
#include <string>

namespace gcvae {

// Argument and shape errors use std::invalid_argument, domain errors
// std::domain_error, misuse of stateful objects std::logic_error. The types
// below cover the failures callers are expected to handle separately.

/// Non-finite value produced inside an objective or update.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV rows, schema sidecars). Carries the 1-based line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Data that does not match the declared schema (unknown category, wrong width).
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or corrupt binary checkpoint.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gcvae
