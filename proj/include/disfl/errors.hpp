#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace disfl {

// Base for every error raised by the library. The CLI maps subclasses onto
// exit codes (ConfigError -> 1, NumericFault -> 3, everything else -> 2).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed tag string.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string fragment)
      : Error(message + ": '" + fragment + "'"), fragment_(std::move(fragment)) {}
  const std::string& fragment() const { return fragment_; }

 private:
  std::string fragment_;
};

// A tag sequence (or structure set) that does not describe valid,
// non-overlapping repairs. `index` is the offending token position.
class StructureError : public Error {
 public:
  StructureError(const std::string& message, std::size_t index)
      : Error(message + " (token " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// A valid structure that the 27-tag scheme cannot express (retrace > 8,
// multi-token deletion).
class UnrepresentableError : public Error {
 public:
  using Error::Error;
};

// Corpus / model file content problems.
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad configuration values or conflicting options.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Divergence: NaN or Inf appeared in activations or gradients.
class NumericFault : public Error {
 public:
  NumericFault(const std::string& message, std::size_t step)
      : Error(message + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace disfl
