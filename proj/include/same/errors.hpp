#pragma once

#include <stdexcept>
#include <string>

namespace same {

/// Invalid argument, bad shape, or an inconsistent configuration.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A required input file is missing or structurally malformed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A token could not be parsed; carries the offending line.
class ParseError : public FormatError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : FormatError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Cross-file or checksum inconsistency in otherwise well-formed data.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN/Inf values, divergence, or overflow during computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace same
