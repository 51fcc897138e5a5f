#pragma once

#include <stdexcept>
#include <string>

namespace s2vec {

// Base of every error the library throws. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (.sg, vocabulary, checkpoint, TSV files).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

// Invalid or infeasible configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Inputs that violate an operation's preconditions (empty graphs, size mismatches).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Data-level failures: missing files, inconsistent datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses or gradients during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace s2vec
