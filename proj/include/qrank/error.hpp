#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qrank {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent input data (bad file contents, shape mismatch, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed line in a text file; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : DataError("line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

/// Invalid hyperparameter or option value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qrank
