#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace frictionbreak {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied argument violates a precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

// The data are valid but the estimator is undefined on them
// (zero variance, rank deficiency, empty regime, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// A file could not be parsed. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace frictionbreak
