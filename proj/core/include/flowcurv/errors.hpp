#pragma once

#include <stdexcept>
#include <string>

namespace flowcurv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed vector-field text. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Unknown system, parameter, or identifier supplied by the caller.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Divergence, non-convergence, or other failure of a numerical procedure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowcurv
