#pragma once

#include <stdexcept>
#include <string>

namespace peierls {

enum class ErrorKind {
  InvalidArgument,
  RationalInput,
  DegenerateSymbol,
  NonConvergence,
  BracketFailure,
  IncompleteProfile,
  Config,
  Io,
};

// Prefix used in single-line CLI diagnostics, e.g. "degenerate".
const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Thrown by the config parser; carries the 1-based source position.
class ConfigError : public Error {
 public:
  ConfigError(int line, int column, const std::string& message);

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace peierls
