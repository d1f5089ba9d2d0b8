#include "peierls/error.hpp"

namespace peierls {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return "invalid-argument";
    case ErrorKind::RationalInput:
      return "rational-input";
    case ErrorKind::DegenerateSymbol:
      return "degenerate";
    case ErrorKind::NonConvergence:
      return "non-convergence";
    case ErrorKind::BracketFailure:
      return "bracket";
    case ErrorKind::IncompleteProfile:
      return "incomplete-profile";
    case ErrorKind::Config:
      return "config";
    case ErrorKind::Io:
      return "io";
  }
  return "error";
}

ConfigError::ConfigError(int line, int column, const std::string& message)
    : Error(ErrorKind::Config,
            "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

}  // namespace peierls
