// SPDX-License-Identifier: Apache-2.0
/**
 * @file   error.hpp
 * @brief  Exception taxonomy shared by every riskseq module.
 *
 * Each error carries a kind; the CLI maps kinds onto its exit-code contract
 * (1 config/validation, 2 I/O, 3 numerical abort).
 */
#pragma once

#include <stdexcept>
#include <string>

namespace riskseq {

enum class ErrorKind {
  Dimension,
  Validation,
  Config,
  Parse,
  Io,
  Integrity,
  Incompatible,
  Numerical,
  Lookup,
  Duplicate,
  UndefinedMetric,
  Degenerate,
};

inline const char *to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::Dimension: return "dimension error";
  case ErrorKind::Validation: return "validation error";
  case ErrorKind::Config: return "configuration error";
  case ErrorKind::Parse: return "parse error";
  case ErrorKind::Io: return "I/O error";
  case ErrorKind::Integrity: return "integrity error";
  case ErrorKind::Incompatible: return "incompatible checkpoint";
  case ErrorKind::Numerical: return "numerical error";
  case ErrorKind::Lookup: return "lookup error";
  case ErrorKind::Duplicate: return "duplicate key";
  case ErrorKind::UndefinedMetric: return "undefined metric";
  case ErrorKind::Degenerate: return "degenerate comparison";
  }
  return "error";
}

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix, for re-raising with more context.
  const std::string &message() const noexcept { return message_; }

private:
  ErrorKind kind_;
  std::string message_;
};

/// Process exit code for an error kind.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::Io:
  case ErrorKind::Integrity: return 2;
  case ErrorKind::Numerical: return 3;
  default: return 1;
  }
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string &message) {
  throw Error(kind, message);
}

} // namespace riskseq
