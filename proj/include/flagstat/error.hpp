#pragma once

#include <stdexcept>
#include <string>

namespace flagstat {

enum class ErrorKind {
  InvalidInput,
  ShapeMismatch,
  RankDeficient,
  NumericalFailure,
  NotOrthonormal,
  SignatureMismatch,
  UnsupportedSignature,
  IndexOutOfRange,
  EmptyInput,
  ContractionSingularity,
  ParseError,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace flagstat
