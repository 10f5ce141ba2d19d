#include "flagstat/error.hpp"

namespace flagstat {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::NotOrthonormal: return "NotOrthonormal";
    case ErrorKind::SignatureMismatch: return "SignatureMismatch";
    case ErrorKind::UnsupportedSignature: return "UnsupportedSignature";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::ContractionSingularity: return "ContractionSingularity";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace flagstat
