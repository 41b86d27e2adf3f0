#include "qkiter/error.h"

namespace qkiter {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInputShape: return "input-shape error";
    case ErrorKind::kRange: return "range error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kIndex: return "index error";
    case ErrorKind::kRank: return "rank error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kContract: return "contract violation";
    case ErrorKind::kMapping: return "mapping error";
    case ErrorKind::kDegenerateInput: return "degenerate input";
    case ErrorKind::kUndefinedMetric: return "undefined metric";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kInternal: return "internal error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
      kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace qkiter
