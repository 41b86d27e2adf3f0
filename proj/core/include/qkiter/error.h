#ifndef QKITER_ERROR_H_
#define QKITER_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace qkiter {

enum class ErrorKind {
  kInputShape,
  kRange,
  kFormat,
  kIo,
  kIndex,
  kRank,
  kNumeric,
  kContract,
  kMapping,
  kDegenerateInput,
  kUndefinedMetric,
  kValidation,
  kConfig,
  kInternal,
};

std::string_view error_kind_name(ErrorKind kind);

// All library failures are reported through this one exception type; callers
// that need to branch (the CLI maps kinds to exit codes) inspect kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace qkiter

#endif  // QKITER_ERROR_H_
