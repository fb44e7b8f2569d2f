#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace matcher {

enum class ErrorCode {
  kBadMagic,
  kTruncatedFile,
  kNonFiniteValue,
  kEmptyResult,
  kDimMismatch,
  kIndexOutOfRange,
  kEmptyMatch,
  kUnknownImage,
  kDuplicateImage,
  kBackendUnavailable,
  kProtocolError,
  kInfeasibleWeights,
  kEmptySupport,
  kZeroArea,
  kIoError,
  kConfigError,
  kInvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the engine. The code lets callers branch on the
/// failure kind without parsing messages.
class MatcherError : public std::runtime_error {
 public:
  MatcherError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// BackendUnavailable is the only failure a caller may retry as-is.
  bool retryable() const noexcept { return code_ == ErrorCode::kBackendUnavailable; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw MatcherError(code, message);
}

}  // namespace matcher
