#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hmix {

enum class ErrorCode {
  // Input / validation failures.
  kInvalidExponent,
  kInvalidArgument,
  kNonIncreasing,
  kConditionViolated,
  kNotDecreasing,
  kNotIncreasing,
  kOutOfRange,
  kParseError,
  kConfigError,
  kHashMismatch,
  kEmptyBatch,
  // Runtime failures.
  kHorizonExceeded,
  kUndefinedIndex,
  kCapExceeded,
  kPrecisionExhausted,
  kHInverseDiverged,
  kSizeCap,
  kIoError,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidExponent: return "InvalidExponent";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNonIncreasing: return "NonIncreasing";
    case ErrorCode::kConditionViolated: return "ConditionViolated";
    case ErrorCode::kNotDecreasing: return "NotDecreasing";
    case ErrorCode::kNotIncreasing: return "NotIncreasing";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kHashMismatch: return "HashMismatch";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kHorizonExceeded: return "HorizonExceeded";
    case ErrorCode::kUndefinedIndex: return "UndefinedIndex";
    case ErrorCode::kCapExceeded: return "CapExceeded";
    case ErrorCode::kPrecisionExhausted: return "PrecisionExhausted";
    case ErrorCode::kHInverseDiverged: return "HInverseDiverged";
    case ErrorCode::kSizeCap: return "SizeCap";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

// Validation errors are caused by bad inputs; everything else is a failure
// while computing on inputs that were accepted.
constexpr bool is_validation_error(ErrorCode code) {
  return code <= ErrorCode::kEmptyBatch;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace hmix
