#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cwpolar {

// Domain error codes. The CLI prints name() and exits with status 1.
enum class ErrorCode {
  kReducible,
  kBadRowSum,
  kNegativeProbability,
  kSingular,
  kNotYetMixed,
  kBadChannel,
  kEmptyEvent,
  kBadWeight,
  kUnsatisfiable,
  kTooLarge,
  kBadLength,
  kShapeMismatch,
  kZeroEvidence,
  kViolation,
  kEmptyInfo,
  kParseError,
  kBadArgument,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kReducible: return "REDUCIBLE";
    case ErrorCode::kBadRowSum: return "BAD_ROW_SUM";
    case ErrorCode::kNegativeProbability: return "NEGATIVE_PROBABILITY";
    case ErrorCode::kSingular: return "SINGULAR";
    case ErrorCode::kNotYetMixed: return "NOT_YET_MIXED";
    case ErrorCode::kBadChannel: return "BAD_CHANNEL";
    case ErrorCode::kEmptyEvent: return "EMPTY_EVENT";
    case ErrorCode::kBadWeight: return "BAD_WEIGHT";
    case ErrorCode::kUnsatisfiable: return "UNSATISFIABLE";
    case ErrorCode::kTooLarge: return "TOO_LARGE";
    case ErrorCode::kBadLength: return "BAD_LENGTH";
    case ErrorCode::kShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::kZeroEvidence: return "ZERO_EVIDENCE";
    case ErrorCode::kViolation: return "VIOLATION";
    case ErrorCode::kEmptyInfo: return "EMPTY_INFO";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kBadArgument: return "BAD_ARGUMENT";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace cwpolar
