#include "safedmp/common.h"

namespace safedmp {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput:
      return "invalid-input";
    case ErrorCode::kDimensionMismatch:
      return "dimension-mismatch";
    case ErrorCode::kInsufficientData:
      return "insufficient-data";
    case ErrorCode::kDegeneratePhase:
      return "degenerate-phase";
    case ErrorCode::kStepSize:
      return "step-size";
    case ErrorCode::kInvalidTube:
      return "invalid-tube";
    case ErrorCode::kDomain:
      return "domain";
    case ErrorCode::kSafetyInfeasible:
      return "safety-infeasible";
    case ErrorCode::kUndefinedMetric:
      return "undefined-metric";
    case ErrorCode::kParse:
      return "parse";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace safedmp
