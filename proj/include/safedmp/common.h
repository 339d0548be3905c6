#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace safedmp {

using Vec = Eigen::VectorXd;

enum class ErrorCode {
  kInvalidInput,
  kDimensionMismatch,
  kInsufficientData,
  kDegeneratePhase,
  kStepSize,
  kInvalidTube,
  kDomain,
  kSafetyInfeasible,
  kUndefinedMetric,
  kParse,
};

const char* ErrorCodeName(ErrorCode code);

// All recoverable failures in the library are reported with this type; the
// code lets callers (the CLI in particular) map failures to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

// Literal messages stay unconverted until needed; keeps checks on the control
// path allocation-free.
inline void Require(bool condition, ErrorCode code, const char* message) {
  if (!condition) Fail(code, message);
}

}  // namespace safedmp
