#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trajagent {

enum class ErrorCode {
  // data / registry
  kMissingColumn,
  kUnparsableRow,
  kEmptyDataset,
  kDegenerateSplit,
  kDuplicateName,
  kValidationError,
  kNoCandidate,
  kNotFound,
  kIo,
  // metrics
  kLengthMismatch,
  kEmptyInput,
  kOneClassOnly,
  kNegativeMass,
  kUnknownMetric,
  // augmentation
  kUnknownOperator,
  kParamOutOfRange,
  kEmptyResult,
  // models
  kConfigMissing,
  kConfigSyntax,
  kTooFewUsers,
  // llm
  kTimeout,
  kHttpStatus,
  kExhaustedRetries,
  kStubMiss,
  kUnboundSlot,
  kParseFailure,
  kValidationFailure,
  kLlmFailure,
  // optim / workflow
  kRetryExhausted,
  kPlanningExhausted,
  kOutOfScope,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace trajagent
