#include "trajagent/error.hpp"

namespace trajagent {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kUnparsableRow: return "UnparsableRow";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kDegenerateSplit: return "DegenerateSplit";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kNoCandidate: return "NoCandidate";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kOneClassOnly: return "OneClassOnly";
    case ErrorCode::kNegativeMass: return "NegativeMass";
    case ErrorCode::kUnknownMetric: return "UnknownMetric";
    case ErrorCode::kUnknownOperator: return "UnknownOperator";
    case ErrorCode::kParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::kEmptyResult: return "EmptyResult";
    case ErrorCode::kConfigMissing: return "ConfigMissing";
    case ErrorCode::kConfigSyntax: return "ConfigSyntax";
    case ErrorCode::kTooFewUsers: return "TooFewUsers";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kHttpStatus: return "HttpStatus";
    case ErrorCode::kExhaustedRetries: return "ExhaustedRetries";
    case ErrorCode::kStubMiss: return "StubMiss";
    case ErrorCode::kUnboundSlot: return "UnboundSlot";
    case ErrorCode::kParseFailure: return "ParseFailure";
    case ErrorCode::kValidationFailure: return "ValidationFailure";
    case ErrorCode::kLlmFailure: return "LlmFailure";
    case ErrorCode::kRetryExhausted: return "RetryExhausted";
    case ErrorCode::kPlanningExhausted: return "PlanningExhausted";
    case ErrorCode::kOutOfScope: return "OutOfScope";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

}  // namespace trajagent
