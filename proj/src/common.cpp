#include "iotstage/common.hpp"

namespace iotstage {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "PARSE_ERROR";
    case ErrorCode::kMissingField: return "MISSING_FIELD";
    case ErrorCode::kUnknownField: return "UNKNOWN_FIELD";
    case ErrorCode::kTypeMismatch: return "TYPE_MISMATCH";
    case ErrorCode::kValidation: return "VALIDATION_FAILED";
    case ErrorCode::kScheduleInPast: return "SCHEDULE_IN_PAST";
    case ErrorCode::kUnknownNode: return "UNKNOWN_NODE";
    case ErrorCode::kUnknownEntity: return "UNKNOWN_ENTITY";
    case ErrorCode::kUnknownBehavior: return "UNKNOWN_BEHAVIOR";
    case ErrorCode::kDuplicateBehavior: return "DUPLICATE_BEHAVIOR";
    case ErrorCode::kUnknownTarget: return "UNKNOWN_TARGET";
    case ErrorCode::kRestartWithoutCrash: return "RESTART_WITHOUT_CRASH";
    case ErrorCode::kIncompleteSnapshot: return "INCOMPLETE_SNAPSHOT";
    case ErrorCode::kEmptySamples: return "EMPTY_SAMPLES";
    case ErrorCode::kEstimateImpossible: return "ESTIMATE_IMPOSSIBLE";
    case ErrorCode::kSocket: return "SOCKET_ERROR";
    case ErrorCode::kIo: return "IO_ERROR";
    case ErrorCode::kAborted: return "ABORTED";
    case ErrorCode::kBehavior: return "BEHAVIOR_ERROR";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
  }
  return "UNKNOWN";
}

}  // namespace iotstage
