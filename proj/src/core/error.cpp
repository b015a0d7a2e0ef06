#include "labsim/core/error.hpp"

namespace labsim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidAction: return "InvalidAction";
    case ErrorCode::kOutOfReach: return "OutOfReach";
    case ErrorCode::kMisaligned: return "Misaligned";
    case ErrorCode::kAlreadyHolding: return "AlreadyHolding";
    case ErrorCode::kNotGraspable: return "NotGraspable";
    case ErrorCode::kNotGrasping: return "NotGrasping";
    case ErrorCode::kUnknownObject: return "UnknownObject";
    case ErrorCode::kUnknownSubstance: return "UnknownSubstance";
    case ErrorCode::kOracleFailure: return "OracleFailure";
    case ErrorCode::kReactionCycle: return "ReactionCycle";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kUnreachable: return "Unreachable";
    case ErrorCode::kInvalidEndpoint: return "InvalidEndpoint";
    case ErrorCode::kPhaseTimeout: return "PhaseTimeout";
    case ErrorCode::kTargetLost: return "TargetLost";
    case ErrorCode::kPolicyFault: return "PolicyFault";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kReplayDivergence: return "ReplayDivergence";
    case ErrorCode::kUnknownTask: return "UnknownTask";
  }
  return "Unknown";
}

}  // namespace labsim
