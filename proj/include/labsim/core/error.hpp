#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace labsim {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidAction,
  kOutOfReach,
  kMisaligned,
  kAlreadyHolding,
  kNotGraspable,
  kNotGrasping,
  kUnknownObject,
  kUnknownSubstance,
  kOracleFailure,
  kReactionCycle,
  kInfeasible,
  kUnreachable,
  kInvalidEndpoint,
  kPhaseTimeout,
  kTargetLost,
  kPolicyFault,
  kIoFailure,
  kSchemaError,
  kReplayDivergence,
  kUnknownTask,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by replay with the first tick whose re-simulated state disagrees with the record.
class ReplayDivergence : public Error {
 public:
  ReplayDivergence(std::int64_t tick, const std::string& message)
      : Error(ErrorCode::kReplayDivergence, "tick " + std::to_string(tick) + ": " + message),
        tick_(tick) {}

  std::int64_t tick() const noexcept { return tick_; }

 private:
  std::int64_t tick_;
};

}  // namespace labsim
