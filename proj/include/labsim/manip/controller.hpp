#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "labsim/manip/fsm.hpp"

namespace labsim::manip {

struct PolicyStep {
  world::AgentAction action;
  int stage = -1;  // active stage, -1 once finished
  int phase = -1;
  std::string phase_label;
  bool final_done = false;  // policy believes the task is finished
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyStep act(const world::WorldState& world) = 0;
  // Reason the policy gave up, if it did.
  virtual std::optional<std::string> failure() const { return std::nullopt; }
  // Whether PolicyStep::final_done is meaningful for this policy.
  virtual bool reports_completion() const { return false; }
};

// Runs a fixed sequence of atomic actions. An action error is recorded as that
// stage's failure; with abort_on_failure the controller then idles, otherwise
// it moves on to the next stage.
class TaskController final : public Policy {
 public:
  explicit TaskController(std::vector<ActionParams> stages, bool abort_on_failure = true);

  PolicyStep act(const world::WorldState& world) override;
  std::optional<std::string> failure() const override { return failure_; }
  bool reports_completion() const override { return true; }

  bool finished() const { return active_ >= fsms_.size(); }
  std::size_t completed_stages() const;
  std::size_t stage_count() const { return fsms_.size(); }
  // One flag per stage: true once its action completed without error.
  const std::vector<bool>& stage_outcomes() const { return outcomes_; }

 private:
  std::vector<AtomicActionFsm> fsms_;
  std::vector<bool> outcomes_;
  std::size_t active_ = 0;
  bool abort_on_failure_ = true;
  std::optional<std::string> failure_;
};

struct TaskRun {
  world::WorldState world;
  std::int64_t ticks = 0;
  std::size_t completed_stages = 0;
  std::vector<bool> stage_outcomes;
  bool finished = false;
  std::optional<std::string> failure;
};

// Drives `world` with a TaskController until it finishes, fails, or max_ticks pass.
TaskRun run_task(world::WorldState world, std::vector<ActionParams> stages, std::int64_t max_ticks,
                 bool abort_on_failure = true);

}  // namespace labsim::manip
