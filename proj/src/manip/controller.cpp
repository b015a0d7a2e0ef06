#include "labsim/manip/controller.hpp"

#include <algorithm>

#include "labsim/core/error.hpp"
#include "labsim/world/world.hpp"

namespace labsim::manip {

TaskController::TaskController(std::vector<ActionParams> stages, bool abort_on_failure)
    : outcomes_(stages.size(), false), abort_on_failure_(abort_on_failure) {
  fsms_.reserve(stages.size());
  for (ActionParams& p : stages) fsms_.emplace_back(std::move(p));
}

std::size_t TaskController::completed_stages() const {
  return static_cast<std::size_t>(std::count(outcomes_.begin(), outcomes_.end(), true));
}

PolicyStep TaskController::act(const world::WorldState& world) {
  PolicyStep out;
  if (failure_ && abort_on_failure_) return out;
  while (active_ < fsms_.size()) {
    AtomicActionFsm& fsm = fsms_[active_];
    try {
      out.action = fsm.tick(world);
    } catch (const Error& e) {
      if (!failure_) failure_ = std::string(to_string(fsm.params().kind)) + ": " + e.what();
      out.action = world::AgentAction{};
      if (abort_on_failure_) return out;
      ++active_;
      continue;
    }
    if (!fsm.complete()) {
      out.stage = static_cast<int>(active_);
      out.phase = fsm.phase();
      out.phase_label = std::string(fsm.phase_label());
      return out;
    }
    outcomes_[active_] = true;
    ++active_;
  }
  out.action = world::AgentAction{};
  out.final_done = !failure_;
  return out;
}

TaskRun run_task(world::WorldState world, std::vector<ActionParams> stages, std::int64_t max_ticks,
                 bool abort_on_failure) {
  TaskController controller(std::move(stages), abort_on_failure);
  TaskRun run;
  for (; run.ticks < max_ticks; ++run.ticks) {
    const PolicyStep step = controller.act(world);
    if (step.final_done || controller.finished() || (controller.failure() && abort_on_failure)) break;
    world::advance(world, step.action);
  }
  run.completed_stages = controller.completed_stages();
  run.stage_outcomes = controller.stage_outcomes();
  run.finished = controller.finished() && !controller.failure();
  run.failure = controller.failure();
  run.world = std::move(world);
  return run;
}

}  // namespace labsim::manip
