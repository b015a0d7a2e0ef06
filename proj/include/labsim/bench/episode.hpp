#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "labsim/bench/tasks.hpp"
#include "labsim/manip/controller.hpp"

namespace labsim::bench {

// Goal must hold on every tick of the half-open window [done_tick, done_tick + hold).
// `goal_by_tick[t]` is the goal value observed at tick t.
bool hold_satisfied(std::span<const bool> goal_by_tick, std::int64_t done_tick, std::int64_t hold_ticks);

// Same rule over a recorded state stream (one state per tick, any start tick).
bool evaluate_hold(std::span<const world::WorldState> stream, const GoalPredicate& goal, std::int64_t done_tick,
                   double hold_s);

// Tracks stage predicates in order; stage k can only be satisfied after k-1.
class StageTracker {
 public:
  explicit StageTracker(const std::vector<Stage>& stages) : stages_(&stages), done_(stages.size(), false) {}

  void update(const world::WorldState& w);
  const std::vector<bool>& outcomes() const { return done_; }
  std::size_t satisfied() const { return next_; }

 private:
  const std::vector<Stage>* stages_;
  std::vector<bool> done_;
  std::size_t next_ = 0;
};

struct EpisodeResult {
  std::string task_key;
  std::uint64_t seed = 0;
  bool success = false;
  std::int64_t ticks_used = 0;
  std::optional<std::int64_t> done_tick;
  std::vector<bool> stage_outcomes;
  std::optional<std::string> failure_reason;

  friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

void to_json(Json& j, const EpisodeResult& r);
void from_json(const Json& j, EpisodeResult& r);

// Receives every simulated tick; used by the trajectory recorder.
class EpisodeObserver {
 public:
  virtual ~EpisodeObserver() = default;
  virtual void on_start(const TaskSpec& task, std::uint64_t seed, const world::WorldState& initial) = 0;
  virtual void on_tick(const manip::PolicyStep& step, const world::WorldState& after) = 0;
  virtual void on_finish(const EpisodeResult& result) = 0;
};

// Runs one episode. The done tick is the first tick the policy reports
// completion, or the first tick the goal holds for policies that never report.
// Success needs the hold window and every stage predicate.
EpisodeResult run_episode(const TaskSpec& task, std::uint64_t seed, const TaskInstance& instance,
                          manip::Policy& policy, EpisodeObserver* observer = nullptr);

// Policy that never moves.
class NullPolicy final : public manip::Policy {
 public:
  manip::PolicyStep act(const world::WorldState&) override { return {}; }
};

// Drives the base along the planned path, turns to face the object, then runs
// the scripted manipulation plan.
class NavigateThenManipulate final : public manip::Policy {
 public:
  NavigateThenManipulate(const NavSetup& nav, std::vector<manip::ActionParams> plan);

  manip::PolicyStep act(const world::WorldState& world) override;
  std::optional<std::string> failure() const override { return controller_.failure(); }
  bool reports_completion() const override { return true; }
  bool arrived() const { return arrived_; }

 private:
  nav::PathFollower follower_;
  manip::TaskController controller_;
  bool arrived_ = false;
};

// Wraps a scripted controller and faults when it reaches stage `fault_stage`.
class FaultInjectingPolicy final : public manip::Policy {
 public:
  FaultInjectingPolicy(std::unique_ptr<manip::Policy> inner, int fault_stage);

  manip::PolicyStep act(const world::WorldState& world) override;
  std::optional<std::string> failure() const override { return inner_->failure(); }
  bool reports_completion() const override { return inner_->reports_completion(); }

 private:
  std::unique_ptr<manip::Policy> inner_;
  int fault_stage_;
};

// Scripted policy for an instance.
std::unique_ptr<manip::Policy> make_oracle(const TaskInstance& instance);

using PolicyFactory =
    std::function<std::unique_ptr<manip::Policy>(const TaskSpec&, std::uint64_t seed, const TaskInstance&)>;
using ObserverFactory = std::function<std::unique_ptr<EpisodeObserver>(const TaskSpec&, std::uint64_t seed)>;

PolicyFactory oracle_factory();

struct EpisodeJob {
  const TaskSpec* task = nullptr;
  std::uint64_t seed = 0;
};

// Episodes for seeds base_seed .. base_seed + episodes - 1 of each task.
std::vector<EpisodeJob> make_jobs(const std::vector<TaskSpec>& tasks, std::uint64_t base_seed,
                                  std::optional<int> episodes = std::nullopt);

// Runs fn(i) for i in [0, n) on `workers` threads. Exceptions are rethrown after join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// Results are returned in job order regardless of the worker count. An
// instantiation error is reported as a failed episode.
std::vector<EpisodeResult> run_batch(const std::vector<EpisodeJob>& jobs, const BenchContext& context,
                                     const PolicyFactory& policies, int workers,
                                     const ObserverFactory& observers = {});

}  // namespace labsim::bench
