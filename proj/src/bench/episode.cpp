#include "labsim/bench/episode.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "labsim/core/error.hpp"
#include "labsim/world/world.hpp"

namespace labsim::bench {

bool hold_satisfied(std::span<const bool> goal_by_tick, std::int64_t done_tick, std::int64_t hold_ticks) {
  if (done_tick < 0 || hold_ticks <= 0) return false;
  const auto end = done_tick + hold_ticks;
  if (end > static_cast<std::int64_t>(goal_by_tick.size())) return false;
  return std::all_of(goal_by_tick.begin() + done_tick, goal_by_tick.begin() + end, [](bool b) { return b; });
}

bool evaluate_hold(std::span<const world::WorldState> stream, const GoalPredicate& goal, std::int64_t done_tick,
                   double hold_s) {
  const std::int64_t hold = world::ticks_for_seconds(hold_s);
  std::int64_t covered = 0;
  for (const world::WorldState& w : stream) {
    if (w.tick < done_tick || w.tick >= done_tick + hold) continue;
    if (!goal.holds(w)) return false;
    ++covered;
  }
  return covered == hold;
}

void StageTracker::update(const world::WorldState& w) {
  while (next_ < done_.size() && (*stages_)[next_].predicate.holds(w)) {
    done_[next_] = true;
    ++next_;
  }
}

void to_json(Json& j, const EpisodeResult& r) {
  j = Json{{"task", r.task_key},
           {"seed", r.seed},
           {"success", r.success},
           {"ticks_used", r.ticks_used},
           {"stage_outcomes", r.stage_outcomes}};
  j["done_tick"] = r.done_tick ? Json(*r.done_tick) : Json(nullptr);
  j["failure_reason"] = r.failure_reason ? Json(*r.failure_reason) : Json(nullptr);
}

void from_json(const Json& j, EpisodeResult& r) {
  try {
    r.task_key = j.at("task").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.success = j.at("success").get<bool>();
    r.ticks_used = j.at("ticks_used").get<std::int64_t>();
    r.stage_outcomes = j.at("stage_outcomes").get<std::vector<bool>>();
    r.done_tick.reset();
    if (!j.at("done_tick").is_null()) r.done_tick = j.at("done_tick").get<std::int64_t>();
    r.failure_reason.reset();
    if (!j.at("failure_reason").is_null()) r.failure_reason = j.at("failure_reason").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("episode result: ") + e.what());
  }
}

EpisodeResult run_episode(const TaskSpec& task, std::uint64_t seed, const TaskInstance& instance,
                          manip::Policy& policy, EpisodeObserver* observer) {
  EpisodeResult result;
  result.task_key = task.key();
  result.seed = seed;
  world::WorldState w = instance.world;
  if (observer) observer->on_start(task, seed, w);

  StageTracker stages(instance.stages);
  stages.update(w);
  const std::int64_t hold = world::ticks_for_seconds(task.hold_s);
  const bool reports = policy.reports_completion();
  std::int64_t held = 0;
  bool hold_ok = false;
  std::optional<std::string> reason;

  while (true) {
    if (!result.done_tick && w.tick >= task.time_limit_ticks) {
      reason = "time limit of " + std::to_string(task.time_limit_ticks) + " ticks reached";
      break;
    }
    manip::PolicyStep step;
    try {
      step = policy.act(w);
    } catch (const std::exception& e) {
      reason = e.what();
      break;
    }
    if (!result.done_tick) {
      if (auto f = policy.failure()) {
        reason = *f;
        break;
      }
      if (reports ? step.final_done : instance.goal.holds(w)) result.done_tick = w.tick;
    }
    if (result.done_tick) {
      if (const auto bad = instance.goal.first_violation(w)) {
        reason = "goal violated at tick " + std::to_string(w.tick) + ": " + describe(*bad);
        break;
      }
      if (++held >= hold) {
        hold_ok = true;
        break;
      }
    }
    try {
      world::advance(w, step.action);
    } catch (const std::exception& e) {
      reason = e.what();
      break;
    }
    stages.update(w);
    if (observer) observer->on_tick(step, w);
  }

  result.ticks_used = w.tick;
  result.stage_outcomes = stages.outcomes();
  if (hold_ok && stages.satisfied() < instance.stages.size()) {
    reason = "stage '" + instance.stages[stages.satisfied()].label + "' never satisfied";
  }
  result.success = hold_ok && !reason;
  result.failure_reason = reason;
  if (observer) observer->on_finish(result);
  return result;
}

NavigateThenManipulate::NavigateThenManipulate(const NavSetup& nav, std::vector<manip::ActionParams> plan)
    : follower_(nav.path, nav.heading), controller_(std::move(plan)) {}

manip::PolicyStep NavigateThenManipulate::act(const world::WorldState& world) {
  if (!arrived_) {
    if (!world.agent.base_pose) throw Error(ErrorCode::kInvalidArgument, "world has no mobile base");
    const world::BasePose& base = *world.agent.base_pose;
    if (follower_.done(base)) {
      arrived_ = true;
    } else {
      manip::PolicyStep step;
      step.action.base = follower_.command(base, world.agent.max_base_speed, world.dt_s);
      step.phase_label = "navigate";
      return step;
    }
  }
  return controller_.act(world);
}

FaultInjectingPolicy::FaultInjectingPolicy(std::unique_ptr<manip::Policy> inner, int fault_stage)
    : inner_(std::move(inner)), fault_stage_(fault_stage) {}

manip::PolicyStep FaultInjectingPolicy::act(const world::WorldState& world) {
  manip::PolicyStep step = inner_->act(world);
  if (step.stage >= fault_stage_) {
    throw Error(ErrorCode::kPolicyFault, "injected at stage " + std::to_string(fault_stage_ + 1));
  }
  return step;
}

std::unique_ptr<manip::Policy> make_oracle(const TaskInstance& instance) {
  if (instance.nav) return std::make_unique<NavigateThenManipulate>(*instance.nav, instance.plan);
  return std::make_unique<manip::TaskController>(instance.plan);
}

PolicyFactory oracle_factory() {
  return [](const TaskSpec&, std::uint64_t, const TaskInstance& inst) { return make_oracle(inst); };
}

std::vector<EpisodeJob> make_jobs(const std::vector<TaskSpec>& tasks, std::uint64_t base_seed,
                                  std::optional<int> episodes) {
  std::vector<EpisodeJob> jobs;
  for (const TaskSpec& t : tasks) {
    const int n = episodes.value_or(t.episodes);
    for (int e = 0; e < n; ++e) jobs.push_back({&t, base_seed + static_cast<std::uint64_t>(e)});
  }
  return jobs;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min(static_cast<std::size_t>(std::max(workers, 1)), std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  pool.clear();  // joins
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<EpisodeResult> run_batch(const std::vector<EpisodeJob>& jobs, const BenchContext& context,
                                     const PolicyFactory& policies, int workers, const ObserverFactory& observers) {
  std::vector<EpisodeResult> results(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const EpisodeJob& job = jobs[i];
    try {
      const TaskInstance inst = instantiate(*job.task, job.seed, context);
      std::unique_ptr<manip::Policy> policy = policies(*job.task, job.seed, inst);
      std::unique_ptr<EpisodeObserver> observer = observers ? observers(*job.task, job.seed) : nullptr;
      results[i] = run_episode(*job.task, job.seed, inst, *policy, observer.get());
    } catch (const std::exception& e) {
      EpisodeResult r;
      r.task_key = job.task->key();
      r.seed = job.seed;
      r.stage_outcomes.assign(job.task->stage_labels.size(), false);
      r.failure_reason = e.what();
      results[i] = std::move(r);
    }
  });
  return results;
}

}  // namespace labsim::bench
