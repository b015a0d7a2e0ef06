#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labsim/bench/goal.hpp"
#include "labsim/chem/reaction.hpp"
#include "labsim/manip/fsm.hpp"
#include "labsim/nav/planner.hpp"
#include "labsim/scene/layout.hpp"
#include "labsim/world/types.hpp"

namespace labsim::bench {

inline constexpr double kLiftBarM = 0.20;          // pick success: base raised at least this much
inline constexpr double kPlaceToleranceM = 0.03;   // placed body within this of the target xy
inline constexpr double kSpillToleranceMl = 0.5;
inline constexpr double kDoorToleranceRad = deg_to_rad(3.0);
inline constexpr double kDoorClosedRad = deg_to_rad(2.0);
inline constexpr double kDrawerToleranceM = 0.01;
inline constexpr double kDrawerClosedM = 0.005;
inline constexpr double kStirRevolutionsMin = 1.5;
inline constexpr int kShakeCyclesMin = 3;
inline constexpr double kDefaultHoldS = 2.0;
inline constexpr double kNavGoalReachM = 1.4;  // beaker within this of the base goal

enum class Split { kNone, kId, kOod };

std::string_view to_string(Split split);
Split split_from_string(std::string_view text);

struct TaskSpec {
  std::string id;
  std::string name;
  int level = 1;
  std::string template_name;
  Split split = Split::kNone;
  double hold_s = kDefaultHoldS;
  std::int64_t time_limit_ticks = 3000;
  std::vector<std::string> stage_labels;
  int episodes = 60;
  std::vector<std::string> notes;  // requirements the simulator does not model

  // Report key: the id, suffixed with the split for Level-3 variants.
  std::string key() const;
  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

// Level-3 entries listing several splits expand to one spec per split.
std::vector<TaskSpec> registry_from_json(const Json& doc);
std::vector<TaskSpec> load_registry(const std::filesystem::path& path);
// Throws UnknownTask.
const TaskSpec& find_task(const std::vector<TaskSpec>& registry, std::string_view id, Split split = Split::kNone);

void to_json(Json& j, const TaskSpec& t);

struct Stage {
  std::string label;
  GoalPredicate predicate;

  friend bool operator==(const Stage&, const Stage&) = default;
};

struct NavSetup {
  nav::OccupancyGrid inflated;
  nav::NavPath path;
  Vec2 goal{};
  double heading = 0.0;
  std::string object_id;

  friend bool operator==(const NavSetup&, const NavSetup&) = default;
};

struct TaskInstance {
  world::WorldState world;
  GoalPredicate goal;
  std::vector<Stage> stages;
  std::vector<manip::ActionParams> plan;  // scripted oracle
  std::optional<NavSetup> nav;
  std::vector<std::string> variant_tags;
};

// Shared read-only inputs for instantiation.
struct BenchContext {
  std::shared_ptr<const chem::Chemistry> chemistry;
  scene::RoomSpec room;
  std::vector<scene::AssetSpec> catalog;

  static BenchContext load(const std::filesystem::path& data_dir);
};

// Per-episode generator seed: FNV-1a of the task key mixed with `seed`.
std::uint64_t instance_seed(const TaskSpec& task, std::uint64_t seed);

// Deterministic in (task, seed). Throws UnknownTask for an unknown template and
// Infeasible when no valid instance is found.
TaskInstance instantiate(const TaskSpec& task, std::uint64_t seed, const BenchContext& context);

// Every variant tag a template may draw for the split.
std::vector<std::string> variant_pool_tags(std::string_view template_name, Split split);

}  // namespace labsim::bench
