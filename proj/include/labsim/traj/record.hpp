#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labsim/bench/episode.hpp"
#include "labsim/core/json.hpp"
#include "labsim/world/types.hpp"

namespace labsim::traj {

inline constexpr int kEpisodeSchemaVersion = 1;

struct EpisodeHeader {
  std::string task_id;
  std::uint64_t seed = 0;
  double dt_s = world::kDefaultDt;
  int schema_version = kEpisodeSchemaVersion;
  Json scene;  // world snapshot at tick 0

  friend bool operator==(const EpisodeHeader&, const EpisodeHeader&) = default;
};

// Action applied at `tick` and the agent state it produced.
struct Frame {
  std::int64_t tick = 0;
  world::AgentAction action;
  Pose ee_pose;
  double gripper_aperture_m = 0.0;
  std::string phase_label;
  int phase = -1;
  int stage = -1;
  std::vector<world::WorldEvent> events;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct EpisodeRecord {
  EpisodeHeader header;
  std::vector<Frame> frames;
  std::optional<bench::EpisodeResult> result;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

// Append-only capture of one episode.
class Recorder final : public bench::EpisodeObserver {
 public:
  void on_start(const bench::TaskSpec& task, std::uint64_t seed, const world::WorldState& initial) override;
  void on_tick(const manip::PolicyStep& step, const world::WorldState& after) override;
  void on_finish(const bench::EpisodeResult& result) override;

  const EpisodeRecord& record() const { return record_; }
  EpisodeRecord take() { return std::move(record_); }

 private:
  EpisodeRecord record_;
  std::size_t events_seen_ = 0;
};

// Steps `initial` through `actions` and records every tick.
EpisodeRecord record_actions(std::string task_id, std::uint64_t seed, const world::WorldState& initial,
                             std::span<const world::AgentAction> actions);

// JSON lines: header, one line per frame, optional footer. Doubles keep full precision.
std::string to_jsonl(const EpisodeRecord& record);
EpisodeRecord from_jsonl(std::string_view text);
void save_episode(const std::filesystem::path& path, const EpisodeRecord& record);
EpisodeRecord load_episode(const std::filesystem::path& path);

// Re-simulates from the header snapshot. Throws ReplayDivergence at the first
// tick whose end-effector pose, gripper aperture or events differ from the record.
world::WorldState replay(const EpisodeRecord& record, std::shared_ptr<const chem::Chemistry> chemistry);

// Replays a record as a policy: emits the recorded actions in order, then idles.
// With `done_tick` set it reports completion from that tick on, matching the
// recorded run; otherwise the harness falls back to goal-based completion.
class ReplayPolicy final : public manip::Policy {
 public:
  explicit ReplayPolicy(std::vector<world::AgentAction> actions, std::optional<std::int64_t> done_tick = {})
      : actions_(std::move(actions)), done_tick_(done_tick) {}
  static ReplayPolicy from_record(const EpisodeRecord& record);

  manip::PolicyStep act(const world::WorldState& world) override;
  bool reports_completion() const override { return done_tick_.has_value(); }

 private:
  std::vector<world::AgentAction> actions_;
  std::optional<std::int64_t> done_tick_;
  std::size_t next_ = 0;
};

void to_json(Json& j, const Frame& f);
void from_json(const Json& j, Frame& f);

}  // namespace labsim::traj
