#include "labsim/traj/record.hpp"

#include <limits>

#include "labsim/core/error.hpp"
#include "labsim/world/world.hpp"

namespace labsim::traj {

using world::WorldState;

void Recorder::on_start(const bench::TaskSpec& task, std::uint64_t seed, const WorldState& initial) {
  record_ = EpisodeRecord{};
  record_.header.task_id = task.key();
  record_.header.seed = seed;
  record_.header.dt_s = initial.dt_s;
  record_.header.scene = world::world_to_json(initial);
  events_seen_ = initial.event_log.size();
}

void Recorder::on_tick(const manip::PolicyStep& step, const WorldState& after) {
  Frame f;
  f.tick = after.tick - 1;
  f.action = step.action;
  f.ee_pose = after.agent.ee_pose;
  f.gripper_aperture_m = after.agent.gripper_aperture_m;
  f.phase_label = step.phase_label;
  f.phase = step.phase;
  f.stage = step.stage;
  f.events.assign(after.event_log.begin() + static_cast<std::ptrdiff_t>(events_seen_), after.event_log.end());
  events_seen_ = after.event_log.size();
  record_.frames.push_back(std::move(f));
}

void Recorder::on_finish(const bench::EpisodeResult& result) { record_.result = result; }

EpisodeRecord record_actions(std::string task_id, std::uint64_t seed, const WorldState& initial,
                             std::span<const world::AgentAction> actions) {
  Recorder recorder;
  bench::TaskSpec spec;
  spec.id = std::move(task_id);
  recorder.on_start(spec, seed, initial);
  WorldState w = initial;
  for (const world::AgentAction& a : actions) {
    world::advance(w, a);
    manip::PolicyStep step;
    step.action = a;
    recorder.on_tick(step, w);
  }
  return recorder.take();
}

void to_json(Json& j, const Frame& f) {
  j = Json{{"tick", f.tick},
           {"action", f.action},
           {"ee_pose", f.ee_pose},
           {"gripper", f.gripper_aperture_m},
           {"phase_label", f.phase_label},
           {"phase", f.phase},
           {"stage", f.stage},
           {"events", f.events}};
}

void from_json(const Json& j, Frame& f) {
  f.tick = j.at("tick").get<std::int64_t>();
  f.action = j.at("action").get<world::AgentAction>();
  f.ee_pose = j.at("ee_pose").get<Pose>();
  f.gripper_aperture_m = j.at("gripper").get<double>();
  f.phase_label = j.at("phase_label").get<std::string>();
  f.phase = j.at("phase").get<int>();
  f.stage = j.at("stage").get<int>();
  f.events = j.at("events").get<std::vector<world::WorldEvent>>();
}

std::string to_jsonl(const EpisodeRecord& record) {
  const EpisodeHeader& h = record.header;
  std::string out = Json{{"type", "header"},
                         {"task_id", h.task_id},
                         {"seed", h.seed},
                         {"dt_s", h.dt_s},
                         {"schema_version", h.schema_version},
                         {"scene", h.scene}}
                        .dump();
  out += '\n';
  for (const Frame& f : record.frames) {
    Json line = f;
    line["type"] = "frame";
    out += line.dump();
    out += '\n';
  }
  if (record.result) {
    out += Json{{"type", "footer"}, {"result", *record.result}}.dump();
    out += '\n';
  }
  return out;
}

EpisodeRecord from_jsonl(std::string_view text) {
  EpisodeRecord record;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  try {
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      const std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        if (have_header) throw Error(ErrorCode::kSchemaError, "second header on line " + std::to_string(line_no));
        record.header.task_id = j.at("task_id").get<std::string>();
        record.header.seed = j.at("seed").get<std::uint64_t>();
        record.header.dt_s = j.at("dt_s").get<double>();
        record.header.schema_version = j.at("schema_version").get<int>();
        record.header.scene = j.at("scene");
        have_header = true;
      } else if (!have_header) {
        throw Error(ErrorCode::kSchemaError, "episode must start with a header line");
      } else if (type == "frame") {
        if (record.result) throw Error(ErrorCode::kSchemaError, "frame after footer on line " + std::to_string(line_no));
        Frame f = j.get<Frame>();
        if (f.tick != static_cast<std::int64_t>(record.frames.size())) {
          throw Error(ErrorCode::kSchemaError, "frame ticks must run 0, 1, 2, ...; got " + std::to_string(f.tick) +
                                                   " on line " + std::to_string(line_no));
        }
        record.frames.push_back(std::move(f));
      } else if (type == "footer") {
        record.result = j.at("result").get<bench::EpisodeResult>();
      } else {
        throw Error(ErrorCode::kSchemaError, "unknown line type '" + type + "'");
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, "episode line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw Error(ErrorCode::kSchemaError, "episode has no header");
  return record;
}

void save_episode(const std::filesystem::path& path, const EpisodeRecord& record) {
  write_text_file(path, to_jsonl(record));
}

EpisodeRecord load_episode(const std::filesystem::path& path) { return from_jsonl(read_text_file(path)); }

WorldState replay(const EpisodeRecord& record, std::shared_ptr<const chem::Chemistry> chemistry) {
  if (record.header.schema_version != kEpisodeSchemaVersion) {
    throw Error(ErrorCode::kSchemaError,
                "episode schema version " + std::to_string(record.header.schema_version) + " is not supported");
  }
  WorldState w = world::world_from_json(record.header.scene, std::move(chemistry));
  std::size_t seen = w.event_log.size();
  for (const Frame& f : record.frames) {
    if (f.tick != w.tick) throw ReplayDivergence(w.tick, "frame is labelled tick " + std::to_string(f.tick));
    try {
      world::advance(w, f.action);
    } catch (const Error& e) {
      throw ReplayDivergence(f.tick, e.what());
    }
    if (!(w.agent.ee_pose == f.ee_pose)) throw ReplayDivergence(f.tick, "end-effector pose differs");
    if (w.agent.gripper_aperture_m != f.gripper_aperture_m) throw ReplayDivergence(f.tick, "gripper differs");
    const std::vector<world::WorldEvent> events(w.event_log.begin() + static_cast<std::ptrdiff_t>(seen),
                                                w.event_log.end());
    if (events != f.events) throw ReplayDivergence(f.tick, "events differ");
    seen = w.event_log.size();
  }
  return w;
}

ReplayPolicy ReplayPolicy::from_record(const EpisodeRecord& record) {
  std::vector<world::AgentAction> actions;
  actions.reserve(record.frames.size());
  for (const Frame& f : record.frames) actions.push_back(f.action);
  std::optional<std::int64_t> done;
  // A recorded run that never finished must not finish on replay either.
  if (record.result) done = record.result->done_tick.value_or(std::numeric_limits<std::int64_t>::max());
  return ReplayPolicy(std::move(actions), done);
}

manip::PolicyStep ReplayPolicy::act(const WorldState& world) {
  manip::PolicyStep step;
  step.phase_label = "replay";
  if (next_ < actions_.size()) step.action = actions_[next_++];
  step.final_done = done_tick_ && world.tick >= *done_tick_;
  return step;
}

}  // namespace labsim::traj
