#include "labsim/cli/app.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <ostream>
#include <sstream>

#include "labsim/bench/report.hpp"
#include "labsim/chem/external_oracle.hpp"
#include "labsim/core/error.hpp"
#include "labsim/nav/planner.hpp"
#include "labsim/scene/to_world.hpp"
#include "labsim/traj/dataset.hpp"
#include "labsim/traj/record.hpp"
#include "labsim/world/world.hpp"

namespace labsim::cli {

namespace {

namespace fs = std::filesystem;

struct Session {
  RunConfig config;
  bool json = false;
  std::ostream& out;
  std::ostream& err;

  // Text goes to stdout as-is; with --json only `doc` is printed.
  void emit(const Json& doc, const std::string& text) const {
    if (json) {
      Json d = doc;
      d["ok"] = true;
      out << d.dump(2) << '\n';
    } else {
      out << text;
    }
  }
};

bench::BenchContext load_context(const RunConfig& c) {
  bench::BenchContext ctx;
  ctx.chemistry = chem::Chemistry::load(c.paths.substances, c.paths.reactions);
  const Json doc = read_json_file(c.paths.assets);
  ctx.room = doc.at("room").get<scene::RoomSpec>();
  ctx.catalog = scene::catalog_from_json(doc);
  return ctx;
}

std::vector<bench::TaskSpec> load_tasks(const RunConfig& c) {
  std::vector<bench::TaskSpec> tasks = bench::load_registry(c.paths.tasks);
  if (c.hold_s) {
    for (bench::TaskSpec& t : tasks) t.hold_s = *c.hold_s;
  }
  return tasks;
}

// Accepts a task id or a report key such as "l3_pick[ood]".
const bench::TaskSpec& resolve_task(const std::vector<bench::TaskSpec>& registry, const std::string& text) {
  std::string id = text;
  bench::Split split = bench::Split::kNone;
  if (const auto open = text.find('['); open != std::string::npos && text.back() == ']') {
    id = text.substr(0, open);
    try {
      split = bench::split_from_string(text.substr(open + 1, text.size() - open - 2));
    } catch (const Error&) {
      split = bench::Split::kNone;
      id = text;
    }
  }
  for (const bench::TaskSpec& t : registry) {
    if (t.id == id && t.split == split) return t;
  }
  std::string known;
  for (const bench::TaskSpec& t : registry) known += "\n  " + t.key() + "  " + t.name;
  throw Error(ErrorCode::kUnknownTask, "'" + text + "'; available tasks:" + known);
}

std::string file_safe(const std::string& key) {
  std::string s;
  for (char c : key) {
    if (c == '[') {
      s += '-';
    } else if (c != ']') {
      s += c;
    }
  }
  return s;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// --- scene gen -------------------------------------------------------------

struct SceneArgs {
  std::string out;
  std::vector<double> room;
  int k = 0;
  std::vector<double> weights;
};

int scene_gen(const Session& s, const SceneArgs& a) {
  const RunConfig& c = s.config;
  const Json assets = read_json_file(c.paths.assets);
  scene::RoomSpec room = assets.at("room").get<scene::RoomSpec>();
  const std::vector<scene::AssetSpec> catalog = scene::catalog_from_json(assets);
  std::optional<Vec2> size = c.room_size_m;
  if (!a.room.empty()) size = Vec2{a.room[0], a.room[1]};
  if (size) room.bounds.max = room.bounds.min + *size;

  scene::LayoutConfig lc;
  lc.candidates_per_asset = a.k > 0 ? a.k : c.candidates_per_asset;
  lc.weights = c.weights;
  if (!a.weights.empty()) lc.weights = {a.weights[0], a.weights[1], a.weights[2]};

  const scene::SceneLayout layout = scene::place_all(room, catalog, lc, c.seed);
  if (const auto problems = scene::validate_layout(layout, catalog); !problems.empty()) {
    throw Error(ErrorCode::kInfeasible, "generated layout failed validation: " + problems.front());
  }
  const world::WorldState world = scene::layout_to_world(layout, catalog);
  const fs::path path = a.out.empty() ? c.paths.output_dir / ("scene_s" + std::to_string(c.seed) + ".json") : fs::path(a.out);
  write_text_file(path, Json{{"layout", layout}, {"world", world::world_to_json(world)}}.dump(2) + "\n");

  const std::string method = layout.method == scene::LayoutMethod::kSampled ? "sampled" : "dfs_fallback";
  s.emit({{"command", "scene gen"},
          {"scene", path.string()},
          {"seed", c.seed},
          {"assets", layout.placements.size()},
          {"method", method},
          {"score", layout.score}},
         "wrote " + path.string() + ": " + std::to_string(layout.placements.size()) + " assets, " + method +
             ", score " + fixed(layout.score, 4) + "\n");
  return kExitOk;
}

// --- collect ---------------------------------------------------------------

struct CollectArgs {
  std::string task;
  int n = 0;
  std::string out;
  bool keep_failures = false;
};

int collect(const Session& s, const CollectArgs& a) {
  const RunConfig& c = s.config;
  const std::vector<bench::TaskSpec> registry = load_tasks(c);
  const bench::TaskSpec& task = resolve_task(registry, a.task);
  const bench::BenchContext ctx = load_context(c);

  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(a.n));
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = c.seed + i;
  const fs::path dir = a.out.empty() ? c.paths.output_dir / file_safe(task.key()) : fs::path(a.out);
  traj::CollectOptions opts;
  opts.workers = c.workers;
  opts.keep_failures = a.keep_failures;
  const traj::DatasetManifest m = traj::collect_batch(task, seeds, ctx, dir, opts);

  const fs::path manifest = dir / "manifest.json";
  std::string text = "collected " + std::to_string(m.episodes.size()) + " episode(s) of " + task.key() + " (" +
                     std::to_string(m.failures.size()) + " failed) -> " + manifest.string() + "\n";
  for (const traj::FailedEpisode& f : m.failures) text += "  seed " + std::to_string(f.seed) + ": " + f.reason + "\n";
  s.emit({{"command", "collect"},
          {"manifest", manifest.string()},
          {"task", task.key()},
          {"episodes", m.episodes.size()},
          {"failures", m.failures.size()}},
         text);
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> tasks;
  int level = 0;
  std::string policy = "scripted";
  int episodes = 0;
  double threshold = -1.0;
  std::string out;
};

int eval(const Session& s, const EvalArgs& a) {
  const RunConfig& c = s.config;
  const std::vector<bench::TaskSpec> registry = load_tasks(c);
  const bench::BenchContext ctx = load_context(c);
  const double threshold = a.threshold >= 0.0 ? a.threshold : c.threshold;

  std::vector<bench::EpisodeResult> results;
  std::vector<bench::TaskSpec> selected;
  constexpr std::string_view kReplayPrefix = "replay:";
  if (a.policy.starts_with(kReplayPrefix)) {
    const traj::EpisodeRecord record = traj::load_episode(a.policy.substr(kReplayPrefix.size()));
    const bench::TaskSpec& task = resolve_task(registry, record.header.task_id);
    selected.push_back(task);
    bench::TaskInstance inst = bench::instantiate(task, record.header.seed, ctx);
    inst.world = world::world_from_json(record.header.scene, ctx.chemistry);
    traj::ReplayPolicy policy = traj::ReplayPolicy::from_record(record);
    results.push_back(bench::run_episode(task, record.header.seed, inst, policy));
  } else if (a.policy == "scripted") {
    if (!a.tasks.empty()) {
      for (const std::string& t : a.tasks) selected.push_back(resolve_task(registry, t));
    } else {
      for (const bench::TaskSpec& t : registry) {
        if (a.level == 0 || t.level == a.level) selected.push_back(t);
      }
      if (selected.empty()) throw Error(ErrorCode::kInvalidArgument, "no tasks at level " + std::to_string(a.level));
    }
    std::optional<int> episodes = c.episodes;
    if (a.episodes > 0) episodes = a.episodes;
    const auto jobs = bench::make_jobs(selected, c.seed, episodes);
    results = bench::run_batch(jobs, ctx, bench::oracle_factory(), c.workers);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "policy must be 'scripted' or 'replay:<file>', got '" + a.policy + "'");
  }

  const bench::BenchReport report = bench::aggregate(selected, results);
  const bool met = bench::meets_threshold(report, threshold);
  const fs::path path = a.out.empty() ? c.paths.output_dir / "report.json" : fs::path(a.out);
  write_text_file(path, Json(report).dump(2) + "\n");

  s.emit({{"command", "eval"},
          {"report_path", path.string()},
          {"policy", a.policy},
          {"threshold", threshold},
          {"meets_threshold", met},
          {"report", report}},
         bench::format_table(report) + "threshold " + fixed(threshold, 2) + ": " + (met ? "met" : "NOT met") +
             "\nreport -> " + path.string() + "\n");
  return met ? kExitOk : kExitThreshold;
}

// --- nav plan --------------------------------------------------------------

struct NavArgs {
  std::string map;
  std::vector<double> from;
  std::vector<double> to;
  double radius = nav::kCollisionRadiusM;
};

int nav_plan(const Session& s, const NavArgs& a) {
  const fs::path map = a.map.empty() ? s.config.paths.assets.parent_path() / "maps" / "demo.json" : fs::path(a.map);
  const nav::OccupancyGrid grid = nav::load_occupancy(map);
  const nav::NavPath path = nav::plan(grid, {a.from[0], a.from[1]}, {a.to[0], a.to[1]}, a.radius);

  std::ostringstream text;
  text << std::setprecision(17) << "cost " << path.cost << " (" << path.steps.diagonal << " diagonal, "
       << path.steps.straight << " straight)\n";
  text << std::setprecision(6);
  for (const Vec2& w : path.waypoints) text << "  " << w.x << ' ' << w.y << '\n';
  Json doc = path;
  doc["command"] = "nav plan";
  doc["map"] = map.string();
  s.emit(doc, text.str());
  return kExitOk;
}

// --- chem mix --------------------------------------------------------------

struct ChemArgs {
  std::vector<std::string> components;
  double temperature_c = 20.0;
};

int chem_mix(const Session& s, const ChemArgs& a) {
  const auto chemistry = chem::Chemistry::load(s.config.paths.substances, s.config.paths.reactions);
  const chem::SubstanceDatabase& db = chemistry->substances;
  chem::Mixture mix;
  mix.set_temperature_c(a.temperature_c);
  for (const std::string& item : a.components) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "component '" + item + "' must look like substance:mol");
    }
    const std::string id = item.substr(0, colon);
    if (!db.contains(id)) throw Error(ErrorCode::kUnknownSubstance, "'" + id + "'");
    double mol = 0.0;
    try {
      std::size_t used = 0;
      mol = std::stod(item.substr(colon + 1), &used);
      if (used != item.size() - colon - 1) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "amount in '" + item + "' is not a number");
    }
    if (!(mol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "amount in '" + item + "' must be positive");
    mix.add(id, mol);
  }

  std::shared_ptr<const chem::ReactionOracle> oracle = std::make_shared<chem::RuleTableOracle>(chemistry->rules);
  if (const auto external = chem::ExternalOracleConfig::from_env()) {
    oracle = std::make_shared<chem::FallbackOracle>(std::make_shared<chem::ExternalOracle>(*external, db), oracle);
  }
  const chem::ResolveResult result = chem::resolve_reactions(mix, *oracle, db);

  std::ostringstream text;
  text << std::setprecision(6);
  Json fired = Json::array();
  for (const chem::ReactionOutcome& o : result.outcomes) fired.push_back(o.rule_id);
  text << "reactions: " << (result.outcomes.empty() ? "none" : "");
  for (std::size_t i = 0; i < result.outcomes.size(); ++i) text << (i ? ", " : "") << result.outcomes[i].rule_id;
  text << '\n';
  for (const chem::Component& comp : result.mixture.components()) {
    text << "  " << comp.substance_id << ' ' << comp.amount_mol << " mol\n";
  }
  const double mass_g = chem::mass_g(result.mixture, db);
  text << "mass " << mass_g << " g\n";
  s.emit({{"command", "chem mix"},
          {"input", mix},
          {"mixture", result.mixture},
          {"reactions", fired},
          {"mass_g", mass_g}},
         text.str());
  return kExitOk;
}

// --- replay ----------------------------------------------------------------

int replay_file(const Session& s, const std::string& file) {
  const traj::EpisodeRecord record = traj::load_episode(file);
  const auto chemistry = chem::Chemistry::load(s.config.paths.substances, s.config.paths.reactions);
  Json doc{{"command", "replay"}, {"file", file}, {"task", record.header.task_id}, {"frames", record.frames.size()}};
  try {
    const world::WorldState end = traj::replay(record, chemistry);
    doc["divergence"] = nullptr;
    doc["final_tick"] = end.tick;
    s.emit(doc, "no divergence (" + std::to_string(record.frames.size()) + " frames, task " + record.header.task_id +
                    ")\n");
    return kExitOk;
  } catch (const ReplayDivergence& e) {
    doc["divergence"] = {{"tick", e.tick()}, {"message", e.what()}};
    s.emit(doc, "divergence at tick " + std::to_string(e.tick()) + ": " + e.what() + "\n");
    return kExitThreshold;
  }
}

void report_error(std::ostream& out, std::ostream& err, bool json, const std::string& message) {
  err << "labsim: " << message << '\n';
  if (json) out << Json{{"ok", false}, {"error", message}}.dump(2) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Laboratory manipulation simulator and benchmark toolkit", "labsim"};
  app.fallthrough();
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int workers = 1;
  bool json = false;
  std::string config_path;
  std::string data_dir;
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Base random seed");
  CLI::Option* workers_opt = app.add_option("--workers", workers, "Episode worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--json", json, "Print a single JSON document on stdout");
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--data-dir", data_dir, "Directory holding assets, substances, reactions and tasks");

  SceneArgs scene_args;
  CLI::App* scene = app.add_subcommand("scene", "Scene generation");
  scene->require_subcommand(1);
  CLI::App* scene_gen_cmd = scene->add_subcommand("gen", "Generate a room layout and write scene JSON");
  scene_gen_cmd->add_option("--out", scene_args.out, "Output scene file");
  scene_gen_cmd->add_option("--room", scene_args.room, "Room width and depth in metres")->expected(2);
  scene_gen_cmd->add_option("--k", scene_args.k, "Candidates per asset")->check(CLI::PositiveNumber);
  scene_gen_cmd->add_option("--weights", scene_args.weights, "Edge, distance and orientation weights")->expected(3);

  CollectArgs collect_args;
  CLI::App* collect_cmd = app.add_subcommand("collect", "Record scripted demonstrations");
  collect_cmd->add_option("--task", collect_args.task, "Task id, e.g. l1_pick or l3_pick[ood]")->required();
  collect_cmd->add_option("-n,--episodes", collect_args.n, "Number of episodes")
      ->required()
      ->check(CLI::Range(1, 1'000'000));
  collect_cmd->add_option("--out", collect_args.out, "Output directory");
  collect_cmd->add_flag("--keep-failures", collect_args.keep_failures, "Also write failed episodes");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Run the benchmark and print the report");
  eval_cmd->add_option("--task", eval_args.tasks, "Task id or key (repeatable); default all");
  eval_cmd->add_option("--level", eval_args.level, "Only tasks of this level")->check(CLI::Range(1, 5));
  eval_cmd->add_option("--policy", eval_args.policy, "'scripted' or 'replay:<file>'");
  eval_cmd->add_option("--episodes", eval_args.episodes, "Episodes per task")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--threshold", eval_args.threshold, "Minimum per-task success rate")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--out", eval_args.out, "Report file");

  NavArgs nav_args;
  CLI::App* nav = app.add_subcommand("nav", "Navigation");
  nav->require_subcommand(1);
  CLI::App* nav_plan_cmd = nav->add_subcommand("plan", "Plan a path on an occupancy map");
  nav_plan_cmd->add_option("--map", nav_args.map, "Occupancy map header (JSON)");
  nav_plan_cmd->add_option("--from", nav_args.from, "Start x y in metres")->expected(2)->required();
  nav_plan_cmd->add_option("--to", nav_args.to, "Goal x y in metres")->expected(2)->required();
  nav_plan_cmd->add_option("--radius", nav_args.radius, "Collision radius in metres")->check(CLI::NonNegativeNumber);

  ChemArgs chem_args;
  CLI::App* chem = app.add_subcommand("chem", "Chemistry");
  chem->require_subcommand(1);
  CLI::App* chem_mix_cmd = chem->add_subcommand("mix", "Mix substances and resolve reactions");
  chem_mix_cmd->add_option("components", chem_args.components, "substance:mol ...")->required();
  chem_mix_cmd->add_option("--temp", chem_args.temperature_c, "Temperature in Celsius");

  std::string replay_path;
  CLI::App* replay_cmd = app.add_subcommand("replay", "Re-simulate a recorded episode");
  replay_cmd->add_option("file", replay_path, "Episode file (.ep.jsonl)")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help_out;
    std::ostringstream help_err;
    const int code = app.exit(e, help_out, help_err);
    out << help_out.str();
    if (code == 0) return kExitOk;
    std::string message = help_err.str().empty() ? e.what() : help_err.str();
    while (!message.empty() && (message.back() == '\n' || message.back() == ' ')) message.pop_back();
    report_error(out, err, json, message);
    return kExitUsage;
  }

  try {
    Session s{RunConfig::with_data_dir(data_dir.empty() ? default_data_dir() : fs::path(data_dir)), json, out, err};
    if (!config_path.empty()) s.config = apply_config(s.config, read_json_file(config_path));
    if (seed_opt->count() > 0) s.config.seed = seed;
    if (workers_opt->count() > 0) s.config.workers = workers;
    check_paths(s.config);

    if (scene_gen_cmd->parsed()) return scene_gen(s, scene_args);
    if (collect_cmd->parsed()) return collect(s, collect_args);
    if (eval_cmd->parsed()) return eval(s, eval_args);
    if (nav_plan_cmd->parsed()) return nav_plan(s, nav_args);
    if (chem_mix_cmd->parsed()) return chem_mix(s, chem_args);
    if (replay_cmd->parsed()) return replay_file(s, replay_path);
    report_error(out, err, json, "no command given");
    return kExitUsage;
  } catch (const std::exception& e) {
    report_error(out, err, json, e.what());
    return kExitUsage;
  }
}

}  // namespace labsim::cli
