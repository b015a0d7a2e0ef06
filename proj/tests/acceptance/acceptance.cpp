// Acceptance suite: one line per headline criterion, nonzero exit if any fails.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "labsim/bench/report.hpp"
#include "labsim/chem/external_oracle.hpp"
#include "labsim/core/error.hpp"
#include "labsim/core/random.hpp"
#include "labsim/nav/planner.hpp"
#include "labsim/scene/layout.hpp"
#include "labsim/traj/record.hpp"
#include "labsim/world/builders.hpp"
#include "labsim/world/world.hpp"

using namespace labsim;

namespace {

const std::string kDataDir = LABSIM_DATA_DIR;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Collects failed expectations; the first few are reported.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (notes_.size() < 3) notes_.push_back(what);
  }
  bool ok() const { return failures_ == 0; }
  Outcome outcome(const std::string& summary) const {
    if (ok()) return {true, summary};
    std::string d = summary + "; " + std::to_string(failures_) + " failure(s):";
    for (const std::string& n : notes_) d += " [" + n + "]";
    return {false, d};
  }

 private:
  int failures_ = 0;
  std::vector<std::string> notes_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

const bench::BenchContext& context() {
  static const bench::BenchContext ctx = bench::BenchContext::load(kDataDir);
  return ctx;
}

const std::vector<bench::TaskSpec>& registry() {
  static const std::vector<bench::TaskSpec> tasks = bench::load_registry(kDataDir + "/tasks.json");
  return tasks;
}

// --- 1 ----------------------------------------------------------------------

Outcome oracle_completeness() {
  std::vector<bench::TaskSpec> tasks;
  for (const bench::TaskSpec& t : registry()) {
    if (t.level <= 2) tasks.push_back(t);
  }
  const auto t0 = Clock::now();
  const auto jobs = bench::make_jobs(tasks, 0, 60);
  const auto results = bench::run_batch(jobs, context(), bench::oracle_factory(), 1);
  const double elapsed = seconds_since(t0);
  const bench::BenchReport report = bench::aggregate(tasks, results);

  Checker c;
  int l1 = 0;
  int l2 = 0;
  for (const bench::TaskSpec& t : tasks) (t.level == 1 ? l1 : l2) += 1;
  c.expect(l1 == 10 && l2 == 6, "expected 10 Level-1 and 6 Level-2 tasks");
  for (const bench::TaskRow& row : report.rows) {
    c.expect(row.episodes == 60, row.key + " ran " + std::to_string(row.episodes) + " episodes");
    c.expect(row.successes == row.episodes, row.key + " " + std::to_string(row.successes) + "/60");
  }
  for (const bench::EpisodeResult& r : results) {
    if (!r.success) c.expect(false, r.task_key + " seed " + std::to_string(r.seed) + ": " + r.failure_reason.value_or(""));
  }
  c.expect(elapsed < 300.0, "runtime " + fmt(elapsed) + " s");
  return c.outcome(std::to_string(report.successes) + "/" + std::to_string(report.episodes) + " episodes over " +
                   std::to_string(report.rows.size()) + " tasks in " + fmt(elapsed) + " s");
}

// --- 2 ----------------------------------------------------------------------

Outcome protocol_constants() {
  Checker c;
  c.expect(nav::kNavCellM == 0.5, "nav cell");
  c.expect(nav::kHeightBandLowM == 0.1 && nav::kHeightBandHighM == 1.6, "height band");
  c.expect(nav::kCollisionRadiusM == 0.6, "collision radius");
  c.expect(bench::kLiftBarM == 0.20, "lift bar");
  c.expect(bench::kDefaultHoldS == 2.0, "hold seconds");
  c.expect(world::kTicksPerSecond == 60, "tick rate");
  c.expect(world::kDefaultDt == 1.0 / 60.0, "dt");
  c.expect(world::ticks_for_seconds(2.0) == 120, "hold ticks");
  c.expect(nav::OccupancyGrid{}.cell_m == 0.5, "grid default cell");
  for (const bench::TaskSpec& t : registry()) {
    c.expect(t.hold_s == 2.0, t.key() + " hold_s");
    c.expect(world::ticks_for_seconds(t.hold_s) == 120, t.key() + " hold ticks");
  }
  const bench::TaskInstance pick = bench::instantiate(bench::find_task(registry(), "l1_pick"), 0, context());
  c.expect(pick.world.dt_s == 1.0 / 60.0, "instance dt");
  bool lift_bar = false;
  for (const bench::Condition& cond : pick.goal.all) {
    if (cond.kind == bench::ConditionKind::kMinBaseHeight) lift_bar = std::abs(cond.value - (world::kTableTopM + 0.20)) < 1e-12;
  }
  c.expect(lift_bar, "pick goal does not use the 0.20 m lift bar");
  return c.outcome("cell 0.5 m, band [0.1, 1.6] m, radius 0.6 m, lift 0.20 m, hold 2.0 s = 120 ticks at dt 1/60");
}

// --- 3 ----------------------------------------------------------------------

// Reference: Dijkstra with a linear-scan frontier, no heuristic. Costs to every
// reachable cell from `s`.
std::vector<std::optional<nav::PathCost>> dijkstra(const nav::OccupancyGrid& g, nav::GridIndex s) {
  const auto id = [&](int r, int col) { return static_cast<std::size_t>(r * g.width + col); };
  const auto open = [&](int r, int col) {
    return r >= 0 && col >= 0 && r < g.height && col < g.width && g.at({r, col}) == nav::Cell::kFree;
  };
  const std::size_t n = static_cast<std::size_t>(g.width * g.height);
  std::vector<nav::PathCost> dist(n);
  std::vector<char> reached(n, 0);
  std::vector<char> done(n, 0);
  reached[id(s.row, s.col)] = 1;
  while (true) {
    int br = -1;
    int bc = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < g.height; ++r) {
      for (int col = 0; col < g.width; ++col) {
        const std::size_t k = id(r, col);
        if (reached[k] && !done[k] && dist[k].value() < best) {
          best = dist[k].value();
          br = r;
          bc = col;
        }
      }
    }
    if (br < 0) break;
    done[id(br, bc)] = 1;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if ((dr == 0 && dc == 0) || !open(br + dr, bc + dc)) continue;
        const bool diagonal = dr != 0 && dc != 0;
        if (diagonal && !(open(br + dr, bc) && open(br, bc + dc))) continue;
        nav::PathCost next = dist[id(br, bc)];
        (diagonal ? next.diagonal : next.straight) += 1;
        const std::size_t k = id(br + dr, bc + dc);
        if (!reached[k] || next.value() < dist[k].value()) {
          reached[k] = 1;
          dist[k] = next;
        }
      }
    }
  }
  std::vector<std::optional<nav::PathCost>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (done[k]) out[k] = dist[k];
  }
  return out;
}

Outcome astar_optimality() {
  Checker c;
  const auto t0 = Clock::now();
  int compared = 0;
  int unreachable = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    nav::OccupancyGrid raw = nav::OccupancyGrid::filled({0, 0}, nav::kNavCellM, 20, 20);
    for (nav::Cell& cell : raw.cells) cell = rng.uniform() < 0.2 ? nav::Cell::kOccupied : nav::Cell::kFree;
    const nav::OccupancyGrid inflated = nav::inflate(raw, nav::kCollisionRadiusM);
    std::vector<nav::GridIndex> free;
    for (int r = 0; r < 20; ++r) {
      for (int col = 0; col < 20; ++col) {
        if (inflated.at({r, col}) == nav::Cell::kFree) free.push_back({r, col});
      }
    }
    if (free.size() < 2) continue;
    Rng pick(seed + 7919);
    // Three random pairs plus the farthest reachable cell from a random start.
    std::vector<std::pair<nav::GridIndex, nav::GridIndex>> pairs;
    for (int trial = 0; trial < 3; ++trial) pairs.emplace_back(pick.pick(free), pick.pick(free));
    {
      const nav::GridIndex s = pick.pick(free);
      const auto all = dijkstra(inflated, s);
      nav::GridIndex far = s;
      double far_cost = 0.0;
      for (const nav::GridIndex cell : free) {
        const auto& d = all[static_cast<std::size_t>(cell.row * 20 + cell.col)];
        if (d && d->value() > far_cost) {
          far_cost = d->value();
          far = cell;
        }
      }
      if (!(far == s)) pairs.emplace_back(s, far);
    }
    for (const auto& [s, t] : pairs) {
      const auto reference = dijkstra(inflated, s)[static_cast<std::size_t>(t.row * 20 + t.col)];
      try {
        const nav::NavPath p = nav::plan(raw, raw.cell_center(s), raw.cell_center(t));
        c.expect(reference.has_value(), "planner found a path the reference did not");
        if (!reference) continue;
        ++compared;
        c.expect(p.cost == reference->value() && p.steps == *reference,
                 "seed " + std::to_string(seed) + ": cost " + fmt(p.cost, 6) + " vs " + fmt(reference->value(), 6));
        for (const Vec2& w : p.waypoints) {
          for (int r = 0; r < 20; ++r) {
            for (int col = 0; col < 20; ++col) {
              if (raw.at({r, col}) != nav::Cell::kFree) {
                c.expect(norm(raw.cell_center({r, col}) - w) > nav::kCollisionRadiusM, "waypoint inside inflation");
              }
            }
          }
        }
      } catch (const Error& e) {
        c.expect(e.code() == ErrorCode::kUnreachable && !reference, std::string("unexpected: ") + e.what());
        ++unreachable;
      }
    }
  }
  const double elapsed = seconds_since(t0);
  c.expect(compared >= 100, "only " + std::to_string(compared) + " comparisons");
  c.expect(elapsed < 10.0, "runtime " + fmt(elapsed) + " s");
  return c.outcome(std::to_string(compared) + " plans equal the Dijkstra cost exactly, " + std::to_string(unreachable) +
                   " agreed unreachable, " + fmt(elapsed) + " s");
}

// --- 4 ----------------------------------------------------------------------

scene::AssetSpec square(std::string id, double half = 0.125) {
  scene::AssetSpec a;
  a.id = std::move(id);
  a.category = "box";
  a.footprint_half_extents = {half, half};
  a.height_m = 1.0;
  return a;
}

Outcome layout_validity() {
  Checker c;
  const Json doc = read_json_file(kDataDir + "/assets.json");
  const auto room = doc.at("room").get<scene::RoomSpec>();
  const auto catalog = scene::catalog_from_json(doc);
  int valid = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const scene::SceneLayout layout = scene::place_all(room, catalog, {}, seed);
    const auto problems = scene::validate_layout(layout, catalog);
    c.expect(problems.empty(), "seed " + std::to_string(seed) + ": " + (problems.empty() ? "" : problems.front()));
    c.expect(layout.placements.size() == catalog.size(), "seed " + std::to_string(seed) + " dropped assets");
    if (problems.empty() && layout.placements.size() == catalog.size()) ++valid;
  }

  // Greedy sampling centres the box and strands the clip; only DFS finds the corner solution.
  const scene::RoomSpec tight{{{0, 0}, {0.75, 0.75}}, scene::kPlacementCellM};
  scene::AssetSpec box = square("box");
  scene::AssetSpec bar1 = square("bar1");
  bar1.category = "bar";
  bar1.footprint_half_extents = {0.375, 0.125};
  bar1.allowed_yaws = {0.0, kPi / 2};
  bar1.importance_rank = 1;
  scene::AssetSpec bar2 = bar1;
  bar2.id = "bar2";
  scene::AssetSpec clip = square("clip");
  clip.importance_rank = 2;
  clip.constraints.push_back({scene::ConstraintKind::kInstrumentSpecific, std::nullopt, "bar", 0.26});
  const std::vector<scene::AssetSpec> crowded{box, bar1, bar2, clip};
  const scene::SceneLayout fallback = scene::place_all(tight, crowded, {}, 4);
  c.expect(fallback.method == scene::LayoutMethod::kDfsFallback, "crowded catalog did not use the fallback");
  c.expect(scene::validate_layout(fallback, crowded).empty() && fallback.placements.size() == 4, "fallback layout invalid");

  std::vector<scene::AssetSpec> packed;
  for (int i = 0; i < 10; ++i) packed.push_back(square("a" + std::to_string(i)));
  bool infeasible = false;
  try {
    scene::place_all(tight, packed, {}, 1);
  } catch (const Error& e) {
    infeasible = e.code() == ErrorCode::kInfeasible;
  }
  c.expect(infeasible, "over-packed catalog did not raise Infeasible");
  return c.outcome(std::to_string(valid) + "/100 default layouts valid; crowded catalog -> dfs_fallback (valid); "
                   "10 assets in 9 cells -> Infeasible");
}

// --- 5 ----------------------------------------------------------------------

Outcome chemistry_conservation() {
  Checker c;
  const auto chem = context().chemistry;
  const chem::SubstanceDatabase& db = chem->substances;
  double worst_rule = 0.0;
  for (const chem::ReactionRule& rule : chem->rules.rules()) {
    const double imbalance = std::abs(chem::mass_imbalance_g_per_mol(rule, db));
    worst_rule = std::max(worst_rule, imbalance);
    c.expect(imbalance <= 0.1, rule.id + " imbalance " + fmt(imbalance, 4));
  }

  const chem::RuleTableOracle& table = chem->rules;
  const chem::ExternalOracle mocked({"http://mock/react", std::chrono::milliseconds(100), {}}, db,
                                    [&table](const std::string&, const std::string&, std::chrono::milliseconds) {
                                      return Json(table.rules()).dump();
                                    });
  std::vector<std::string> ids;
  for (const auto& [id, rec] : db.records()) ids.push_back(id);
  Rng rng(1000);
  double worst_relative = 0.0;
  int reacted = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    chem::Mixture m;
    const int n = 2 + static_cast<int>(rng.index(5));
    for (int i = 0; i < n; ++i) m.add(rng.pick(ids), rng.uniform(0.001, 2.0));
    const chem::ResolveResult viaTable = chem::resolve_reactions(m, table, db);
    const chem::ResolveResult viaMock = chem::resolve_reactions(m, mocked, db);
    if (!viaTable.outcomes.empty()) ++reacted;
    const double before = chem::mass_g(m, db);
    const double relative = std::abs(chem::mass_g(viaTable.mixture, db) - before) / before;
    worst_relative = std::max(worst_relative, relative);
    c.expect(relative <= 1e-9, "trial " + std::to_string(trial) + " mass drift " + std::to_string(relative));
    c.expect(viaMock.mixture == viaTable.mixture && viaMock.outcomes == viaTable.outcomes,
             "trial " + std::to_string(trial) + " mocked oracle differs");
  }
  return c.outcome(std::to_string(chem->rules.rules().size()) + " rules balance (worst " + fmt(worst_rule, 3) +
                   " g/mol); 1000 mixtures (" + std::to_string(reacted) + " reacting), worst relative mass drift " +
                   fmt(worst_relative * 1e12, 3) + "e-12; mocked oracle identical");
}

// --- 6 ----------------------------------------------------------------------

Outcome hold_boundary() {
  Checker c;
  const std::int64_t done = 30;
  std::map<std::int64_t, bool> observed;
  for (const std::int64_t n : {119, 120, 121}) {
    std::array<bool, 400> flags{};
    std::fill(flags.begin() + done, flags.begin() + done + n, true);
    const bool by_flags = bench::hold_satisfied(flags, done, 120);

    world::WorldState base;
    base.chemistry = context().chemistry;
    base.containers.emplace("b", world::make_beaker("b", {0.5, 0.0}));
    const bench::GoalPredicate empty_beaker{{bench::Condition{bench::ConditionKind::kVolumeAtMost, "b", "", 0.0, {}}}};
    std::vector<world::WorldState> stream;
    for (std::int64_t t = 0; t < 400; ++t) {
      world::WorldState s = base;
      s.tick = t;
      if (t < done || t >= done + n) s.containers.at("b").contents.add("water", 1.0);
      stream.push_back(std::move(s));
    }
    const bool by_states = bench::evaluate_hold(stream, empty_beaker, done, 2.0);
    c.expect(by_flags == by_states, "flag and state evaluation disagree at " + std::to_string(n));
    observed[n] = by_flags;
  }
  c.expect(!observed[119], "119 ticks passed");
  c.expect(observed[120], "120 ticks failed");
  c.expect(observed[121], "121 ticks failed");

  // End to end: the goal is observed on ticks done .. done + 119, then the episode stops.
  const bench::TaskSpec& pick = bench::find_task(registry(), "l1_pick");
  const bench::TaskInstance inst = bench::instantiate(pick, 0, context());
  auto policy = bench::make_oracle(inst);
  const bench::EpisodeResult r = bench::run_episode(pick, 0, inst, *policy);
  c.expect(r.success && r.done_tick && r.ticks_used == *r.done_tick + 119, "episode hold window is not 120 ticks");
  return c.outcome("119 -> fail, 120 -> success, 121 -> success (flags and state stream agree; episode window 120 ticks)");
}

// --- 7 ----------------------------------------------------------------------

Outcome long_horizon_stages() {
  Checker c;
  const bench::TaskSpec& task = bench::find_task(registry(), "l4_clean_beaker");
  const int stages = static_cast<int>(task.stage_labels.size());
  c.expect(stages == 7, "clean beaker has " + std::to_string(stages) + " stages");
  const std::vector<std::string> expected_labels{"pick_rinse",  "pour_rinse",    "place_rinse", "pick_beaker",
                                                 "shake_beaker", "pour_waste", "place_beaker"};
  c.expect(task.stage_labels == expected_labels, "stage sequence differs");
  constexpr int kSeeds = 12;
  std::vector<bench::EpisodeResult> all;
  for (int k = 0; k <= stages; ++k) {
    std::vector<bench::EpisodeResult> results;
    for (int seed = 0; seed < kSeeds; ++seed) {
      const bench::TaskInstance inst = bench::instantiate(task, static_cast<std::uint64_t>(seed), context());
      bench::FaultInjectingPolicy policy(bench::make_oracle(inst), k);
      results.push_back(bench::run_episode(task, static_cast<std::uint64_t>(seed), inst, policy));
    }
    const bench::BenchReport report = bench::aggregate(registry(), results);
    const bench::TaskRow* row = report.find(task.key());
    c.expect(row != nullptr, "no row");
    if (row == nullptr) continue;
    for (int s = 0; s < stages; ++s) {
      const double want = s < k ? 1.0 : 0.0;
      c.expect(row->stage_rate(static_cast<std::size_t>(s)) == want,
               "fault at " + std::to_string(k) + ": A" + std::to_string(s + 1) + " = " +
                   fmt(row->stage_rate(static_cast<std::size_t>(s))));
    }
    c.expect(row->success_rate() == (k == stages ? 1.0 : 0.0), "fault at " + std::to_string(k) + ": SP");
    all.insert(all.end(), results.begin(), results.end());
  }
  const bench::BenchReport mixed = bench::aggregate(registry(), all);
  const bench::TaskRow* row = mixed.find(task.key());
  std::string shape;
  if (row != nullptr) {
    for (int s = 0; s < stages; ++s) {
      const double rate = row->stage_rate(static_cast<std::size_t>(s));
      shape += (s ? " " : "") + fmt(rate);
      if (s > 0) c.expect(rate <= row->stage_rate(static_cast<std::size_t>(s - 1)), "A1..A7 not non-increasing");
    }
  }
  return c.outcome("fault at k gives 100% below k and 0% from k (k = 0..7, " + std::to_string(kSeeds) +
                   " seeds each); pooled A1..A7 = " + shape);
}

// --- 8 ----------------------------------------------------------------------

using RecordMap = std::map<std::pair<std::string, std::uint64_t>, traj::EpisodeRecord>;

class CapturingObserver final : public bench::EpisodeObserver {
 public:
  CapturingObserver(RecordMap& sink, std::mutex& mutex) : sink_(sink), mutex_(mutex) {}
  void on_start(const bench::TaskSpec& task, std::uint64_t seed, const world::WorldState& initial) override {
    recorder_.on_start(task, seed, initial);
  }
  void on_tick(const manip::PolicyStep& step, const world::WorldState& after) override { recorder_.on_tick(step, after); }
  void on_finish(const bench::EpisodeResult& result) override {
    recorder_.on_finish(result);
    const std::lock_guard lock(mutex_);
    sink_[{result.task_key, result.seed}] = recorder_.take();
  }

 private:
  RecordMap& sink_;
  std::mutex& mutex_;
  traj::Recorder recorder_;
};

RecordMap record_all(const std::vector<bench::EpisodeJob>& jobs, int workers, std::vector<bench::EpisodeResult>& results) {
  RecordMap records;
  std::mutex mutex;
  results = bench::run_batch(jobs, context(), bench::oracle_factory(), workers,
                             [&](const bench::TaskSpec&, std::uint64_t) {
                               return std::make_unique<CapturingObserver>(records, mutex);
                             });
  return records;
}

Outcome determinism_and_replay() {
  Checker c;
  const auto jobs = bench::make_jobs(registry(), 100, 3);
  std::vector<bench::EpisodeResult> r1;
  std::vector<bench::EpisodeResult> r1b;
  std::vector<bench::EpisodeResult> r8;
  const RecordMap first = record_all(jobs, 1, r1);
  const RecordMap second = record_all(jobs, 1, r1b);
  const RecordMap parallel = record_all(jobs, 8, r8);
  c.expect(first.size() == jobs.size(), "missing records");
  c.expect(first == second, "two single-worker runs differ");
  c.expect(first == parallel, "1 vs 8 workers differ");
  c.expect(r1 == r1b && r1 == r8, "episode results differ");

  int replayed = 0;
  for (const auto& [key, record] : first) {
    const std::string text = traj::to_jsonl(record);
    c.expect(text == traj::to_jsonl(second.at(key)), key.first + " serialised bytes differ");
    const traj::EpisodeRecord loaded = traj::from_jsonl(text);
    c.expect(loaded == record, key.first + " round trip");
    try {
      traj::replay(loaded, context().chemistry);
      ++replayed;
    } catch (const ReplayDivergence& e) {
      c.expect(false, key.first + " seed " + std::to_string(key.second) + " diverged at " + std::to_string(e.tick()));
    }
  }
  return c.outcome(std::to_string(first.size()) + " (task, seed) records bit-identical across runs and 1 vs 8 workers; " +
                   std::to_string(replayed) + "/" + std::to_string(first.size()) + " replay divergence-free");
}

// --- 9 ----------------------------------------------------------------------

Outcome level5_validity() {
  Checker c;
  const bench::TaskSpec& task = bench::find_task(registry(), "l5_nav_pick");
  int valid = 0;
  int solved = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::string tag = "seed " + std::to_string(seed);
    try {
      const bench::TaskInstance inst = bench::instantiate(task, seed, context());
      c.expect(inst.nav.has_value(), tag + " has no navigation setup");
      if (!inst.nav) continue;
      const bench::NavSetup& nav = *inst.nav;
      bool ok = nav.path.cells.size() >= 2;
      for (std::size_t i = 0; i < nav.path.cells.size(); ++i) {
        const nav::GridIndex cell = nav.path.cells[i];
        ok = ok && nav.inflated.free(cell);
        if (i == 0) continue;
        const nav::GridIndex prev = nav.path.cells[i - 1];
        const int dr = cell.row - prev.row;
        const int dc = cell.col - prev.col;
        ok = ok && std::max(std::abs(dr), std::abs(dc)) == 1;
        if (dr != 0 && dc != 0) {
          ok = ok && nav.inflated.free({prev.row + dr, prev.col}) && nav.inflated.free({prev.row, prev.col + dc});
        }
      }
      c.expect(ok, tag + " path not collision-free");
      if (ok) ++valid;
      auto policy = bench::make_oracle(inst);
      const bench::EpisodeResult r = bench::run_episode(task, seed, inst, *policy);
      c.expect(r.success, tag + ": " + r.failure_reason.value_or("failed"));
      if (r.success) ++solved;
    } catch (const std::exception& e) {
      c.expect(false, tag + ": " + e.what());
    }
  }
  return c.outcome(std::to_string(valid) + "/100 instances with collision-free plans; oracle solved " +
                   std::to_string(solved) + "/100");
}

// --- 10 ---------------------------------------------------------------------

Outcome throughput() {
  Checker c;
  world::WorldState w;
  w.chemistry = context().chemistry;
  w.objects.emplace("bench", world::make_table("bench", {0.6, 0.0}, {0.5, 0.9}));
  int placed = 1;
  for (int i = 0; i < 12; ++i, ++placed) {
    const std::string id = "beaker" + std::to_string(i);
    world::ContainerState b = world::make_beaker(id, {0.3 + 0.15 * (i % 4), -0.6 + 0.2 * (i / 4)});
    b.contents.add("water", 5.0);
    w.containers.emplace(id, std::move(b));
  }
  for (int i = 0; i < 4; ++i, ++placed) {
    const std::string id = "rod" + std::to_string(i);
    w.objects.emplace(id, world::make_rod(id, {0.3 + 0.15 * i, 0.4}));
  }
  for (int i = 0; i < 3; ++i, ++placed) {
    const std::string id = "block" + std::to_string(i);
    w.objects.emplace(id, world::make_block(id, "block", {0.3 + 0.2 * i, 0.7}, {0.04, 0.04, 0.04}));
  }
  world::add_button(w, "power", {0.95, 0.7, world::kTableTopM + 0.02});
  ++placed;
  const int bodies = static_cast<int>(w.objects.size() + w.containers.size());
  c.expect(bodies >= 20, "scene has " + std::to_string(bodies) + " bodies");

  constexpr int kTicks = 30'000;
  const auto t0 = Clock::now();
  for (int t = 0; t < kTicks; ++t) {
    world::AgentAction a;
    const double phase = 2.0 * kPi * t / 240.0;
    a.ee_linear = {0.2 * std::cos(phase), 0.2 * std::sin(phase), 0.0};
    a.gripper = (t / 120) % 2 == 0 ? 0.08 : 0.06;
    world::advance(w, a);
  }
  const double elapsed = seconds_since(t0);
  const double rate = kTicks / elapsed;
  c.expect(rate >= 1000.0, "only " + fmt(rate, 0) + " ticks/s");
  return c.outcome(fmt(rate, 0) + " ticks/s single worker on a " + std::to_string(bodies) + "-body scene (floor 1000)");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle completeness L1+L2 x60", oracle_completeness},
      {"protocol constants", protocol_constants},
      {"A* optimality vs Dijkstra", astar_optimality},
      {"layout validity", layout_validity},
      {"chemistry conservation and oracle equivalence", chemistry_conservation},
      {"hold-rule boundary", hold_boundary},
      {"long-horizon stage accounting", long_horizon_stages},
      {"determinism and replay", determinism_and_replay},
      {"level-5 task validity", level5_validity},
      {"throughput", throughput},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria met"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
