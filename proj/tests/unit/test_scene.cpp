#include <set>

#include "doctest.h"
#include "labsim/core/error.hpp"
#include "labsim/scene/layout.hpp"
#include "labsim/scene/to_world.hpp"

using namespace labsim;
using namespace labsim::scene;

namespace {

const std::string kDataDir = LABSIM_DATA_DIR;

AssetSpec square(std::string id, double half = 0.125, std::vector<double> yaws = {0.0}) {
  AssetSpec a;
  a.id = std::move(id);
  a.category = "box";
  a.footprint_half_extents = {half, half};
  a.height_m = 1.0;
  a.allowed_yaws = std::move(yaws);
  return a;
}

RoomSpec room(double w, double h) { return RoomSpec{{{0, 0}, {w, h}}, kPlacementCellM}; }

Json default_doc() { return read_json_file(kDataDir + "/assets.json"); }

}  // namespace

TEST_CASE("oriented rectangles: touching is not overlap, rotation is respected") {
  const OrientedRect a{{0, 0}, {0.5, 0.5}, 0};
  CHECK_FALSE(overlaps(a, OrientedRect{{1.0, 0}, {0.5, 0.5}, 0}));
  CHECK(overlaps(a, OrientedRect{{0.99, 0}, {0.5, 0.5}, 0}));
  CHECK(overlaps(a, OrientedRect{{1.2, 0}, {0.5, 0.5}, kPi / 4}));
  CHECK_FALSE(overlaps(a, OrientedRect{{1.3, 0}, {0.5, 0.5}, kPi / 4}));
  CHECK(distance(a, OrientedRect{{2.0, 0}, {0.5, 0.5}, 0}) == doctest::Approx(1.0));
  CHECK(distance(a, OrientedRect{{0.5, 0}, {0.5, 0.5}, 0}) == 0.0);
  CHECK(inside(AxisRect{{-0.5, -0.5}, {0.5, 0.5}}, a));
  CHECK_FALSE(inside(AxisRect{{-0.5, -0.5}, {0.5, 0.5}}, OrientedRect{{0, 0}, {0.5, 0.5}, 0.1}));
}

TEST_CASE("grid geometry of the placement room") {
  const RoomSpec r = room(8, 6);
  CHECK(r.grid_cell_m == 0.25);
  CHECK(r.rows() == 24);
  CHECK(r.cols() == 32);
  CHECK(r.cell_center(0, 0) == Vec2{0.125, 0.125});
}

TEST_CASE("empty room yields exactly one candidate for k = 1") {
  Rng rng(1);
  const auto c = sample_candidates(room(2, 2), {}, square("a"), 1, rng);
  CHECK(c.size() == 1);
}

TEST_CASE("asset larger than the room has no candidates") {
  Rng rng(1);
  CHECK(sample_candidates(room(1, 1), {}, square("a", 0.75), 8, rng).empty());
}

TEST_CASE("single free cell in an occupied 3x3 grid is the only candidate") {
  const RoomSpec r = room(0.75, 0.75);
  const AssetSpec block = square("block");
  std::vector<Placement> partial;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      if (row == 2 && col == 1) continue;
      Placement p = make_placement(r, block, row, col, 0);
      p.asset_id = "block_" + std::to_string(row) + std::to_string(col);
      partial.push_back(p);
    }
  }
  const AssetSpec asset = square("a", 0.125, {0.0, kPi / 2});
  // Brute-force feasible set: cells not occupied by any block.
  std::set<std::pair<int, int>> expected;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      const bool taken = std::any_of(partial.begin(), partial.end(),
                                     [&](const Placement& p) { return p.row == row && p.col == col; });
      if (!taken) expected.insert({row, col});
    }
  }
  for (int k : {1, 2, 5, 50}) {
    Rng rng(static_cast<std::uint64_t>(k));
    const auto found = sample_candidates(r, partial, asset, k, rng);
    CHECK(found.size() == static_cast<std::size_t>(std::min(k, 2)));
    for (const Placement& p : found) CHECK(expected.count({p.row, p.col}) == 1);
  }
}

TEST_CASE("score terms saturate at the documented extremes") {
  const RoomSpec r = room(4, 4);
  AssetSpec wall_lover = square("w");
  wall_lover.prefers_wall = true;
  const Placement flush = make_placement(r, wall_lover, 4, 0, 0);
  CHECK(score_terms(r, {}, wall_lover, flush).edge == 1.0);

  const AssetSpec a = square("a");
  const Placement first = make_placement(r, a, 0, 0, 0);
  const Placement far = make_placement(r, a, 0, 5, 0);  // 1.0 m gap between faces
  CHECK(score_terms(r, {first}, a, far).distance == 1.0);
  const Placement near = make_placement(r, a, 0, 3, 0);
  CHECK(score_terms(r, {first}, a, near).distance == doctest::Approx(0.5));
}

TEST_CASE("moving a wall-preferring asset toward the wall never lowers the edge term") {
  const RoomSpec r = room(8, 6);
  AssetSpec a = square("w", 0.25);
  a.prefers_wall = true;
  double previous = -1.0;
  for (int col = 16; col >= 1; --col) {
    const double edge = score_terms(r, {}, a, make_placement(r, a, 12, col, 0)).edge;
    CHECK(edge >= previous);
    previous = edge;
  }
}

TEST_CASE("selected candidate matches exhaustive argmax on a toy room") {
  const RoomSpec r = room(2, 1.5);
  AssetSpec first = square("first", 0.25, {0.0, kPi / 2, kPi, 3 * kPi / 2});
  first.prefers_wall = true;
  first.importance_rank = 0;
  AssetSpec second = square("second", 0.125, {0.0, kPi / 2, kPi, 3 * kPi / 2});
  second.importance_rank = 1;
  LayoutConfig cfg;
  cfg.candidates_per_asset = 1 << 20;
  const SceneLayout layout = place_all(r, {second, first}, cfg, 9);
  REQUIRE(layout.placements.size() == 2);

  std::vector<Placement> partial;
  for (const AssetSpec& asset : {first, second}) {
    double best = -1.0;
    Placement argmax;
    for (int row = 0; row < r.rows(); ++row) {
      for (int col = 0; col < r.cols(); ++col) {
        for (int y = 0; y < 4; ++y) {
          const Placement p = make_placement(r, asset, row, col, y);
          if (violation(r, partial, asset, p)) continue;
          const double s = score_layout(r, partial, asset, p, cfg);
          if (s > best) {
            best = s;
            argmax = p;
          }
        }
      }
    }
    const Placement& chosen = layout.placements[partial.size()];
    CHECK(chosen.asset_id == asset.id);
    CHECK(chosen.row == argmax.row);
    CHECK(chosen.col == argmax.col);
    CHECK(chosen.yaw_index == argmax.yaw_index);
    partial.push_back(chosen);
  }
}

TEST_CASE("one asset in an empty room is placed by sampling") {
  const SceneLayout layout = place_all(room(3, 3), {square("a")}, {}, 1);
  CHECK(layout.placements.size() == 1);
  CHECK(layout.method == LayoutMethod::kSampled);
}

TEST_CASE("crowded room forces the depth-first fallback and stays valid") {
  // Greedy scoring centres the box; the bars then take two opposite edges and
  // the clip finds no cell next to a bar centre. Only a corner box works.
  const RoomSpec r = room(0.75, 0.75);
  AssetSpec box = square("box");
  box.importance_rank = 0;
  AssetSpec bar1 = square("bar1");
  bar1.category = "bar";
  bar1.footprint_half_extents = {0.375, 0.125};
  bar1.allowed_yaws = {0.0, kPi / 2};
  bar1.importance_rank = 1;
  AssetSpec bar2 = bar1;
  bar2.id = "bar2";
  AssetSpec clip = square("clip");
  clip.importance_rank = 2;
  clip.constraints.push_back({ConstraintKind::kInstrumentSpecific, std::nullopt, "bar", 0.26});
  const std::vector<AssetSpec> catalog{box, bar1, bar2, clip};
  const SceneLayout layout = place_all(r, catalog, {}, 4);
  CHECK(layout.method == LayoutMethod::kDfsFallback);
  CHECK(layout.placements.size() == 4);
  CHECK(validate_layout(layout, catalog).empty());
  CHECK(layout.find("box")->row == 0);
  CHECK(layout.find("box")->col == 0);
}

TEST_CASE("over-packed catalog is infeasible") {
  std::vector<AssetSpec> catalog;
  for (int i = 0; i < 10; ++i) catalog.push_back(square("a" + std::to_string(i)));
  CHECK_THROWS_WITH_AS(place_all(room(0.75, 0.75), catalog, {}, 1), doctest::Contains("Infeasible"), Error);
}

TEST_CASE("depth-first placement") {
  const RoomSpec r = room(0.5, 0.25);
  const SceneLayout empty{r, {}, 0.0, 0, LayoutMethod::kSampled};

  SUBCASE("nothing remaining returns the partial layout") { CHECK(dfs_place(r, empty, {}) == empty); }

  SUBCASE("two assets on two cells take the lexicographically first assignment") {
    const SceneLayout out = dfs_place(r, empty, {square("a"), square("b")});
    REQUIRE(out.placements.size() == 2);
    CHECK(out.placements[0].asset_id == "a");
    CHECK(out.placements[0].col == 0);
    CHECK(out.placements[1].asset_id == "b");
    CHECK(out.placements[1].col == 1);
    CHECK(out.method == LayoutMethod::kDfsFallback);
  }

  SUBCASE("missing required neighbour is infeasible") {
    AssetSpec needy = square("needy");
    needy.constraints.push_back({ConstraintKind::kInstrumentSpecific, std::nullopt, "fume_hood", 2.0});
    CHECK_THROWS_WITH_AS(dfs_place(r, empty, {needy}), doctest::Contains("Infeasible"), Error);
  }
}

TEST_CASE("default catalog produces valid, ordered, deterministic layouts") {
  const Json doc = default_doc();
  const RoomSpec r = doc.at("room").get<RoomSpec>();
  const std::vector<AssetSpec> catalog = catalog_from_json(doc);
  const std::vector<AssetSpec> order = placement_order(catalog);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SceneLayout layout = place_all(r, catalog, {}, seed);
    REQUIRE(layout.placements.size() == catalog.size());
    const auto problems = validate_layout(layout, catalog);
    INFO("seed " << seed << ": " << (problems.empty() ? "" : problems.front()));
    CHECK(problems.empty());
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(layout.placements[i].asset_id == order[i].id);
  }
  CHECK(place_all(r, catalog, {}, 17) == place_all(r, catalog, {}, 17));
}

TEST_CASE("layouts and catalogs round-trip through JSON") {
  const Json doc = default_doc();
  const std::vector<AssetSpec> catalog = catalog_from_json(doc);
  const SceneLayout layout = place_all(doc.at("room").get<RoomSpec>(), catalog, {}, 3);
  CHECK(Json(layout).get<SceneLayout>() == layout);
  CHECK(catalog_from_json(Json{{"assets", catalog}}) == catalog);

  Json bad = doc;
  bad["assets"][0]["allowed_yaws_deg"] = Json::array();
  CHECK_THROWS_WITH_AS(catalog_from_json(bad), doctest::Contains("SchemaError"), Error);
  bad = doc;
  bad["assets"][0]["constraints"] = Json::array({Json{{"kind", "instrument_specific"}}});
  CHECK_THROWS_WITH_AS(catalog_from_json(bad), doctest::Contains("SchemaError"), Error);
}

TEST_CASE("layouts convert to static world bodies") {
  const Json doc = default_doc();
  const std::vector<AssetSpec> catalog = catalog_from_json(doc);
  const SceneLayout layout = place_all(doc.at("room").get<RoomSpec>(), catalog, {}, 5);
  const world::WorldState w = layout_to_world(layout, catalog);
  CHECK(w.objects.size() == catalog.size());
  const world::ObjectState& bench = w.objects.at("lab_bench_main");
  CHECK(bench.support_surface);
  CHECK(bench.pose.position.z == doctest::Approx(0.45));
  CHECK(bench.half_extents.z == doctest::Approx(0.45));
}
