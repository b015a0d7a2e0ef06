#include "labsim/scene/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "labsim/core/error.hpp"

namespace labsim::scene {

namespace {

constexpr double kEps = 1e-9;
const double kCos45 = std::cos(deg_to_rad(45.0)) - 1e-12;

const AssetSpec& asset_for(const std::vector<AssetSpec>& catalog, std::string_view id) {
  for (const AssetSpec& a : catalog) {
    if (a.id == id) return a;
  }
  throw Error(ErrorCode::kUnknownObject, "asset '" + std::string(id) + "' not in catalog");
}

std::tuple<int, int, int> grid_key(const Placement& p) { return {p.row, p.col, p.yaw_index}; }

double mean_score(const RoomSpec& room, const std::vector<Placement>& placements,
                  const std::vector<AssetSpec>& order, const LayoutConfig& config) {
  if (placements.empty()) return 0.0;
  double total = 0.0;
  std::vector<Placement> partial;
  for (std::size_t i = 0; i < placements.size(); ++i) {
    total += score_layout(room, partial, order[i], placements[i], config);
    partial.push_back(placements[i]);
  }
  return total / static_cast<double>(placements.size());
}

class DepthFirstPlacer {
 public:
  DepthFirstPlacer(const RoomSpec& room, const std::vector<AssetSpec>& remaining, std::int64_t node_limit)
      : room_(room), remaining_(remaining), node_limit_(node_limit) {}

  bool solve(std::vector<Placement>& placements, std::size_t depth) {
    if (depth == remaining_.size()) return true;
    const AssetSpec& asset = remaining_[depth];
    for (int row = 0; row < room_.rows(); ++row) {
      for (int col = 0; col < room_.cols(); ++col) {
        for (int yaw = 0; yaw < static_cast<int>(asset.allowed_yaws.size()); ++yaw) {
          if (++nodes_ > node_limit_) {
            throw Error(ErrorCode::kInfeasible, "depth-first search exceeded " +
                                                    std::to_string(node_limit_) + " nodes");
          }
          Placement p = make_placement(room_, asset, row, col, yaw);
          if (violation(room_, placements, asset, p)) continue;
          placements.push_back(std::move(p));
          if (solve(placements, depth + 1)) return true;
          placements.pop_back();
        }
      }
    }
    return false;
  }

 private:
  const RoomSpec& room_;
  const std::vector<AssetSpec>& remaining_;
  std::int64_t node_limit_;
  std::int64_t nodes_ = 0;
};

std::string_view to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::kBoundary: return "boundary";
    case ConstraintKind::kCollision: return "collision";
    case ConstraintKind::kInstrumentSpecific: return "instrument_specific";
  }
  return "boundary";
}

}  // namespace

int RoomSpec::rows() const { return static_cast<int>(std::floor(bounds.height() / grid_cell_m + kEps)); }
int RoomSpec::cols() const { return static_cast<int>(std::floor(bounds.width() / grid_cell_m + kEps)); }

Vec2 RoomSpec::cell_center(int row, int col) const {
  return {bounds.min.x + (col + 0.5) * grid_cell_m, bounds.min.y + (row + 0.5) * grid_cell_m};
}

OrientedRect Placement::footprint() const {
  return {world_pose.position.xy(), footprint_half_extents, yaw};
}

std::optional<OrientedRect> Placement::clearance_strip() const {
  if (front_clearance_m <= 0.0) return std::nullopt;
  const OrientedRect body = footprint();
  const Vec2 center = body.center + body.axis_x() * (footprint_half_extents.x + front_clearance_m / 2);
  return OrientedRect{center, {front_clearance_m / 2, footprint_half_extents.y}, yaw};
}

const Placement* SceneLayout::find(std::string_view asset_id) const {
  for (const Placement& p : placements) {
    if (p.asset_id == asset_id) return &p;
  }
  return nullptr;
}

Placement make_placement(const RoomSpec& room, const AssetSpec& asset, int row, int col, int yaw_index) {
  Placement p;
  p.asset_id = asset.id;
  p.category = asset.category;
  p.row = row;
  p.col = col;
  p.yaw_index = yaw_index;
  p.yaw = asset.allowed_yaws.at(static_cast<std::size_t>(yaw_index));
  const Vec2 c = room.cell_center(row, col);
  p.world_pose = {{c.x, c.y, asset.height_m / 2}, Quat::from_yaw(p.yaw)};
  p.footprint_half_extents = asset.footprint_half_extents;
  p.height_m = asset.height_m;
  p.front_clearance_m = asset.front_clearance_m;
  return p;
}

std::optional<std::string> violation(const RoomSpec& room, const std::vector<Placement>& partial,
                                     const AssetSpec& asset, const Placement& candidate) {
  if (candidate.row < 0 || candidate.row >= room.rows() || candidate.col < 0 || candidate.col >= room.cols()) {
    return "cell outside grid";
  }
  const OrientedRect body = candidate.footprint();
  const std::optional<OrientedRect> strip = candidate.clearance_strip();
  if (!inside(room.bounds, body)) return "footprint crosses the room boundary";
  if (strip && !inside(room.bounds, *strip)) return "front clearance crosses the room boundary";
  for (const Placement& other : partial) {
    const OrientedRect other_body = other.footprint();
    if (overlaps(body, other_body)) return "footprint overlaps " + other.asset_id;
    if (strip && overlaps(*strip, other_body)) return "front clearance blocked by " + other.asset_id;
    if (const auto other_strip = other.clearance_strip(); other_strip && overlaps(body, *other_strip)) {
      return "footprint blocks the front clearance of " + other.asset_id;
    }
  }
  for (const PlacementConstraint& c : asset.constraints) {
    if (c.kind != ConstraintKind::kInstrumentSpecific) continue;
    if (c.min_wall_distance_m && wall_distance(room.bounds, body) < *c.min_wall_distance_m - kEps) {
      return "closer than " + std::to_string(*c.min_wall_distance_m) + " m to a wall";
    }
    if (c.required_neighbor_category) {
      const bool found = std::any_of(partial.begin(), partial.end(), [&](const Placement& other) {
        return other.category == *c.required_neighbor_category &&
               norm(other.world_pose.position.xy() - body.center) <= c.max_neighbor_distance_m + kEps;
      });
      if (!found) return "no " + *c.required_neighbor_category + " within reach";
    }
  }
  return std::nullopt;
}

std::vector<Placement> sample_candidates(const RoomSpec& room, const std::vector<Placement>& partial,
                                         const AssetSpec& asset, int k, Rng& rng, int evaluation_budget) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  std::vector<std::tuple<int, int, int>> pool;
  pool.reserve(static_cast<std::size_t>(room.rows() * room.cols()) * asset.allowed_yaws.size());
  for (int row = 0; row < room.rows(); ++row) {
    for (int col = 0; col < room.cols(); ++col) {
      for (int yaw = 0; yaw < static_cast<int>(asset.allowed_yaws.size()); ++yaw) pool.emplace_back(row, col, yaw);
    }
  }
  rng.shuffle(pool);
  std::vector<Placement> found;
  int evaluations = 0;
  for (const auto& [row, col, yaw] : pool) {
    if (static_cast<int>(found.size()) >= k || evaluations >= evaluation_budget) break;
    ++evaluations;
    Placement p = make_placement(room, asset, row, col, yaw);
    if (!violation(room, partial, asset, p)) found.push_back(std::move(p));
  }
  return found;
}

ScoreTerms score_terms(const RoomSpec& room, const std::vector<Placement>& partial, const AssetSpec& asset,
                       const Placement& candidate, double saturation_distance_m) {
  ScoreTerms s;
  const OrientedRect body = candidate.footprint();
  const double d_wall_max = 0.5 * std::min(room.bounds.width(), room.bounds.height());
  const double d_wall = std::max(0.0, wall_distance(room.bounds, body));
  if (asset.prefers_wall) {
    s.edge = 1.0 - std::min(d_wall / d_wall_max, 1.0);
  } else {
    const double preferred = 0.5 * d_wall_max;
    s.edge = 1.0 - std::min(std::abs(d_wall - preferred) / d_wall_max, 1.0);
  }

  double clearance = std::numeric_limits<double>::infinity();
  for (const Placement& other : partial) clearance = std::min(clearance, distance(body, other.footprint()));
  s.distance = std::min(clearance / saturation_distance_m, 1.0);

  const Vec2 front = body.axis_x();
  const Vec2 to_center = room.bounds.center() - body.center;
  const double center_dist = norm(to_center);
  const bool faces_center = center_dist < kEps || dot(front, to_center) / center_dist >= kCos45;
  const Vec2 c = body.center;
  const std::array<std::pair<double, Vec2>, 4> walls{{{c.x - room.bounds.min.x, {1, 0}},
                                                      {room.bounds.max.x - c.x, {-1, 0}},
                                                      {c.y - room.bounds.min.y, {0, 1}},
                                                      {room.bounds.max.y - c.y, {0, -1}}}};
  const auto nearest = std::min_element(walls.begin(), walls.end(),
                                        [](const auto& a, const auto& b) { return a.first < b.first; });
  const bool faces_away_from_wall = dot(front, nearest->second) >= kCos45;
  s.orientation = faces_center || faces_away_from_wall ? 1.0 : 0.0;
  return s;
}

double score_layout(const RoomSpec& room, const std::vector<Placement>& partial, const AssetSpec& asset,
                    const Placement& candidate, const LayoutConfig& config) {
  const ScoreTerms s = score_terms(room, partial, asset, candidate, config.saturation_distance_m);
  const ScoreWeights& w = config.weights;
  return w.edge * s.edge + w.distance * s.distance + w.orientation * s.orientation;
}

std::vector<AssetSpec> placement_order(std::vector<AssetSpec> assets) {
  std::stable_sort(assets.begin(), assets.end(), [](const AssetSpec& a, const AssetSpec& b) {
    if (a.importance_rank != b.importance_rank) return a.importance_rank < b.importance_rank;
    if (a.footprint_area() != b.footprint_area()) return a.footprint_area() > b.footprint_area();
    return a.id < b.id;
  });
  return assets;
}

SceneLayout place_all(const RoomSpec& room, const std::vector<AssetSpec>& assets, const LayoutConfig& config,
                      std::uint64_t seed) {
  if (assets.empty()) throw Error(ErrorCode::kInvalidArgument, "no assets to place");
  const std::vector<AssetSpec> order = placement_order(assets);
  double area = 0.0;
  for (const AssetSpec& a : order) area += a.footprint_area();
  if (area > room.bounds.width() * room.bounds.height() + kEps) {
    throw Error(ErrorCode::kInfeasible, "total footprint exceeds the room area");
  }

  Rng rng(seed);
  SceneLayout layout{room, {}, 0.0, seed, LayoutMethod::kSampled};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const AssetSpec& asset = order[i];
    const std::vector<Placement> candidates =
        sample_candidates(room, layout.placements, asset, config.candidates_per_asset, rng, config.evaluation_budget);
    if (candidates.empty()) {
      const std::vector<AssetSpec> rest(order.begin() + static_cast<std::ptrdiff_t>(i), order.end());
      SceneLayout finished;
      try {
        finished = dfs_place(room, layout, rest, config.dfs_node_limit);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInfeasible) throw;
        // Earlier greedy choices may be the obstacle; search the whole scene.
        finished = dfs_place(room, SceneLayout{room, {}, 0.0, seed, LayoutMethod::kDfsFallback}, order,
                             config.dfs_node_limit);
      }
      finished.score = mean_score(room, finished.placements, order, config);
      return finished;
    }
    const Placement* best = nullptr;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const Placement& c : candidates) {
      const double s = score_layout(room, layout.placements, asset, c, config);
      if (s > best_score || (s == best_score && grid_key(c) < grid_key(*best))) {
        best = &c;
        best_score = s;
      }
    }
    layout.placements.push_back(*best);
  }
  layout.score = mean_score(room, layout.placements, order, config);
  return layout;
}

SceneLayout dfs_place(const RoomSpec& room, const SceneLayout& partial, const std::vector<AssetSpec>& remaining,
                      std::int64_t node_limit) {
  SceneLayout result = partial;
  if (remaining.empty()) return result;
  result.method = LayoutMethod::kDfsFallback;
  DepthFirstPlacer placer(room, remaining, node_limit);
  if (!placer.solve(result.placements, 0)) {
    throw Error(ErrorCode::kInfeasible, "no feasible assignment for " + std::to_string(remaining.size()) +
                                            " remaining assets");
  }
  return result;
}

std::vector<std::string> validate_layout(const SceneLayout& layout, const std::vector<AssetSpec>& catalog) {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < layout.placements.size(); ++i) {
    const Placement& p = layout.placements[i];
    const AssetSpec& asset = asset_for(catalog, p.asset_id);
    if (p.yaw_index < 0 || p.yaw_index >= static_cast<int>(asset.allowed_yaws.size()) ||
        asset.allowed_yaws[static_cast<std::size_t>(p.yaw_index)] != p.yaw) {
      problems.push_back(p.asset_id + ": yaw not allowed");
    }
    std::vector<Placement> others = layout.placements;
    others.erase(others.begin() + static_cast<std::ptrdiff_t>(i));
    if (auto why = violation(layout.room, others, asset, p)) problems.push_back(p.asset_id + ": " + *why);
  }
  return problems;
}

// ---------------------------------------------------------------------------
// Serialization

void to_json(Json& j, const PlacementConstraint& c) {
  j = Json{{"kind", to_string(c.kind)}};
  if (c.min_wall_distance_m) j["min_wall_distance_m"] = *c.min_wall_distance_m;
  if (c.required_neighbor_category) {
    j["required_neighbor_category"] = *c.required_neighbor_category;
    j["max_neighbor_distance_m"] = c.max_neighbor_distance_m;
  }
}

void from_json(const Json& j, PlacementConstraint& c) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "boundary") {
    c.kind = ConstraintKind::kBoundary;
  } else if (kind == "collision") {
    c.kind = ConstraintKind::kCollision;
  } else if (kind == "instrument_specific") {
    c.kind = ConstraintKind::kInstrumentSpecific;
  } else {
    throw Error(ErrorCode::kSchemaError, "unknown constraint kind '" + kind + "'");
  }
  if (j.contains("min_wall_distance_m")) c.min_wall_distance_m = j.at("min_wall_distance_m").get<double>();
  if (j.contains("required_neighbor_category")) {
    c.required_neighbor_category = j.at("required_neighbor_category").get<std::string>();
    c.max_neighbor_distance_m = j.at("max_neighbor_distance_m").get<double>();
  }
  if (c.kind == ConstraintKind::kInstrumentSpecific && !c.min_wall_distance_m && !c.required_neighbor_category) {
    throw Error(ErrorCode::kSchemaError, "instrument_specific constraint without parameters");
  }
  if (c.min_wall_distance_m && *c.min_wall_distance_m < 0.0) {
    throw Error(ErrorCode::kSchemaError, "negative min_wall_distance_m");
  }
}

void to_json(Json& j, const AssetSpec& a) {
  j = Json{{"id", a.id},
           {"category", a.category},
           {"footprint_half_extents", a.footprint_half_extents},
           {"height_m", a.height_m},
           {"importance_rank", a.importance_rank},
           {"allowed_yaws", a.allowed_yaws},
           {"constraints", a.constraints},
           {"prefers_wall", a.prefers_wall},
           {"front_clearance_m", a.front_clearance_m},
           {"support_surface", a.support_surface}};
}

void from_json(const Json& j, AssetSpec& a) {
  a.id = j.at("id").get<std::string>();
  a.category = j.at("category").get<std::string>();
  a.footprint_half_extents = j.at("footprint_half_extents").get<Vec2>();
  a.height_m = j.at("height_m").get<double>();
  a.importance_rank = j.at("importance_rank").get<int>();
  if (j.contains("allowed_yaws_deg")) {
    a.allowed_yaws.clear();
    for (const Json& d : j.at("allowed_yaws_deg")) a.allowed_yaws.push_back(deg_to_rad(d.get<double>()));
  } else {
    a.allowed_yaws = j.at("allowed_yaws").get<std::vector<double>>();
  }
  a.constraints = j.value("constraints", std::vector<PlacementConstraint>{});
  a.prefers_wall = j.value("prefers_wall", false);
  a.front_clearance_m = j.value("front_clearance_m", 0.0);
  a.support_surface = j.value("support_surface", false);
  if (!(a.footprint_half_extents.x > 0 && a.footprint_half_extents.y > 0)) {
    throw Error(ErrorCode::kSchemaError, a.id + ": footprint must be positive");
  }
  if (a.allowed_yaws.empty()) throw Error(ErrorCode::kSchemaError, a.id + ": allowed_yaws is empty");
  if (a.height_m <= 0.0 || a.front_clearance_m < 0.0) {
    throw Error(ErrorCode::kSchemaError, a.id + ": bad height or clearance");
  }
}

void to_json(Json& j, const RoomSpec& r) {
  j = Json{{"min", r.bounds.min}, {"max", r.bounds.max}, {"grid_cell_m", r.grid_cell_m}};
}

void from_json(const Json& j, RoomSpec& r) {
  r.bounds = {j.at("min").get<Vec2>(), j.at("max").get<Vec2>()};
  r.grid_cell_m = j.value("grid_cell_m", kPlacementCellM);
  if (!(r.grid_cell_m > 0.0) || !(r.bounds.width() > 0.0) || !(r.bounds.height() > 0.0)) {
    throw Error(ErrorCode::kSchemaError, "degenerate room");
  }
}

void to_json(Json& j, const Placement& p) {
  j = Json{{"asset_id", p.asset_id},
           {"category", p.category},
           {"cell", Json::array({p.row, p.col})},
           {"yaw_index", p.yaw_index},
           {"yaw", p.yaw},
           {"world_pose", p.world_pose},
           {"footprint_half_extents", p.footprint_half_extents},
           {"height_m", p.height_m},
           {"front_clearance_m", p.front_clearance_m}};
}

void from_json(const Json& j, Placement& p) {
  p.asset_id = j.at("asset_id").get<std::string>();
  p.category = j.at("category").get<std::string>();
  p.row = j.at("cell").at(0).get<int>();
  p.col = j.at("cell").at(1).get<int>();
  p.yaw_index = j.at("yaw_index").get<int>();
  p.yaw = j.at("yaw").get<double>();
  p.world_pose = j.at("world_pose").get<Pose>();
  p.footprint_half_extents = j.at("footprint_half_extents").get<Vec2>();
  p.height_m = j.at("height_m").get<double>();
  p.front_clearance_m = j.at("front_clearance_m").get<double>();
}

void to_json(Json& j, const SceneLayout& s) {
  j = Json{{"room", s.room},
           {"placements", s.placements},
           {"score", s.score},
           {"generator_seed", s.generator_seed},
           {"method", s.method == LayoutMethod::kSampled ? "sampled" : "dfs_fallback"}};
}

void from_json(const Json& j, SceneLayout& s) {
  s.room = j.at("room").get<RoomSpec>();
  s.placements = j.at("placements").get<std::vector<Placement>>();
  s.score = j.at("score").get<double>();
  s.generator_seed = j.at("generator_seed").get<std::uint64_t>();
  const std::string method = j.at("method").get<std::string>();
  if (method != "sampled" && method != "dfs_fallback") {
    throw Error(ErrorCode::kSchemaError, "unknown layout method '" + method + "'");
  }
  s.method = method == "sampled" ? LayoutMethod::kSampled : LayoutMethod::kDfsFallback;
}

std::vector<AssetSpec> catalog_from_json(const Json& doc) {
  try {
    std::vector<AssetSpec> assets = doc.at("assets").get<std::vector<AssetSpec>>();
    for (std::size_t i = 0; i < assets.size(); ++i) {
      for (std::size_t k = i + 1; k < assets.size(); ++k) {
        if (assets[i].id == assets[k].id) throw Error(ErrorCode::kSchemaError, "duplicate asset " + assets[i].id);
      }
    }
    return assets;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("asset catalog: ") + e.what());
  }
}

std::vector<AssetSpec> load_catalog(const std::filesystem::path& path) {
  return catalog_from_json(read_json_file(path));
}

}  // namespace labsim::scene
