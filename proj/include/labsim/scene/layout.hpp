#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "labsim/core/geometry2d.hpp"
#include "labsim/core/json.hpp"
#include "labsim/core/random.hpp"

namespace labsim::scene {

inline constexpr double kPlacementCellM = 0.25;

enum class ConstraintKind { kBoundary, kCollision, kInstrumentSpecific };

// Instrument-specific rules. Boundary and collision are always enforced; listing
// them only documents intent.
struct PlacementConstraint {
  ConstraintKind kind = ConstraintKind::kBoundary;
  std::optional<double> min_wall_distance_m;
  std::optional<std::string> required_neighbor_category;
  double max_neighbor_distance_m = 0.0;

  friend bool operator==(const PlacementConstraint&, const PlacementConstraint&) = default;
};

struct AssetSpec {
  std::string id;
  std::string category;
  Vec2 footprint_half_extents{};
  double height_m = 0.0;
  int importance_rank = 0;
  std::vector<double> allowed_yaws{0.0};
  std::vector<PlacementConstraint> constraints;
  bool prefers_wall = false;
  double front_clearance_m = 0.0;  // keep-out strip in front of local +x
  bool support_surface = false;    // carries tabletop items in the world model

  double footprint_area() const { return 4.0 * footprint_half_extents.x * footprint_half_extents.y; }
  friend bool operator==(const AssetSpec&, const AssetSpec&) = default;
};

struct RoomSpec {
  AxisRect bounds{{0.0, 0.0}, {8.0, 6.0}};
  double grid_cell_m = kPlacementCellM;

  int rows() const;
  int cols() const;
  Vec2 cell_center(int row, int col) const;
  friend bool operator==(const RoomSpec&, const RoomSpec&) = default;
};

struct Placement {
  std::string asset_id;
  std::string category;
  int row = 0;
  int col = 0;
  int yaw_index = 0;
  double yaw = 0.0;
  Pose world_pose;
  Vec2 footprint_half_extents{};
  double height_m = 0.0;
  double front_clearance_m = 0.0;

  OrientedRect footprint() const;
  std::optional<OrientedRect> clearance_strip() const;
  friend bool operator==(const Placement&, const Placement&) = default;
};

enum class LayoutMethod { kSampled, kDfsFallback };

struct SceneLayout {
  RoomSpec room;
  std::vector<Placement> placements;
  double score = 0.0;
  std::uint64_t generator_seed = 0;
  LayoutMethod method = LayoutMethod::kSampled;

  const Placement* find(std::string_view asset_id) const;
  friend bool operator==(const SceneLayout&, const SceneLayout&) = default;
};

struct ScoreWeights {
  double edge = 1.0 / 3.0;
  double distance = 1.0 / 3.0;
  double orientation = 1.0 / 3.0;
};

struct LayoutConfig {
  int candidates_per_asset = 64;
  // Candidate evaluations allowed per asset before handing over to DFS.
  int evaluation_budget = 4096;
  // DFS node limit; exhausting it reports Infeasible.
  std::int64_t dfs_node_limit = 2'000'000;
  ScoreWeights weights;
  double saturation_distance_m = 1.0;
};

struct ScoreTerms {
  double edge = 0.0;
  double distance = 0.0;
  double orientation = 0.0;
};

Placement make_placement(const RoomSpec& room, const AssetSpec& asset, int row, int col, int yaw_index);

// Reason the candidate is rejected against `partial`, or nothing when feasible.
// Shared by sampling, DFS and the final layout check.
std::optional<std::string> violation(const RoomSpec& room, const std::vector<Placement>& partial,
                                     const AssetSpec& asset, const Placement& candidate);

std::vector<Placement> sample_candidates(const RoomSpec& room, const std::vector<Placement>& partial,
                                         const AssetSpec& asset, int k, Rng& rng,
                                         int evaluation_budget = 1 << 30);

ScoreTerms score_terms(const RoomSpec& room, const std::vector<Placement>& partial, const AssetSpec& asset,
                       const Placement& candidate, double saturation_distance_m = 1.0);
double score_layout(const RoomSpec& room, const std::vector<Placement>& partial, const AssetSpec& asset,
                    const Placement& candidate, const LayoutConfig& config = {});

// Placement order: importance rank ascending, footprint area descending, id.
std::vector<AssetSpec> placement_order(std::vector<AssetSpec> assets);

SceneLayout place_all(const RoomSpec& room, const std::vector<AssetSpec>& assets, const LayoutConfig& config,
                      std::uint64_t seed);

// Depth-first completion over (row-major cell, declared yaw order). Throws Infeasible.
SceneLayout dfs_place(const RoomSpec& room, const SceneLayout& partial, const std::vector<AssetSpec>& remaining,
                      std::int64_t node_limit = 2'000'000);

// Every violated constraint in a finished layout; empty when valid.
std::vector<std::string> validate_layout(const SceneLayout& layout, const std::vector<AssetSpec>& catalog);

std::vector<AssetSpec> load_catalog(const std::filesystem::path& path);
std::vector<AssetSpec> catalog_from_json(const Json& doc);

void to_json(Json& j, const PlacementConstraint& c);
void from_json(const Json& j, PlacementConstraint& c);
void to_json(Json& j, const AssetSpec& a);
void from_json(const Json& j, AssetSpec& a);
void to_json(Json& j, const RoomSpec& r);
void from_json(const Json& j, RoomSpec& r);
void to_json(Json& j, const Placement& p);
void from_json(const Json& j, Placement& p);
void to_json(Json& j, const SceneLayout& s);
void from_json(const Json& j, SceneLayout& s);

}  // namespace labsim::scene
