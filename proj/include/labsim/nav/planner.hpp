#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "labsim/core/geometry2d.hpp"
#include "labsim/core/json.hpp"
#include "labsim/scene/layout.hpp"
#include "labsim/world/types.hpp"

namespace labsim::nav {

inline constexpr double kNavCellM = 0.5;
inline constexpr double kHeightBandLowM = 0.1;
inline constexpr double kHeightBandHighM = 1.6;
inline constexpr double kCollisionRadiusM = 0.6;
inline constexpr double kArrivalToleranceM = 0.1;
inline constexpr double kHeadingToleranceRad = deg_to_rad(5.0);
inline constexpr double kSqrt2 = 1.4142135623730951;

enum class Cell : std::uint8_t { kFree = 0, kOccupied = 1, kUndefined = 2 };

struct GridIndex {
  int row = 0;
  int col = 0;

  friend constexpr bool operator==(GridIndex, GridIndex) = default;
  friend constexpr auto operator<=>(GridIndex, GridIndex) = default;
};

struct OccupancyGrid {
  Vec2 origin{};  // lower-left corner of cell (0, 0)
  double cell_m = kNavCellM;
  int width = 0;   // columns
  int height = 0;  // rows
  std::vector<Cell> cells;  // row-major

  static OccupancyGrid filled(Vec2 origin, double cell_m, int width, int height, Cell value = Cell::kFree);

  bool contains(GridIndex i) const { return i.row >= 0 && i.row < height && i.col >= 0 && i.col < width; }
  Cell at(GridIndex i) const { return cells[static_cast<std::size_t>(i.row * width + i.col)]; }
  void set(GridIndex i, Cell c) { cells[static_cast<std::size_t>(i.row * width + i.col)] = c; }
  bool free(GridIndex i) const { return contains(i) && at(i) == Cell::kFree; }
  Vec2 cell_center(GridIndex i) const;
  GridIndex cell_of(Vec2 p) const;
  std::size_t count(Cell c) const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;
};

// Step counts keep path costs exact: cost = straight + diagonal * sqrt(2).
struct PathCost {
  std::int64_t straight = 0;
  std::int64_t diagonal = 0;

  double value() const { return static_cast<double>(straight) + static_cast<double>(diagonal) * kSqrt2; }
  friend constexpr bool operator==(PathCost, PathCost) = default;
};

struct NavPath {
  std::vector<GridIndex> cells;
  std::vector<Vec2> waypoints;  // cell centres, metres
  PathCost steps;
  double cost = 0.0;

  friend bool operator==(const NavPath&, const NavPath&) = default;
};

// Objects whose vertical extent meets the height band block every cell they overlap.
// Cells not fully on the floor are undefined.
OccupancyGrid build_occupancy(const world::WorldState& world, const AxisRect& floor, double cell_m = kNavCellM);
OccupancyGrid build_occupancy(const scene::SceneLayout& layout, double cell_m = kNavCellM);

// Blocks every free cell whose centre is within radius_m of a blocked cell centre.
OccupancyGrid inflate(const OccupancyGrid& grid, double radius_m);

// 8-connected A* on the inflated grid, octile heuristic, no corner cutting.
// Throws InvalidEndpoint or Unreachable.
NavPath plan(const OccupancyGrid& grid, Vec2 start_m, Vec2 goal_m, double radius_m = kCollisionRadiusM);
NavPath plan_on_inflated(const OccupancyGrid& inflated, Vec2 start_m, Vec2 goal_m);

struct FollowerGains {
  double position = 2.0;  // 1/s
  double heading = 2.0;   // 1/s
  double arrival_tolerance_m = kArrivalToleranceM;
  double heading_tolerance_rad = kHeadingToleranceRad;
};

// Proportional waypoint pursuit for a holonomic base. Intermediate waypoints are
// consumed within the arrival tolerance; at the last one the base also turns
// to the target heading.
class PathFollower {
 public:
  PathFollower(NavPath path, std::optional<double> final_heading, FollowerGains gains = {});

  world::BaseVelocity command(const world::BasePose& base, const world::BaseVelocity& limits, double dt);
  bool done(const world::BasePose& base) const;
  std::size_t next_waypoint() const { return next_; }
  const NavPath& path() const { return path_; }

 private:
  NavPath path_;
  std::optional<double> final_heading_;
  FollowerGains gains_;
  std::size_t next_ = 0;
};

Json grid_header_json(const OccupancyGrid& grid, const std::string& image_name);
std::string grid_to_pgm(const OccupancyGrid& grid);
// Writes <stem>.json and <stem>.pgm.
void save_occupancy(const OccupancyGrid& grid, const std::filesystem::path& stem);
OccupancyGrid load_occupancy(const std::filesystem::path& header_path);
OccupancyGrid grid_from_pgm(const std::string& text, Vec2 origin, double cell_m);

void to_json(Json& j, const NavPath& p);

}  // namespace labsim::nav
