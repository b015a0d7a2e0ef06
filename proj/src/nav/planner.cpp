#include "labsim/nav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "labsim/core/error.hpp"

namespace labsim::nav {

namespace {

constexpr double kEps = 1e-9;

struct Blocker {
  OrientedRect footprint;
  double z_low;
  double z_high;
};

OrientedRect cell_rect(const OccupancyGrid& g, GridIndex i) {
  return {g.cell_center(i), {g.cell_m / 2, g.cell_m / 2}, 0.0};
}

OccupancyGrid rasterize(const AxisRect& floor, double cell_m, const std::vector<Blocker>& blockers) {
  if (!(cell_m > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cell size must be positive");
  const int width = static_cast<int>(std::ceil(floor.width() / cell_m - kEps));
  const int height = static_cast<int>(std::ceil(floor.height() / cell_m - kEps));
  OccupancyGrid g = OccupancyGrid::filled(floor.min, cell_m, width, height);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      const OrientedRect cell = cell_rect(g, {row, col});
      if (!inside(floor, cell)) {
        g.set({row, col}, Cell::kUndefined);
        continue;
      }
      const bool hit = std::any_of(blockers.begin(), blockers.end(), [&](const Blocker& b) {
        return b.z_high >= kHeightBandLowM && b.z_low <= kHeightBandHighM && overlaps(b.footprint, cell);
      });
      if (hit) g.set({row, col}, Cell::kOccupied);
    }
  }
  return g;
}

Blocker blocker_for(const world::ObjectState& o) {
  return {{o.pose.position.xy(), {o.half_extents.x, o.half_extents.y}, yaw_of(o.pose.orientation)},
          o.pose.position.z - o.half_extents.z,
          o.pose.position.z + o.half_extents.z};
}

constexpr std::array<std::array<int, 2>, 8> kMoves{
    {{0, 1}, {1, 0}, {0, -1}, {-1, 0}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

PathCost octile(GridIndex a, GridIndex b) {
  const std::int64_t dr = std::abs(a.row - b.row);
  const std::int64_t dc = std::abs(a.col - b.col);
  return {std::max(dr, dc) - std::min(dr, dc), std::min(dr, dc)};
}

PathCost operator+(PathCost a, PathCost b) { return {a.straight + b.straight, a.diagonal + b.diagonal}; }

}  // namespace

OccupancyGrid OccupancyGrid::filled(Vec2 origin, double cell_m, int width, int height, Cell value) {
  if (width < 0 || height < 0) throw Error(ErrorCode::kInvalidArgument, "negative grid size");
  return {origin, cell_m, width, height, std::vector<Cell>(static_cast<std::size_t>(width * height), value)};
}

Vec2 OccupancyGrid::cell_center(GridIndex i) const {
  return {origin.x + (i.col + 0.5) * cell_m, origin.y + (i.row + 0.5) * cell_m};
}

GridIndex OccupancyGrid::cell_of(Vec2 p) const {
  return {static_cast<int>(std::floor((p.y - origin.y) / cell_m)),
          static_cast<int>(std::floor((p.x - origin.x) / cell_m))};
}

std::size_t OccupancyGrid::count(Cell c) const { return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), c)); }

OccupancyGrid build_occupancy(const world::WorldState& world, const AxisRect& floor, double cell_m) {
  std::vector<Blocker> blockers;
  for (const auto& [id, o] : world.objects) {
    if (!o.held_by_agent) blockers.push_back(blocker_for(o));
  }
  for (const auto& [id, c] : world.containers) {
    if (!c.object.held_by_agent) blockers.push_back(blocker_for(c.object));
  }
  return rasterize(floor, cell_m, blockers);
}

OccupancyGrid build_occupancy(const scene::SceneLayout& layout, double cell_m) {
  std::vector<Blocker> blockers;
  for (const scene::Placement& p : layout.placements) blockers.push_back({p.footprint(), 0.0, p.height_m});
  return rasterize(layout.room.bounds, cell_m, blockers);
}

OccupancyGrid inflate(const OccupancyGrid& grid, double radius_m) {
  if (radius_m < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative inflation radius");
  OccupancyGrid out = grid;
  const int reach = static_cast<int>(std::floor(radius_m / grid.cell_m + kEps));
  const double limit = radius_m + kEps;
  for (int row = 0; row < grid.height; ++row) {
    for (int col = 0; col < grid.width; ++col) {
      if (grid.at({row, col}) == Cell::kFree) continue;
      for (int dr = -reach; dr <= reach; ++dr) {
        for (int dc = -reach; dc <= reach; ++dc) {
          const GridIndex n{row + dr, col + dc};
          if (!grid.contains(n) || out.at(n) != Cell::kFree) continue;
          if (std::hypot(dr * grid.cell_m, dc * grid.cell_m) <= limit) out.set(n, Cell::kOccupied);
        }
      }
    }
  }
  return out;
}

NavPath plan(const OccupancyGrid& grid, Vec2 start_m, Vec2 goal_m, double radius_m) {
  return plan_on_inflated(inflate(grid, radius_m), start_m, goal_m);
}

NavPath plan_on_inflated(const OccupancyGrid& g, Vec2 start_m, Vec2 goal_m) {
  const GridIndex start = g.cell_of(start_m);
  const GridIndex goal = g.cell_of(goal_m);
  if (!g.free(start)) throw Error(ErrorCode::kInvalidEndpoint, "start cell is blocked or off the map");
  if (!g.free(goal)) throw Error(ErrorCode::kInvalidEndpoint, "goal cell is blocked or off the map");

  const auto index = [&](GridIndex i) { return static_cast<std::size_t>(i.row * g.width + i.col); };
  const std::size_t n = g.cells.size();
  std::vector<PathCost> best(n);
  std::vector<bool> seen(n, false);
  std::vector<bool> closed(n, false);
  std::vector<GridIndex> parent(n);

  struct Entry {
    double f;
    double h;
    std::uint64_t order;
    GridIndex cell;
  };
  const auto worse = [](const Entry& a, const Entry& b) {
    if (a.f != b.f) return a.f > b.f;
    if (a.h != b.h) return a.h > b.h;
    return a.order > b.order;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);
  std::uint64_t order = 0;
  seen[index(start)] = true;
  open.push({octile(start, goal).value(), octile(start, goal).value(), order++, start});

  while (!open.empty()) {
    const Entry top = open.top();
    open.pop();
    const std::size_t ti = index(top.cell);
    if (closed[ti]) continue;
    closed[ti] = true;
    if (top.cell == goal) break;
    for (const auto& [dr, dc] : kMoves) {
      const GridIndex next{top.cell.row + dr, top.cell.col + dc};
      if (!g.free(next) || closed[index(next)]) continue;
      const bool diagonal = dr != 0 && dc != 0;
      if (diagonal && (!g.free({top.cell.row + dr, top.cell.col}) || !g.free({top.cell.row, top.cell.col + dc}))) {
        continue;
      }
      const PathCost cost = best[ti] + (diagonal ? PathCost{0, 1} : PathCost{1, 0});
      const std::size_t ni = index(next);
      if (seen[ni] && best[ni].value() <= cost.value()) continue;
      seen[ni] = true;
      best[ni] = cost;
      parent[ni] = top.cell;
      const double h = octile(next, goal).value();
      open.push({cost.value() + h, h, order++, next});
    }
  }
  if (!closed[index(goal)]) throw Error(ErrorCode::kUnreachable, "no collision-free path to the goal");

  NavPath path;
  for (GridIndex c = goal;; c = parent[index(c)]) {
    path.cells.push_back(c);
    if (c == start) break;
  }
  std::reverse(path.cells.begin(), path.cells.end());
  for (const GridIndex c : path.cells) path.waypoints.push_back(g.cell_center(c));
  path.steps = best[index(goal)];
  path.cost = path.steps.value();
  return path;
}

PathFollower::PathFollower(NavPath path, std::optional<double> final_heading, FollowerGains gains)
    : path_(std::move(path)), final_heading_(final_heading), gains_(gains) {}

bool PathFollower::done(const world::BasePose& base) const {
  if (path_.waypoints.empty()) return true;
  const Vec2 last = path_.waypoints.back();
  const bool arrived = norm(Vec2{base.x, base.y} - last) <= gains_.arrival_tolerance_m;
  const bool facing =
      !final_heading_ || std::abs(wrap_angle(*final_heading_ - base.yaw)) <= gains_.heading_tolerance_rad;
  return arrived && facing;
}

world::BaseVelocity PathFollower::command(const world::BasePose& base, const world::BaseVelocity& limits,
                                          double dt) {
  if (done(base)) return {};
  const Vec2 here{base.x, base.y};
  while (next_ + 1 < path_.waypoints.size() &&
         norm(path_.waypoints[next_] - here) <= gains_.arrival_tolerance_m) {
    ++next_;
  }
  const bool last = next_ + 1 == path_.waypoints.size();
  const Vec2 error = path_.waypoints[next_] - here;
  const double dist = norm(error);

  // Speed: proportional, never overshooting the last waypoint in one tick.
  double speed = gains_.position * dist;
  if (!last) speed = std::max(speed, gains_.position * gains_.arrival_tolerance_m);
  if (last) speed = std::min(speed, dist / dt);
  const double c = std::cos(base.yaw);
  const double s = std::sin(base.yaw);
  Vec2 body{0.0, 0.0};
  if (dist > 0.0) {
    const Vec2 dir = error * (1.0 / dist);
    body = Vec2{c * dir.x + s * dir.y, -s * dir.x + c * dir.y} * speed;
  }
  double scale = 1.0;
  if (std::abs(body.x) > limits.vx) scale = std::min(scale, limits.vx / std::abs(body.x));
  if (std::abs(body.y) > limits.vy) scale = std::min(scale, limits.vy / std::abs(body.y));
  body = body * scale;

  double omega = 0.0;
  if (last && final_heading_) {
    const double err = wrap_angle(*final_heading_ - base.yaw);
    omega = std::clamp(gains_.heading * err, -limits.omega, limits.omega);
    omega = std::clamp(omega, -std::abs(err) / dt, std::abs(err) / dt);
  }
  return {body.x, body.y, omega};
}

// ---------------------------------------------------------------------------
// Files

Json grid_header_json(const OccupancyGrid& grid, const std::string& image_name) {
  return Json{{"origin", grid.origin},     {"cell_m", grid.cell_m}, {"width", grid.width},
              {"height", grid.height},     {"image", image_name},   {"row_order", "origin_first"},
              {"values", Json{{"free", 0}, {"occupied", 1}, {"undefined", 2}}}};
}

std::string grid_to_pgm(const OccupancyGrid& grid) {
  std::ostringstream out;
  out << "P2\n" << grid.width << ' ' << grid.height << "\n2\n";
  for (int row = 0; row < grid.height; ++row) {
    for (int col = 0; col < grid.width; ++col) {
      if (col > 0) out << ' ';
      out << static_cast<int>(grid.at({row, col}));
    }
    out << '\n';
  }
  return out.str();
}

OccupancyGrid grid_from_pgm(const std::string& text, Vec2 origin, double cell_m) {
  std::istringstream in(text);
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (!in || magic != "P2" || width <= 0 || height <= 0 || maxval < 2) {
    throw Error(ErrorCode::kSchemaError, "occupancy image is not an ASCII PGM with values 0..2");
  }
  OccupancyGrid g = OccupancyGrid::filled(origin, cell_m, width, height);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      int v = -1;
      if (!(in >> v) || v < 0 || v > 2) throw Error(ErrorCode::kSchemaError, "bad occupancy value");
      g.set({row, col}, static_cast<Cell>(v));
    }
  }
  return g;
}

void save_occupancy(const OccupancyGrid& grid, const std::filesystem::path& stem) {
  const std::string image = stem.filename().string() + ".pgm";
  write_text_file(stem.string() + ".json", grid_header_json(grid, image).dump(2) + "\n");
  write_text_file(stem.string() + ".pgm", grid_to_pgm(grid));
}

OccupancyGrid load_occupancy(const std::filesystem::path& header_path) {
  const Json header = read_json_file(header_path);
  try {
    const Vec2 origin = header.at("origin").get<Vec2>();
    const double cell_m = header.at("cell_m").get<double>();
    if (!(cell_m > 0.0)) throw Error(ErrorCode::kSchemaError, "cell_m must be positive");
    const std::filesystem::path image = header_path.parent_path() / header.at("image").get<std::string>();
    OccupancyGrid g = grid_from_pgm(read_text_file(image), origin, cell_m);
    if (g.width != header.at("width").get<int>() || g.height != header.at("height").get<int>()) {
      throw Error(ErrorCode::kSchemaError, "header size does not match the image");
    }
    return g;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("occupancy header: ") + e.what());
  }
}

void to_json(Json& j, const NavPath& p) {
  Json waypoints = Json::array();
  for (const Vec2 w : p.waypoints) waypoints.push_back(Json::array({w.x, w.y}));
  j = Json{{"waypoints", waypoints},
           {"cost", p.cost},
           {"straight_steps", p.steps.straight},
           {"diagonal_steps", p.steps.diagonal}};
}

}  // namespace labsim::nav
