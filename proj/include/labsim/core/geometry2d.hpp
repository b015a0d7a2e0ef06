#pragma once

#include <array>

#include "labsim/core/math.hpp"

namespace labsim {

struct AxisRect {
  Vec2 min{};
  Vec2 max{};

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  Vec2 center() const { return (min + max) * 0.5; }
  bool contains(Vec2 p) const { return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y; }

  friend constexpr bool operator==(const AxisRect&, const AxisRect&) = default;
};

struct OrientedRect {
  Vec2 center{};
  Vec2 half_extents{};
  double yaw = 0.0;

  // Counter-clockwise starting at local (+x, +y).
  std::array<Vec2, 4> corners() const;
  Vec2 axis_x() const;
  Vec2 axis_y() const;
  double area() const { return 4.0 * half_extents.x * half_extents.y; }
};

// Positive-area overlap (separating axis test); touching edges do not count.
bool overlaps(const OrientedRect& a, const OrientedRect& b, double eps = 1e-9);
// Minimum distance between the two rectangles, 0 when they overlap.
double distance(const OrientedRect& a, const OrientedRect& b);
bool inside(const AxisRect& bounds, const OrientedRect& r, double eps = 1e-9);
// Smallest distance from any corner of `r` to the bounds' edges (negative when outside).
double wall_distance(const AxisRect& bounds, const OrientedRect& r);
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

}  // namespace labsim
