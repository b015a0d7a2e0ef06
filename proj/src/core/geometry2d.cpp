#include "labsim/core/geometry2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace labsim {

namespace {

struct Interval {
  double lo;
  double hi;
};

Interval project(const OrientedRect& r, Vec2 axis) {
  const double c = dot(r.center, axis);
  const double extent = r.half_extents.x * std::abs(dot(r.axis_x(), axis)) +
                        r.half_extents.y * std::abs(dot(r.axis_y(), axis));
  return {c - extent, c + extent};
}

}  // namespace

Vec2 OrientedRect::axis_x() const { return {std::cos(yaw), std::sin(yaw)}; }
Vec2 OrientedRect::axis_y() const { return {-std::sin(yaw), std::cos(yaw)}; }

std::array<Vec2, 4> OrientedRect::corners() const {
  const Vec2 ex = axis_x() * half_extents.x;
  const Vec2 ey = axis_y() * half_extents.y;
  return {center + ex + ey, center - ex + ey, center - ex - ey, center + ex - ey};
}

bool overlaps(const OrientedRect& a, const OrientedRect& b, double eps) {
  for (const Vec2 axis : {a.axis_x(), a.axis_y(), b.axis_x(), b.axis_y()}) {
    const Interval pa = project(a, axis);
    const Interval pb = project(b, axis);
    if (pa.hi <= pb.lo + eps || pb.hi <= pa.lo + eps) return false;
  }
  return true;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return norm(p - (a + ab * t));
}

double distance(const OrientedRect& a, const OrientedRect& b) {
  if (overlaps(a, b, 0.0)) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      best = std::min(best, point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
      best = std::min(best, point_segment_distance(cb[i], ca[j], ca[(j + 1) % 4]));
    }
  }
  return best;
}

bool inside(const AxisRect& bounds, const OrientedRect& r, double eps) {
  return wall_distance(bounds, r) >= -eps;
}

double wall_distance(const AxisRect& bounds, const OrientedRect& r) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2 c : r.corners()) {
    best = std::min({best, c.x - bounds.min.x, bounds.max.x - c.x, c.y - bounds.min.y, bounds.max.y - c.y});
  }
  return best;
}

}  // namespace labsim
