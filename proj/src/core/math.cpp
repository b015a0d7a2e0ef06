#include "labsim/core/math.hpp"

#include <algorithm>

namespace labsim {

Quat Quat::from_axis_angle(Vec3 axis, double angle) {
  const Vec3 u = normalized(axis);
  const double s = std::sin(angle / 2.0);
  return {std::cos(angle / 2.0), u.x * s, u.y * s, u.z * s};
}

Quat Quat::exp(Vec3 rotvec) {
  const double angle = norm(rotvec);
  if (angle < 1e-12) {
    // second-order expansion keeps tiny rotations well conditioned
    return normalized(Quat{1.0, rotvec.x / 2.0, rotvec.y / 2.0, rotvec.z / 2.0});
  }
  return from_axis_angle(rotvec / angle, angle);
}

Quat operator*(Quat a, Quat b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quat conjugate(Quat q) { return {q.w, -q.x, -q.y, -q.z}; }

double norm(Quat q) { return std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z); }

Quat normalized(Quat q) {
  const double n = norm(q);
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Vec3 rotate(Quat q, Vec3 v) {
  const Vec3 u{q.x, q.y, q.z};
  const Vec3 t = 2.0 * cross(u, v);
  return v + q.w * t + cross(u, t);
}

Vec3 log(Quat q) {
  if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
  const Vec3 u{q.x, q.y, q.z};
  const double s = norm(u);
  if (s < 1e-12) return 2.0 * u;
  const double angle = 2.0 * std::atan2(s, q.w);
  return u * (angle / s);
}

double angle_between(Quat a, Quat b) {
  const double d = std::abs(a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z);
  const Quat rel = conjugate(a) * b;
  const double s = std::sqrt(rel.x * rel.x + rel.y * rel.y + rel.z * rel.z);
  return 2.0 * std::atan2(s, std::min(d, 1.0));
}

Quat slerp(Quat a, Quat b, double t) {
  if (t <= 0.0) return a;
  if (t >= 1.0) return b;
  double d = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
  if (d < 0.0) {
    b = {-b.w, -b.x, -b.y, -b.z};
    d = -d;
  }
  if (d > 1.0 - 1e-12) {
    return normalized(Quat{a.w + t * (b.w - a.w), a.x + t * (b.x - a.x),
                           a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)});
  }
  const double theta = std::acos(std::min(d, 1.0));
  const double s = std::sin(theta);
  const double wa = std::sin((1.0 - t) * theta) / s;
  const double wb = std::sin(t * theta) / s;
  return normalized(Quat{wa * a.w + wb * b.w, wa * a.x + wb * b.x, wa * a.y + wb * b.y,
                         wa * a.z + wb * b.z});
}

Quat rotation_between(Vec3 from, Vec3 to) {
  const Vec3 a = normalized(from);
  const Vec3 b = normalized(to);
  const double d = dot(a, b);
  if (d < -1.0 + 1e-12) {
    // Antiparallel: any perpendicular axis works; pick one deterministically.
    Vec3 axis = cross(a, {1, 0, 0});
    if (norm(axis) < 1e-6) axis = cross(a, {0, 1, 0});
    return Quat::from_axis_angle(axis, kPi);
  }
  const Vec3 c = cross(a, b);
  return normalized(Quat{1.0 + d, c.x, c.y, c.z});
}

double yaw_of(Quat q) {
  const Vec3 fx = rotate(q, {1, 0, 0});
  return std::atan2(fx.y, fx.x);
}

double tilt_of(Quat q) {
  const Vec3 up = rotate(q, {0, 0, 1});
  return std::acos(std::clamp(up.z / norm(up), -1.0, 1.0));
}

Pose operator*(const Pose& a, const Pose& b) {
  return {a.position + rotate(a.orientation, b.position),
          normalized(a.orientation * b.orientation)};
}

Pose inverse(const Pose& p) {
  const Quat inv = conjugate(p.orientation);
  return {rotate(inv, -p.position), inv};
}

Vec3 transform_point(const Pose& p, Vec3 local) {
  return p.position + rotate(p.orientation, local);
}

}  // namespace labsim
