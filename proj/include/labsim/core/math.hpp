#pragma once

#include <cmath>
#include <numbers>

namespace labsim {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3& operator+=(Vec3 o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(Vec3 o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator/(Vec3 a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  friend constexpr bool operator==(Vec3, Vec3) = default;

  Vec2 xy() const { return {x, y}; }
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) {
  const double n = norm(a);
  return n > 0.0 ? a / n : Vec3{};
}
inline bool is_finite(Vec3 a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

// Unit quaternion, scalar first.
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quat identity() { return {}; }
  static Quat from_axis_angle(Vec3 axis, double angle);
  // Rotation vector (axis * angle) to quaternion.
  static Quat exp(Vec3 rotvec);
  static Quat from_yaw(double yaw) { return from_axis_angle({0, 0, 1}, yaw); }

  friend constexpr bool operator==(Quat, Quat) = default;
};

Quat operator*(Quat a, Quat b);
Quat conjugate(Quat q);
double norm(Quat q);
Quat normalized(Quat q);
Vec3 rotate(Quat q, Vec3 v);
// Inverse of exp: the shortest rotation vector representing q.
Vec3 log(Quat q);
// Angle of the relative rotation between a and b, in [0, pi].
double angle_between(Quat a, Quat b);
Quat slerp(Quat a, Quat b, double t);
// Shortest rotation taking direction `from` onto direction `to`.
Quat rotation_between(Vec3 from, Vec3 to);
// Yaw of the body x axis projected on the ground plane.
double yaw_of(Quat q);
// Angle between the body z axis and world z.
double tilt_of(Quat q);

struct Pose {
  Vec3 position{};
  Quat orientation{};

  friend constexpr bool operator==(const Pose&, const Pose&) = default;
};

Pose operator*(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);
Vec3 transform_point(const Pose& p, Vec3 local);

inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

}  // namespace labsim
