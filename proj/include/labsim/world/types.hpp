#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "labsim/chem/mixture.hpp"
#include "labsim/chem/reaction.hpp"
#include "labsim/core/math.hpp"

namespace labsim::world {

inline constexpr int kTicksPerSecond = 60;
inline constexpr double kDefaultDt = 1.0 / kTicksPerSecond;
inline constexpr int kWorldSchemaVersion = 1;

// Number of whole ticks covering `seconds` at the world rate. Integer maths so
// hold windows never drift.
constexpr std::int64_t ticks_for_seconds(double seconds) {
  const double exact = seconds * kTicksPerSecond;
  const auto whole = static_cast<std::int64_t>(exact);
  return static_cast<double>(whole) < exact ? whole + 1 : whole;
}

struct ObjectState {
  std::string id;
  std::string category;
  Pose pose;
  Vec3 half_extents{0.05, 0.05, 0.05};
  bool graspable = false;
  bool held_by_agent = false;
  double upright_tolerance_deg = 10.0;
  bool support_surface = false;   // other objects can rest on its top face
  Vec3 grasp_point_local{};       // grasp target in the object frame
  Vec3 grasp_axis_local{0, 0, -1};  // tool z must align with this axis
  std::vector<std::string> tags;  // appearance / variant tags

  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

struct ContainerState {
  ObjectState object;
  double capacity_ml = 250.0;
  chem::Mixture contents;
  double mouth_radius_m = 0.03;
  double rim_height_m = 0.10;  // base to rim
  // Agitation bookkeeping.
  int last_tilt_side = 0;  // -1 right, +1 left, 0 none yet
  int shake_cycles = 0;
  double stir_angle_rad = 0.0;
  std::optional<double> stir_last_angle;

  friend bool operator==(const ContainerState&, const ContainerState&) = default;
};

enum class JointKind { kRevolute, kPrismatic };
enum class JointRole { kHandle, kButton };

struct JointState {
  std::string id;
  JointKind kind = JointKind::kRevolute;
  JointRole role = JointRole::kHandle;
  double value = 0.0;
  double range_min = 0.0;
  double range_max = 0.0;
  std::string attached_object_id;
  Vec3 origin{};           // hinge point (revolute)
  Vec3 axis{0, 0, 1};      // hinge axis, slide direction, or press direction
  Pose attachment_rest;    // attached object pose at value 0
  // Latch: the handle must be twisted about its grasp axis by handle_turn_rad
  // before the joint moves. 0 disables the latch.
  double handle_turn_rad = 0.0;
  double handle_angle_rad = 0.0;
  // Buttons only.
  bool activated = false;
  double activation_threshold = 0.008;
  std::string powers_object_id;  // instrument switched on by the button

  friend bool operator==(const JointState&, const JointState&) = default;
};

struct BasePose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  friend bool operator==(const BasePose&, const BasePose&) = default;
};

struct BaseVelocity {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;

  friend bool operator==(const BaseVelocity&, const BaseVelocity&) = default;
};

struct AgentState {
  Pose ee_pose{{0.3, 0.0, 1.1}, {0.0, 1.0, 0.0, 0.0}};
  double gripper_aperture_m = 0.08;
  double gripper_command_m = 0.08;
  std::optional<std::string> held_object_id;
  Pose held_offset;  // object pose in the end-effector frame while holding
  std::optional<BasePose> base_pose;
  double max_ee_speed_mps = 0.5;
  double max_ee_angular_speed = 2.0;
  BaseVelocity max_base_speed{0.5, 0.5, 1.0};
  bool base_in_collision = false;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct WorldParams {
  double max_aperture_m = 0.08;
  double gripper_speed_mps = 0.25;
  double grasp_threshold_m = 0.02;
  double grasp_tolerance_m = 0.02;
  double grasp_tolerance_deg = 15.0;
  double pour_onset_deg = 45.0;
  double pour_rate_ml_per_s = 50.0;
  double drop_gap_m = 0.03;
  double support_slack_m = 0.02;
  double tilt_event_deg = 15.0;
  double reach_m = 1.5;
  double base_radius_m = 0.2;
  double obstacle_band_low_m = 0.1;
  double obstacle_band_high_m = 1.6;
  double heater_rate_c_per_s = 1.0;

  friend bool operator==(const WorldParams&, const WorldParams&) = default;
};

enum class EventKind {
  kAttached,
  kReleased,
  kFell,
  kPour,
  kSpill,
  kReaction,
  kTiltLeft,
  kTiltRight,
  kShakeCycle,
  kButtonActivated,
  kBaseCollision,
};

struct WorldEvent {
  std::int64_t tick = 0;
  EventKind kind = EventKind::kAttached;
  std::string subject;
  std::string other;
  double value = 0.0;

  friend bool operator==(const WorldEvent&, const WorldEvent&) = default;
};

struct WorldState {
  std::int64_t tick = 0;
  double dt_s = kDefaultDt;
  std::map<std::string, ObjectState> objects;
  std::map<std::string, ContainerState> containers;
  std::map<std::string, JointState> joints;
  AgentState agent;
  WorldParams params;
  std::uint64_t rng_seed = 0;
  std::vector<WorldEvent> event_log;
  double spilled_ml = 0.0;
  double spilled_g = 0.0;
  std::shared_ptr<const chem::Chemistry> chemistry;  // shared, not serialized

  double time_s() const { return static_cast<double>(tick) * dt_s; }

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct AgentAction {
  Vec3 ee_linear{};   // world frame, m/s
  Vec3 ee_angular{};  // world frame rotation vector rate, rad/s
  std::optional<double> gripper;  // commanded aperture; absent keeps the last command
  BaseVelocity base{};            // body frame

  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view text);

}  // namespace labsim::world
