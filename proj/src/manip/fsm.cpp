#include "labsim/manip/fsm.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "labsim/core/error.hpp"
#include "labsim/world/world.hpp"

namespace labsim::manip {

using world::AgentAction;
using world::ContainerState;
using world::JointState;
using world::ObjectState;
using world::WorldState;

namespace {

constexpr Vec3 kUp{0, 0, 1};
constexpr double kEmptyMl = 1e-9;
constexpr double kPressToleranceM = 0.001;

constexpr std::array<std::string_view, 7> kPickPhases{"above", "approach", "align", "settle", "close", "lift", "done"};
constexpr std::array<std::string_view, 6> kPourPhases{"start", "ready", "tilt", "hold", "upright", "done"};
constexpr std::array<std::string_view, 7> kPlacePhases{"above", "lower", "align", "settle", "release", "retract", "done"};
constexpr std::array<std::string_view, 4> kPressPhases{"above", "adjust_gripper", "press", "done"};
constexpr std::array<std::string_view, 11> kShakePhases{"raise",  "settle", "left_1", "right_1",    "left_2", "right_2",
                                                        "left_3", "right_3", "return", "settle_end", "done"};
constexpr std::array<std::string_view, 6> kStirPhases{"lift", "above", "insert", "stir", "retract", "done"};
constexpr std::array<std::string_view, 6> kOpenPhases{"approach", "grip_turn", "pull", "verify", "pause", "release"};
constexpr std::array<std::string_view, 3> kClosePhases{"approach", "push", "done"};

constexpr std::array<std::pair<ActionKind, std::string_view>, 10> kKindNames{{
    {ActionKind::kPick, "pick"},
    {ActionKind::kPour, "pour"},
    {ActionKind::kPlace, "place"},
    {ActionKind::kPress, "press"},
    {ActionKind::kShake, "shake"},
    {ActionKind::kStir, "stir"},
    {ActionKind::kOpenDoor, "open_door"},
    {ActionKind::kCloseDoor, "close_door"},
    {ActionKind::kOpenDrawer, "open_drawer"},
    {ActionKind::kCloseDrawer, "close_drawer"},
}};

bool is_open(ActionKind k) { return k == ActionKind::kOpenDoor || k == ActionKind::kOpenDrawer; }

bool holds(const WorldState& w, std::string_view id) {
  return w.agent.held_object_id && *w.agent.held_object_id == id;
}

Quat upright_of(Quat q) { return Quat::from_yaw(yaw_of(q)); }

Pose point_frame(Vec3 local) { return {local, Quat{}}; }

const JointState& joint_at(const WorldState& w, const std::string& id) {
  const auto it = w.joints.find(id);
  if (it == w.joints.end()) throw Error(ErrorCode::kTargetLost, "joint '" + id + "' is gone");
  return it->second;
}

AgentAction still(std::optional<double> gripper) {
  AgentAction a;
  a.gripper = gripper;
  return a;
}

}  // namespace

std::string_view to_string(ActionKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ActionKind action_kind_from_string(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  throw Error(ErrorCode::kSchemaError, "unknown action '" + std::string(text) + "'");
}

std::span<const std::string_view> phase_labels(ActionKind kind) {
  switch (kind) {
    case ActionKind::kPick: return kPickPhases;
    case ActionKind::kPour: return kPourPhases;
    case ActionKind::kPlace: return kPlacePhases;
    case ActionKind::kPress: return kPressPhases;
    case ActionKind::kShake: return kShakePhases;
    case ActionKind::kStir: return kStirPhases;
    case ActionKind::kOpenDoor:
    case ActionKind::kOpenDrawer: return kOpenPhases;
    case ActionKind::kCloseDoor:
    case ActionKind::kCloseDrawer: return kClosePhases;
  }
  return {};
}

ActionParams pick(std::string object_id) {
  ActionParams p;
  p.kind = ActionKind::kPick;
  p.object_id = std::move(object_id);
  return p;
}

ActionParams pour(std::string source_id, std::string target_id) {
  ActionParams p;
  p.kind = ActionKind::kPour;
  p.object_id = std::move(source_id);
  p.target_id = std::move(target_id);
  return p;
}

ActionParams place(std::string object_id, std::string support_id, std::optional<Vec2> xy) {
  ActionParams p;
  p.kind = ActionKind::kPlace;
  p.object_id = std::move(object_id);
  p.target_id = std::move(support_id);
  p.place_xy = xy;
  return p;
}

ActionParams press(std::string joint_id) {
  ActionParams p;
  p.kind = ActionKind::kPress;
  p.joint_id = std::move(joint_id);
  return p;
}

ActionParams shake(std::string container_id) {
  ActionParams p;
  p.kind = ActionKind::kShake;
  p.object_id = std::move(container_id);
  return p;
}

ActionParams stir(std::string rod_id, std::string container_id) {
  ActionParams p;
  p.kind = ActionKind::kStir;
  p.object_id = std::move(rod_id);
  p.target_id = std::move(container_id);
  return p;
}

namespace {
ActionParams articulation(ActionKind kind, std::string joint_id, std::optional<double> target) {
  ActionParams p;
  p.kind = kind;
  p.joint_id = std::move(joint_id);
  p.joint_target = target;
  return p;
}
}  // namespace

ActionParams open_door(std::string joint_id, std::optional<double> target) {
  return articulation(ActionKind::kOpenDoor, std::move(joint_id), target);
}
ActionParams close_door(std::string joint_id) {
  return articulation(ActionKind::kCloseDoor, std::move(joint_id), std::nullopt);
}
ActionParams open_drawer(std::string joint_id, std::optional<double> target) {
  return articulation(ActionKind::kOpenDrawer, std::move(joint_id), target);
}
ActionParams close_drawer(std::string joint_id) {
  return articulation(ActionKind::kCloseDrawer, std::move(joint_id), std::nullopt);
}

void to_json(Json& j, const ActionParams& p) {
  j = Json{{"kind", to_string(p.kind)}};
  if (!p.object_id.empty()) j["object"] = p.object_id;
  if (!p.target_id.empty()) j["target"] = p.target_id;
  if (!p.joint_id.empty()) j["joint"] = p.joint_id;
  if (p.place_xy) j["place_xy"] = *p.place_xy;
  if (p.joint_target) j["joint_target"] = *p.joint_target;
}

void from_json(const Json& j, ActionParams& p) {
  if (!j.is_object() || !j.contains("kind")) throw Error(ErrorCode::kSchemaError, "action needs a kind");
  p = ActionParams{};
  p.kind = action_kind_from_string(j.at("kind").get<std::string>());
  p.object_id = j.value("object", "");
  p.target_id = j.value("target", "");
  p.joint_id = j.value("joint", "");
  if (j.contains("place_xy")) p.place_xy = j.at("place_xy").get<Vec2>();
  if (j.contains("joint_target")) p.joint_target = j.at("joint_target").get<double>();
}

// ---------------------------------------------------------------------------

double ArticulationTrajectory::value_at(int k) const {
  if (steps <= 0 || k >= steps) return target_value;
  if (k <= 0) return start_value;
  return start_value + (target_value - start_value) * static_cast<double>(k) / static_cast<double>(steps);
}

Pose ArticulationTrajectory::handle_pose_at(const WorldState& world, int k) const {
  const JointState& j = joint_at(world, joint_id);
  const ObjectState& handle = world::body_at(world, j.attached_object_id);
  const double t = steps <= 0 ? 1.0 : std::clamp(static_cast<double>(k) / steps, 0.0, 1.0);
  Quat q = slerp(start_orientation, target_orientation, t);
  if (j.handle_angle_rad != 0.0) q = q * Quat::from_axis_angle(handle.grasp_axis_local, j.handle_angle_rad);
  return {world::joint_attachment_pose(j, value_at(k)).position, normalized(q)};
}

ArticulationTrajectory articulate(const WorldState& world, std::string_view joint_id, double target, double step) {
  const auto it = world.joints.find(std::string(joint_id));
  if (it == world.joints.end()) throw Error(ErrorCode::kUnknownObject, "joint '" + std::string(joint_id) + "'");
  const JointState& j = it->second;
  if (!holds(world, j.attached_object_id)) {
    throw Error(ErrorCode::kNotGrasping, "handle of '" + j.id + "' is not held");
  }
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "articulation step must be positive");
  ArticulationTrajectory t;
  t.joint_id = j.id;
  t.start_value = j.value;
  t.target_value = std::clamp(target, j.range_min, j.range_max);
  const double span = std::abs(t.target_value - t.start_value);
  t.steps = span <= 1e-12 ? 0 : static_cast<int>(std::ceil(span / step - 1e-9));
  t.start_orientation = world::joint_attachment_pose(j, t.start_value).orientation;
  t.target_orientation = world::joint_attachment_pose(j, t.target_value).orientation;
  return t;
}

Pose grasp_pose(const ObjectState& obj) {
  return {world::grasp_point(obj), normalized(obj.pose.orientation * rotation_between(kUp, obj.grasp_axis_local))};
}

AgentAction servo_action(const WorldState& world, const Pose& frame_in_ee, const Pose& target, bool track) {
  const Pose& ee = world.agent.ee_pose;
  const Pose frame = ee * frame_in_ee;
  const double dt = world.dt_s;

  Pose next = target;
  if (!track) {
    // Proportional step, capped at the servo speeds.
    const Vec3 delta = target.position - frame.position;
    const double dist = norm(delta);
    const double step = std::min(kServoGain * dist, kServoSpeedMps) * dt;
    next.position = dist > step ? frame.position + delta * (step / dist) : target.position;
    const double angle = angle_between(frame.orientation, target.orientation);
    const double turn = std::min(kServoGain * angle, kServoAngularRadPerS) * dt;
    next.orientation = angle > turn ? slerp(frame.orientation, target.orientation, turn / angle) : target.orientation;
  }
  const Pose ee_next = next * inverse(frame_in_ee);

  AgentAction a;
  a.ee_linear = (ee_next.position - ee.position) * (1.0 / dt);
  a.ee_angular = log(normalized(ee_next.orientation * conjugate(ee.orientation))) * (1.0 / dt);
  const double v = norm(a.ee_linear);
  const double w = norm(a.ee_angular);
  double scale = 1.0;
  if (v > world.agent.max_ee_speed_mps) scale = std::min(scale, world.agent.max_ee_speed_mps / v);
  if (w > world.agent.max_ee_angular_speed) scale = std::min(scale, world.agent.max_ee_angular_speed / w);
  a.ee_linear = a.ee_linear * scale;
  a.ee_angular = a.ee_angular * scale;
  return a;
}

// ---------------------------------------------------------------------------

AtomicActionFsm::AtomicActionFsm(ActionParams params) : params_(std::move(params)) {}

std::string_view AtomicActionFsm::phase_label() const { return phase_labels(params_.kind)[phase_]; }

bool AtomicActionFsm::pose_reached(const WorldState& w, const Pose& frame_in_ee, const Pose& target) const {
  const Pose frame = w.agent.ee_pose * frame_in_ee;
  return norm(frame.position - target.position) <= kPositionToleranceM &&
         angle_between(frame.orientation, target.orientation) <= kOrientationToleranceRad;
}

void AtomicActionFsm::check_targets(const WorldState& w) const {
  const auto need = [&](const std::string& id) {
    if (!id.empty() && !world::has_body(w, id)) throw Error(ErrorCode::kTargetLost, "'" + id + "' is gone");
  };
  need(params_.object_id);
  need(params_.target_id);
  if (!params_.joint_id.empty()) need(joint_at(w, params_.joint_id).attached_object_id);

  const auto must_hold = [&](const std::string& id) {
    if (!holds(w, id)) throw Error(ErrorCode::kTargetLost, "'" + id + "' is no longer held");
  };
  switch (params_.kind) {
    case ActionKind::kPick:
      if (phase_ >= 5) must_hold(params_.object_id);
      break;
    case ActionKind::kPour:
    case ActionKind::kShake:
    case ActionKind::kStir:
      must_hold(params_.object_id);
      break;
    case ActionKind::kPlace:
      if (phase_ <= 3) must_hold(params_.object_id);
      break;
    case ActionKind::kOpenDoor:
    case ActionKind::kOpenDrawer:
      if (phase_ >= 2 && phase_ <= 4) must_hold(joint_at(w, params_.joint_id).attached_object_id);
      break;
    default: break;
  }
}

void AtomicActionFsm::enter_phase(const WorldState& w) {
  ticks_in_phase_ = 0;
  entry_ee_ = w.agent.ee_pose;
  if (phase_ != 0) return;

  switch (params_.kind) {
    case ActionKind::kPick:
      if (w.agent.held_object_id && *w.agent.held_object_id != params_.object_id) {
        throw Error(ErrorCode::kAlreadyHolding, "agent already holds '" + *w.agent.held_object_id + "'");
      }
      break;
    case ActionKind::kPour: {
      if (!holds(w, params_.object_id)) throw Error(ErrorCode::kNotGrasping, "'" + params_.object_id + "' not held");
      const ContainerState& src = world::container_at(w, params_.object_id);
      const ObjectState& dst = world::body_at(w, params_.target_id);
      upright_ = upright_of(src.object.pose.orientation);
      Vec2 d = dst.pose.position.xy() - src.object.pose.position.xy();
      d = norm(d) < 1e-9 ? Vec2{1, 0} : d * (1.0 / norm(d));
      const Vec3 d3{d.x, d.y, 0};
      pivot_local_ = Vec3{0, 0, src.object.half_extents.z} +
                     rotate(conjugate(src.object.pose.orientation), d3 * src.mouth_radius_m);
      tilt_axis_ = normalized(cross(kUp, d3));
      break;
    }
    case ActionKind::kPlace:
    case ActionKind::kShake:
    case ActionKind::kStir: {
      if (!holds(w, params_.object_id)) throw Error(ErrorCode::kNotGrasping, "'" + params_.object_id + "' not held");
      const ObjectState& obj = world::body_at(w, params_.object_id);
      upright_ = upright_of(obj.pose.orientation);
      origin_ = obj.pose.position;
      anchor_ = origin_ + Vec3{0, 0, 0.05};
      if (params_.kind == ActionKind::kStir) {
        upright_ = obj.pose.orientation;
        pivot_local_ = {0, 0, -obj.half_extents.z};
        anchor_ = world::top_center(world::body_at(w, params_.target_id));
      }
      break;
    }
    default: break;
  }
}

bool AtomicActionFsm::phase_done(const WorldState& w) const {
  const int last = phase_count(params_.kind) - 1;
  const bool dwell = ticks_in_phase_ >= params_.dwell_ticks;
  switch (params_.kind) {
    case ActionKind::kPick: {
      const Command c = pick_command(w);
      if (phase_ == 3) return dwell;
      if (phase_ == 4) return holds(w, params_.object_id);
      if (phase_ == last) return true;
      return pose_reached(w, c.frame_in_ee, c.target);
    }
    case ActionKind::kPour: {
      if (phase_ == last) return true;
      if (phase_ == 3) {
        return ticks_in_phase_ >= params_.pour_min_ticks &&
               world::liquid_volume_ml(w, world::container_at(w, params_.object_id)) <= kEmptyMl;
      }
      const Command c = pour_command(w);
      return pose_reached(w, c.frame_in_ee, c.target);
    }
    case ActionKind::kPlace: {
      if (phase_ == last) return true;
      if (phase_ == 3) return dwell;
      if (phase_ == 4) return !w.agent.held_object_id;
      const Command c = place_command(w);
      return pose_reached(w, c.frame_in_ee, c.target);
    }
    case ActionKind::kPress: {
      if (phase_ == last) return true;
      if (phase_ == 1) return w.agent.gripper_aperture_m <= 1e-9;
      const Command c = press_command(w);
      if (phase_ == 2) {
        return norm(w.agent.ee_pose.position - c.target.position) <= kPressToleranceM &&
               angle_between(w.agent.ee_pose.orientation, c.target.orientation) <= kOrientationToleranceRad;
      }
      return pose_reached(w, c.frame_in_ee, c.target);
    }
    case ActionKind::kShake: {
      if (phase_ == last) return true;
      if (phase_ == 1 || phase_ == 9) return dwell;
      const Command c = shake_command(w);
      const bool reached = pose_reached(w, c.frame_in_ee, c.target);
      if (phase_ >= 2 && phase_ <= 7) return reached && ticks_in_phase_ >= params_.shake_half_cycle_ticks;
      return reached;
    }
    case ActionKind::kStir: {
      if (phase_ == last) return true;
      const Command c = stir_command(w);
      const bool reached = pose_reached(w, c.frame_in_ee, c.target);
      if (phase_ == 3) return reached && ticks_in_phase_ >= params_.stir_ticks;
      return reached;
    }
    default: break;
  }

  // Articulated joints.
  const JointState& j = joint_at(w, params_.joint_id);
  const ObjectState& handle = world::body_at(w, j.attached_object_id);
  const bool prismatic = j.kind == world::JointKind::kPrismatic;
  const double verify = prismatic ? params_.prismatic_verify_m : params_.revolute_verify_rad;
  const bool latch_ok = j.handle_turn_rad == 0.0 || std::abs(j.handle_angle_rad - j.handle_turn_rad) <= deg_to_rad(5.0);
  const auto released = [&](double retreat) {
    if (w.agent.held_object_id) return false;
    if (retreat <= 0.0) return true;
    return retreat_target_ && pose_reached(w, Pose{}, *retreat_target_);
  };
  if (phase_ == 0) return pose_reached(w, Pose{}, grasp_pose(handle));
  if (is_open(params_.kind)) {
    const double target = std::clamp(params_.joint_target.value_or(j.range_max), j.range_min, j.range_max);
    switch (phase_) {
      case 1: return holds(w, handle.id) && latch_ok;
      case 2: return trajectory_ && trajectory_step_ >= trajectory_->steps;
      case 3: return std::abs(j.value - target) <= verify;
      case 4: return dwell;
      default: return released(params_.retreat_m);
    }
  }
  if (phase_ == 1) {
    return holds(w, handle.id) && trajectory_ && trajectory_step_ >= trajectory_->steps &&
           std::abs(j.value - j.range_min) <= verify;
  }
  return released(params_.close_retreat_m);
}

AtomicActionFsm::Command AtomicActionFsm::pick_command(const WorldState& w) const {
  const ObjectState& obj = world::body_at(w, params_.object_id);
  const Pose g = grasp_pose(obj);
  const Vec3 tool_z = rotate(g.orientation, kUp);
  const double open = w.params.max_aperture_m;
  Command c;
  c.gripper = open;
  switch (phase_) {
    case 0: c.target = {g.position - tool_z * params_.approach_height_m, g.orientation}; break;
    case 1: c.target = {g.position - tool_z * params_.pre_grasp_height_m, g.orientation}; break;
    case 2: c.target = g; break;
    case 3: c.hold = true; break;
    case 4:
      c.target = g;
      c.gripper = 0.0;
      break;
    default:
      c.target = {entry_ee_.position + kUp * params_.lift_height_m, entry_ee_.orientation};
      c.gripper = 0.0;
      break;
  }
  return c;
}

AtomicActionFsm::Command AtomicActionFsm::pour_command(const WorldState& w) const {
  const Vec3 mouth = world::top_center(world::body_at(w, params_.target_id));
  Command c;
  c.gripper = 0.0;
  c.frame_in_ee = w.agent.held_offset * point_frame(pivot_local_);
  const Quat tilted = normalized(Quat::from_axis_angle(tilt_axis_, deg_to_rad(params_.pour_tilt_deg)) * upright_);
  switch (phase_) {
    case 0: c.target = {mouth + kUp * params_.approach_height_m, upright_}; break;
    case 1: c.target = {mouth + kUp * params_.pre_grasp_height_m, upright_}; break;
    case 2:
    case 3: c.target = {mouth + kUp * params_.pre_grasp_height_m, tilted}; break;
    default: c.target = {mouth + kUp * params_.pre_grasp_height_m, upright_}; break;
  }
  return c;
}

AtomicActionFsm::Command AtomicActionFsm::place_command(const WorldState& w) const {
  const ObjectState& obj = world::body_at(w, params_.object_id);
  Vec2 xy = params_.place_xy.value_or(obj.pose.position.xy());
  double surface = 0.0;
  if (!params_.target_id.empty()) {
    const ObjectState& support = world::body_at(w, params_.target_id);
    if (!params_.place_xy) xy = support.pose.position.xy();
    surface = world::top_center(support).z;
  } else {
    surface = world::support_height(w, xy, std::numeric_limits<double>::infinity(), obj.id);
  }
  const double rest_z = surface + obj.half_extents.z + params_.place_clearance_m;
  Command c;
  c.gripper = 0.0;
  c.frame_in_ee = w.agent.held_offset;
  switch (phase_) {
    case 0: c.target = {{xy.x, xy.y, rest_z + 0.10}, upright_}; break;
    case 1: c.target = {{xy.x, xy.y, rest_z + 0.03}, upright_}; break;
    case 2: c.target = {{xy.x, xy.y, rest_z}, upright_}; break;
    case 3: c.hold = true; break;
    case 4:
      c.hold = true;
      c.gripper = w.params.max_aperture_m;
      break;
    default:
      c.frame_in_ee = Pose{};
      c.target = {entry_ee_.position + kUp * params_.retract_height_m, entry_ee_.orientation};
      c.gripper = w.params.max_aperture_m;
      break;
  }
  return c;
}

AtomicActionFsm::Command AtomicActionFsm::press_command(const WorldState& w) const {
  const JointState& j = joint_at(w, params_.joint_id);
  const ObjectState& button = world::body_at(w, j.attached_object_id);
  const Vec3 axis = normalized(j.axis);
  const Vec3 face = j.attachment_rest.position - axis * button.half_extents.z;
  const Quat q = rotation_between(kUp, axis);
  Command c;
  switch (phase_) {
    case 0: c.target = {face - axis * params_.press_standoff_m, q}; break;
    case 1:
      c.hold = true;
      c.gripper = 0.0;
      break;
    default: c.target = {face + axis * std::min(params_.press_depth_m, j.range_max), q}; break;
  }
  return c;
}

AtomicActionFsm::Command AtomicActionFsm::shake_command(const WorldState& w) const {
  Command c;
  c.gripper = 0.0;
  c.frame_in_ee = w.agent.held_offset;
  c.target = {phase_ >= 8 ? origin_ : anchor_, upright_};
  if (phase_ == 1 || phase_ == 9) {
    c.hold = true;
  } else if (phase_ >= 2 && phase_ <= 7) {
    const double sign = phase_ % 2 == 0 ? 1.0 : -1.0;
    c.target.orientation =
        normalized(Quat::from_axis_angle({1, 0, 0}, sign * deg_to_rad(params_.shake_tilt_deg)) * upright_);
  }
  return c;
}

AtomicActionFsm::Command AtomicActionFsm::stir_command(const WorldState& w) const {
  const ContainerState& cup = world::container_at(w, params_.target_id);
  const double r = params_.stir_radius_fraction * cup.mouth_radius_m;
  const double depth = params_.stir_depth_fraction * 2.0 * cup.object.half_extents.z;
  const Vec3 start = anchor_ + Vec3{r, 0, 0};
  Command c;
  c.gripper = 0.0;
  c.frame_in_ee = w.agent.held_offset * point_frame(pivot_local_);
  switch (phase_) {
    case 0: c.target = {(entry_ee_ * c.frame_in_ee).position + kUp * 0.05, upright_}; break;
    case 1: c.target = {start + kUp * 0.05, upright_}; break;
    case 2: c.target = {start - kUp * depth, upright_}; break;
    case 3: {
      const int k = std::min(ticks_in_phase_, params_.stir_ticks);
      const double phi = 2.0 * kPi * params_.stir_revolutions * k / params_.stir_ticks;
      c.target = {anchor_ + Vec3{r * std::cos(phi), r * std::sin(phi), -depth}, upright_};
      c.track = true;
      break;
    }
    default: c.target = {start + kUp * 0.05, upright_}; break;
  }
  return c;
}

AtomicActionFsm::Command AtomicActionFsm::articulation_command(const WorldState& w) {
  const JointState& j = joint_at(w, params_.joint_id);
  const ObjectState& handle = world::body_at(w, j.attached_object_id);
  const bool prismatic = j.kind == world::JointKind::kPrismatic;
  const double step = prismatic ? params_.prismatic_step_m : params_.revolute_step_rad;
  const bool opening = is_open(params_.kind);
  const double target = opening ? params_.joint_target.value_or(j.range_max) : j.range_min;
  const bool held = holds(w, handle.id);
  const double open = w.params.max_aperture_m;
  Command c;

  const auto grip = [&] {
    c.target = grasp_pose(handle);
    c.gripper = 0.0;
  };
  const auto turn = [&] {
    c.frame_in_ee = w.agent.held_offset;
    const Pose base = world::joint_attachment_pose(j, j.value);
    c.target = {base.position,
                normalized(base.orientation * Quat::from_axis_angle(handle.grasp_axis_local, j.handle_turn_rad))};
    c.gripper = 0.0;
  };
  const auto follow = [&] {
    if (!trajectory_) {
      trajectory_ = articulate(w, j.id, target, step);
      trajectory_step_ = 0;
    }
    c.frame_in_ee = w.agent.held_offset;
    c.gripper = 0.0;
    if (trajectory_step_ < trajectory_->steps) {
      ++trajectory_step_;
      c.target = trajectory_->handle_pose_at(w, trajectory_step_);
      c.track = true;
    } else {
      c.target = trajectory_->handle_pose_at(w, trajectory_->steps);
    }
  };
  const auto release = [&](double retreat) {
    c.gripper = open;
    if (w.agent.held_object_id) {
      c.hold = true;
      return;
    }
    if (retreat <= 0.0) {
      c.hold = true;
      return;
    }
    if (!retreat_target_) {
      const Pose& ee = w.agent.ee_pose;
      retreat_target_ = Pose{ee.position - rotate(ee.orientation, kUp) * retreat, ee.orientation};
    }
    c.target = *retreat_target_;
  };
  const bool latch_ok = j.handle_turn_rad == 0.0 || std::abs(j.handle_angle_rad - j.handle_turn_rad) <= deg_to_rad(5.0);

  if (phase_ == 0) {
    c.target = grasp_pose(handle);
    c.gripper = open;
    return c;
  }
  if (opening) {
    switch (phase_) {
      case 1:
        if (!held) {
          grip();
        } else {
          turn();
        }
        break;
      case 2:
      case 3: follow(); break;
      case 4:
        c.hold = true;
        c.gripper = 0.0;
        break;
      default: release(params_.retreat_m); break;
    }
    return c;
  }
  if (phase_ == 1) {
    if (!held) {
      grip();
    } else if (!latch_ok && !trajectory_) {
      turn();
    } else {
      follow();
    }
    return c;
  }
  release(params_.close_retreat_m);
  return c;
}

AtomicActionFsm::Command AtomicActionFsm::command(const WorldState& w) {
  switch (params_.kind) {
    case ActionKind::kPick: return pick_command(w);
    case ActionKind::kPour: return pour_command(w);
    case ActionKind::kPlace: return place_command(w);
    case ActionKind::kPress: return press_command(w);
    case ActionKind::kShake: return shake_command(w);
    case ActionKind::kStir: return stir_command(w);
    default: return articulation_command(w);
  }
}

AgentAction AtomicActionFsm::tick(const WorldState& world) {
  if (complete_) return still(std::nullopt);
  if (!started_) {
    started_ = true;
    enter_phase(world);
  }
  check_targets(world);
  const int last = phase_count(params_.kind) - 1;
  while (phase_done(world)) {
    if (phase_ == last) {
      complete_ = true;
      return still(std::nullopt);
    }
    ++phase_;
    enter_phase(world);
    check_targets(world);
  }
  if (++ticks_in_phase_ > params_.phase_budget_ticks) {
    throw Error(ErrorCode::kPhaseTimeout, std::string(to_string(params_.kind)) + " phase '" +
                                              std::string(phase_label()) + "' exceeded " +
                                              std::to_string(params_.phase_budget_ticks) + " ticks");
  }
  const Command c = command(world);
  if (c.hold) return still(c.gripper);
  AgentAction a = servo_action(world, c.frame_in_ee, c.target, c.track);
  a.gripper = c.gripper;
  return a;
}

std::pair<AtomicActionFsm, AgentAction> fsm_tick(AtomicActionFsm fsm, const WorldState& world) {
  AgentAction a = fsm.tick(world);
  return {std::move(fsm), a};
}

}  // namespace labsim::manip
