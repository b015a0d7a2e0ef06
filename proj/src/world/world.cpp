#include "labsim/world/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "labsim/core/error.hpp"

namespace labsim::world {

namespace {

constexpr double kMinStirRadius = 0.002;
constexpr double kRestingSlack = 0.005;
constexpr double kLatchTolerance = deg_to_rad(5.0);
constexpr double kMaxTemperatureC = 100.0;
constexpr double kButtonLateralSlack = 0.005;
constexpr double kButtonContactDepth = 0.03;

void log_event(WorldState& w, EventKind kind, std::string subject, std::string other = {},
               double value = 0.0) {
  w.event_log.push_back({w.tick, kind, std::move(subject), std::move(other), value});
}

Vec3 clamp_norm(Vec3 v, double max_norm) {
  const double n = norm(v);
  return n > max_norm ? v * (max_norm / n) : v;
}

Pose base_frame(const BasePose& b) { return {{b.x, b.y, 0.0}, Quat::from_yaw(b.yaw)}; }

bool is_finite(const AgentAction& a) {
  return labsim::is_finite(a.ee_linear) && labsim::is_finite(a.ee_angular) &&
         (!a.gripper || std::isfinite(*a.gripper)) && std::isfinite(a.base.vx) &&
         std::isfinite(a.base.vy) && std::isfinite(a.base.omega);
}

const chem::Chemistry& chemistry_of(const WorldState& w) {
  if (!w.chemistry) throw Error(ErrorCode::kInvalidArgument, "world has no chemistry attached");
  return *w.chemistry;
}

double mixture_volume(const WorldState& w, const chem::Mixture& m) {
  if (m.empty()) return 0.0;
  return chem::liquid_volume_ml(m, chemistry_of(w).substances);
}

double mixture_mass(const WorldState& w, const chem::Mixture& m) {
  if (m.empty()) return 0.0;
  return chem::mass_g(m, chemistry_of(w).substances);
}

void spill(WorldState& w, chem::Mixture&& lost, const std::string& source) {
  if (lost.empty()) return;
  const double ml = mixture_volume(w, lost);
  w.spilled_ml += ml;
  w.spilled_g += mixture_mass(w, lost);
  log_event(w, EventKind::kSpill, source, {}, ml);
}

JointState* joint_for_attachment(WorldState& w, std::string_view object_id) {
  for (auto& [id, j] : w.joints) {
    if (j.attached_object_id == object_id) return &j;
  }
  return nullptr;
}

double signed_twist(Quat rel, Vec3 axis) {
  const Vec3 a = normalized(axis);
  const double along = rel.x * a.x + rel.y * a.y + rel.z * a.z;
  return wrap_angle(2.0 * std::atan2(along, rel.w));
}

Pose handle_pose(const JointState& j, const ObjectState& handle) {
  Pose p = joint_attachment_pose(j, j.value);
  if (j.handle_angle_rad != 0.0) {
    p.orientation =
        normalized(p.orientation * Quat::from_axis_angle(handle.grasp_axis_local, j.handle_angle_rad));
  }
  return p;
}

double joint_value_for(const JointState& j, Vec3 target) {
  if (j.kind == JointKind::kPrismatic) return dot(target - j.attachment_rest.position, j.axis);
  const Vec3 axis = normalized(j.axis);
  Vec3 p0 = j.attachment_rest.position - j.origin;
  Vec3 p1 = target - j.origin;
  p0 -= axis * dot(p0, axis);
  p1 -= axis * dot(p1, axis);
  return std::atan2(dot(axis, cross(p0, p1)), dot(p0, p1));
}

// Projects the end-effector motion onto the joint manifold of a held handle.
void drive_held_joint(WorldState& w, JointState& j, ObjectState& handle) {
  const Pose desired = w.agent.ee_pose * w.agent.held_offset;
  if (j.handle_turn_rad != 0.0) {
    const Quat joint_q = joint_attachment_pose(j, j.value).orientation;
    const double twist = signed_twist(conjugate(joint_q) * desired.orientation, handle.grasp_axis_local);
    j.handle_angle_rad = std::clamp(twist, std::min(0.0, j.handle_turn_rad), std::max(0.0, j.handle_turn_rad));
  }
  const bool latched =
      j.handle_turn_rad != 0.0 && std::abs(j.handle_angle_rad - j.handle_turn_rad) > kLatchTolerance;
  if (!latched) j.value = std::clamp(joint_value_for(j, desired.position), j.range_min, j.range_max);
  handle.pose = handle_pose(j, handle);
  w.agent.ee_pose = handle.pose * inverse(w.agent.held_offset);
}

void update_buttons(WorldState& w) {
  for (auto& [id, j] : w.joints) {
    if (j.role != JointRole::kButton) continue;
    ObjectState* button = find_body(w, j.attached_object_id);
    if (button == nullptr) continue;
    const Vec3 axis = normalized(j.axis);
    const Vec3 face = j.attachment_rest.position - axis * button->half_extents.z;
    Vec3& ee = w.agent.ee_pose.position;
    const Vec3 d = ee - face;
    const double depth = dot(d, axis);
    const double lateral = norm(d - axis * depth);
    const double reach = std::max(button->half_extents.x, button->half_extents.y) + kButtonLateralSlack;
    const bool contact = lateral <= reach && depth > 0.0 && depth < j.range_max + kButtonContactDepth;
    if (contact && depth > j.range_max) ee -= axis * (depth - j.range_max);
    j.value = contact ? std::clamp(depth, j.range_min, j.range_max) : j.range_min;
    button->pose = joint_attachment_pose(j, j.value);
    if (!j.activated && j.value >= j.activation_threshold) {
      j.activated = true;
      log_event(w, EventKind::kButtonActivated, j.id, j.powers_object_id, j.value);
    }
  }
}

bool grasp_alignment_ok(const WorldState& w, const ObjectState& obj, double* distance, double* angle_deg) {
  const Vec3 tool_z = rotate(w.agent.ee_pose.orientation, {0, 0, 1});
  const Vec3 axis = normalized(rotate(obj.pose.orientation, obj.grasp_axis_local));
  *distance = norm(w.agent.ee_pose.position - grasp_point(obj));
  *angle_deg = rad_to_deg(std::acos(std::clamp(dot(tool_z, axis), -1.0, 1.0)));
  return *distance <= w.params.grasp_tolerance_m && *angle_deg <= w.params.grasp_tolerance_deg;
}

void freeze_grasp(WorldState& w, ObjectState& obj) {
  obj.held_by_agent = true;
  w.agent.held_object_id = obj.id;
  w.agent.held_offset = inverse(w.agent.ee_pose) * obj.pose;
  log_event(w, EventKind::kAttached, obj.id);
}

// Grasps the best-aligned graspable body when the gripper closes past the threshold.
void try_auto_attach(WorldState& w) {
  ObjectState* best = nullptr;
  double best_distance = std::numeric_limits<double>::infinity();
  const auto consider = [&](ObjectState& obj) {
    if (!obj.graspable) return;
    double distance = 0.0;
    double angle = 0.0;
    if (grasp_alignment_ok(w, obj, &distance, &angle) && distance < best_distance) {
      best = &obj;
      best_distance = distance;
    }
  };
  for (auto& [id, obj] : w.objects) consider(obj);
  for (auto& [id, c] : w.containers) consider(c.object);
  if (best != nullptr) freeze_grasp(w, *best);
}

void settle(WorldState& w, ObjectState& obj) {
  if (joint_for_attachment(w, obj.id) != nullptr) return;
  const double base_z = obj.pose.position.z - obj.half_extents.z;
  const double surface =
      support_height(w, obj.pose.position.xy(), base_z + w.params.support_slack_m, obj.id);
  const double gap = base_z - surface;
  const double yaw = yaw_of(obj.pose.orientation);
  if (tilt_deg(obj) > obj.upright_tolerance_deg || gap > w.params.drop_gap_m) {
    obj.pose.orientation = normalized(Quat::from_yaw(yaw) * Quat::from_axis_angle({1, 0, 0}, kPi / 2));
    obj.pose.position.z = surface + obj.half_extents.y;
    log_event(w, EventKind::kFell, obj.id, {}, gap);
    if (auto it = w.containers.find(obj.id); it != w.containers.end()) {
      chem::Mixture lost = std::move(it->second.contents);
      it->second.contents = chem::Mixture{};
      spill(w, std::move(lost), obj.id);
    }
    return;
  }
  obj.pose.orientation = Quat::from_yaw(yaw);
  obj.pose.position.z = surface + obj.half_extents.z;
}

void track_tilt(WorldState& w, ContainerState& c) {
  const double roll = roll_rad(c.object);
  const double threshold = deg_to_rad(w.params.tilt_event_deg);
  const int side = roll > threshold ? 1 : (roll < -threshold ? -1 : 0);
  if (side == 0 || side == c.last_tilt_side) return;
  log_event(w, side > 0 ? EventKind::kTiltLeft : EventKind::kTiltRight, c.object.id, {}, roll);
  if (side < 0 && c.last_tilt_side > 0) {
    ++c.shake_cycles;
    log_event(w, EventKind::kShakeCycle, c.object.id, {}, c.shake_cycles);
  }
  c.last_tilt_side = side;
}

void track_stir(WorldState& w, const ObjectState& rod) {
  const Vec3 tip = transform_point(rod.pose, {0, 0, -rod.half_extents.z});
  for (auto& [id, c] : w.containers) {
    if (c.object.held_by_agent) continue;
    const Vec3 axis_point = c.object.pose.position;
    const Vec2 rel = tip.xy() - axis_point.xy();
    const double r = norm(rel);
    const bool inside = r < c.mouth_radius_m && tip.z > base_center(c.object).z &&
                        tip.z < top_center(c.object).z;
    if (!inside) {
      c.stir_last_angle.reset();
      continue;
    }
    if (r < kMinStirRadius) continue;
    const double angle = std::atan2(rel.y, rel.x);
    if (c.stir_last_angle) c.stir_angle_rad += wrap_angle(angle - *c.stir_last_angle);
    c.stir_last_angle = angle;
  }
}

void heat_instruments(WorldState& w) {
  for (const auto& [jid, j] : w.joints) {
    if (j.role != JointRole::kButton || !j.activated || j.powers_object_id.empty()) continue;
    for (auto& [cid, c] : w.containers) {
      if (c.object.held_by_agent) continue;
      const ObjectState* support = resting_support(w, c.object);
      if (support == nullptr || support->id != j.powers_object_id) continue;
      const double t = c.contents.temperature_c() + w.params.heater_rate_c_per_s * w.dt_s;
      c.contents.set_temperature_c(std::min(t, kMaxTemperatureC));
    }
  }
}

bool circle_hits_box(Vec2 center, double radius, const ObjectState& obj) {
  const Quat inv = conjugate(Quat::from_yaw(yaw_of(obj.pose.orientation)));
  const Vec3 local = rotate(inv, Vec3{center.x, center.y, 0} - Vec3{obj.pose.position.x, obj.pose.position.y, 0});
  const double qx = std::clamp(local.x, -obj.half_extents.x, obj.half_extents.x);
  const double qy = std::clamp(local.y, -obj.half_extents.y, obj.half_extents.y);
  return std::hypot(local.x - qx, local.y - qy) < radius;
}

void check_base_collision(WorldState& w) {
  if (!w.agent.base_pose) return;
  const Vec2 center{w.agent.base_pose->x, w.agent.base_pose->y};
  std::string hit;
  const auto test = [&](const ObjectState& obj) {
    if (!hit.empty() || obj.held_by_agent) return;
    const double lo = obj.pose.position.z - obj.half_extents.z;
    const double hi = obj.pose.position.z + obj.half_extents.z;
    if (hi < w.params.obstacle_band_low_m || lo > w.params.obstacle_band_high_m) return;
    if (circle_hits_box(center, w.params.base_radius_m, obj)) hit = obj.id;
  };
  for (const auto& [id, obj] : w.objects) test(obj);
  for (const auto& [id, c] : w.containers) test(c.object);
  if (!hit.empty() && !w.agent.base_in_collision) log_event(w, EventKind::kBaseCollision, hit);
  w.agent.base_in_collision = !hit.empty();
}

void move_base(WorldState& w, const BaseVelocity& cmd) {
  if (!w.agent.base_pose) return;
  const BaseVelocity& lim = w.agent.max_base_speed;
  const double vx = std::clamp(cmd.vx, -lim.vx, lim.vx);
  const double vy = std::clamp(cmd.vy, -lim.vy, lim.vy);
  const double omega = std::clamp(cmd.omega, -lim.omega, lim.omega);
  if (vx == 0.0 && vy == 0.0 && omega == 0.0) return;
  BasePose& b = *w.agent.base_pose;
  const Pose before = base_frame(b);
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  b.x += (c * vx - s * vy) * w.dt_s;
  b.y += (s * vx + c * vy) * w.dt_s;
  b.yaw = wrap_angle(b.yaw + omega * w.dt_s);
  w.agent.ee_pose = base_frame(b) * (inverse(before) * w.agent.ee_pose);
}

void move_end_effector(WorldState& w, const AgentAction& a) {
  AgentState& ag = w.agent;
  const Vec3 v = clamp_norm(a.ee_linear, ag.max_ee_speed_mps);
  const Vec3 omega = clamp_norm(a.ee_angular, ag.max_ee_angular_speed);
  ag.ee_pose.position += v * w.dt_s;
  if (omega != Vec3{}) {
    ag.ee_pose.orientation = normalized(Quat::exp(omega * w.dt_s) * ag.ee_pose.orientation);
  }
  if (ag.base_pose) {
    const Vec2 base{ag.base_pose->x, ag.base_pose->y};
    const Vec2 d = ag.ee_pose.position.xy() - base;
    const double r = norm(d);
    if (r > w.params.reach_m) {
      const Vec2 clamped = base + d * (w.params.reach_m / r);
      ag.ee_pose.position.x = clamped.x;
      ag.ee_pose.position.y = clamped.y;
    }
  }
}

void move_gripper(WorldState& w, const std::optional<double>& command) {
  AgentState& ag = w.agent;
  if (command) ag.gripper_command_m = std::clamp(*command, 0.0, w.params.max_aperture_m);
  const double step = w.params.gripper_speed_mps * w.dt_s;
  const double delta = std::clamp(ag.gripper_command_m - ag.gripper_aperture_m, -step, step);
  ag.gripper_aperture_m = std::clamp(ag.gripper_aperture_m + delta, 0.0, w.params.max_aperture_m);
}

void update_held(WorldState& w) {
  if (!w.agent.held_object_id) return;
  ObjectState* obj = find_body(w, *w.agent.held_object_id);
  if (obj == nullptr) {
    w.agent.held_object_id.reset();
    return;
  }
  if (JointState* j = joint_for_attachment(w, obj->id)) {
    drive_held_joint(w, *j, *obj);
    return;
  }
  obj->pose = w.agent.ee_pose * w.agent.held_offset;
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kAttached: return "attached";
    case EventKind::kReleased: return "released";
    case EventKind::kFell: return "fell";
    case EventKind::kPour: return "pour";
    case EventKind::kSpill: return "spill";
    case EventKind::kReaction: return "reaction";
    case EventKind::kTiltLeft: return "tilt_left";
    case EventKind::kTiltRight: return "tilt_right";
    case EventKind::kShakeCycle: return "shake_cycle";
    case EventKind::kButtonActivated: return "button_activated";
    case EventKind::kBaseCollision: return "base_collision";
  }
  return "attached";
}

EventKind event_kind_from_string(std::string_view text) {
  for (int k = 0; k <= static_cast<int>(EventKind::kBaseCollision); ++k) {
    if (to_string(static_cast<EventKind>(k)) == text) return static_cast<EventKind>(k);
  }
  throw Error(ErrorCode::kSchemaError, "unknown event kind '" + std::string(text) + "'");
}

ObjectState* find_body(WorldState& world, std::string_view id) {
  if (auto it = world.objects.find(std::string(id)); it != world.objects.end()) return &it->second;
  if (auto it = world.containers.find(std::string(id)); it != world.containers.end()) {
    return &it->second.object;
  }
  return nullptr;
}

const ObjectState* find_body(const WorldState& world, std::string_view id) {
  return find_body(const_cast<WorldState&>(world), id);
}

const ObjectState& body_at(const WorldState& world, std::string_view id) {
  const ObjectState* obj = find_body(world, id);
  if (obj == nullptr) throw Error(ErrorCode::kUnknownObject, "'" + std::string(id) + "'");
  return *obj;
}

ContainerState& container_at(WorldState& world, std::string_view id) {
  const auto it = world.containers.find(std::string(id));
  if (it == world.containers.end()) {
    throw Error(ErrorCode::kUnknownObject, "no container '" + std::string(id) + "'");
  }
  return it->second;
}

const ContainerState& container_at(const WorldState& world, std::string_view id) {
  return container_at(const_cast<WorldState&>(world), id);
}

bool has_body(const WorldState& world, std::string_view id) { return find_body(world, id) != nullptr; }

void remove_body(WorldState& world, std::string_view id) {
  if (world.agent.held_object_id == id) world.agent.held_object_id.reset();
  world.objects.erase(std::string(id));
  world.containers.erase(std::string(id));
}

Vec3 grasp_point(const ObjectState& obj) { return transform_point(obj.pose, obj.grasp_point_local); }
Vec3 top_center(const ObjectState& obj) { return transform_point(obj.pose, {0, 0, obj.half_extents.z}); }
Vec3 base_center(const ObjectState& obj) { return transform_point(obj.pose, {0, 0, -obj.half_extents.z}); }

Vec3 pour_lip(const ContainerState& c) {
  const Vec3 mouth = top_center(c.object);
  const Vec3 n = rotate(c.object.pose.orientation, {0, 0, 1});
  Vec3 down = Vec3{0, 0, -1} - n * dot(Vec3{0, 0, -1}, n);
  const double len = norm(down);
  if (len < 1e-12) return mouth;
  return mouth + down * (c.mouth_radius_m / len);
}

double tilt_deg(const ObjectState& obj) { return rad_to_deg(tilt_of(obj.pose.orientation)); }
bool is_upright(const ObjectState& obj) { return tilt_deg(obj) <= obj.upright_tolerance_deg; }

double roll_rad(const ObjectState& obj) {
  const Vec3 up = rotate(obj.pose.orientation, {0, 0, 1});
  return std::asin(std::clamp(-up.y, -1.0, 1.0));
}

double liquid_volume_ml(const WorldState& world, const ContainerState& c) {
  return mixture_volume(world, c.contents);
}

double contents_mass_g(const WorldState& world, const ContainerState& c) {
  return mixture_mass(world, c.contents);
}

double total_liquid_mass_g(const WorldState& world) {
  double total = world.spilled_g;
  for (const auto& [id, c] : world.containers) total += contents_mass_g(world, c);
  return total;
}

double total_liquid_volume_ml(const WorldState& world) {
  double total = world.spilled_ml;
  for (const auto& [id, c] : world.containers) total += liquid_volume_ml(world, c);
  return total;
}

bool footprint_contains(const ObjectState& obj, Vec2 xy, double margin) {
  const Quat inv = conjugate(Quat::from_yaw(yaw_of(obj.pose.orientation)));
  const Vec3 local = rotate(inv, Vec3{xy.x - obj.pose.position.x, xy.y - obj.pose.position.y, 0});
  return std::abs(local.x) <= obj.half_extents.x + margin && std::abs(local.y) <= obj.half_extents.y + margin;
}

double support_height(const WorldState& world, Vec2 xy, double max_z, std::string_view exclude) {
  double best = 0.0;
  const auto consider = [&](const ObjectState& obj) {
    if (!obj.support_surface || obj.held_by_agent || obj.id == exclude) return;
    const double top = obj.pose.position.z + obj.half_extents.z;
    if (top <= max_z && top > best && footprint_contains(obj, xy)) best = top;
  };
  for (const auto& [id, obj] : world.objects) consider(obj);
  for (const auto& [id, c] : world.containers) consider(c.object);
  return best;
}

const ObjectState* resting_support(const WorldState& world, const ObjectState& obj) {
  const double base_z = base_center(obj).z;
  const ObjectState* best = nullptr;
  const auto consider = [&](const ObjectState& s) {
    if (!s.support_surface || s.id == obj.id) return;
    const double top = s.pose.position.z + s.half_extents.z;
    if (std::abs(top - base_z) > kRestingSlack || !footprint_contains(s, obj.pose.position.xy())) return;
    if (best == nullptr || top > best->pose.position.z + best->half_extents.z) best = &s;
  };
  for (const auto& [id, s] : world.objects) consider(s);
  for (const auto& [id, c] : world.containers) consider(c.object);
  return best;
}

Pose joint_attachment_pose(const JointState& joint, double value) {
  const Pose& rest = joint.attachment_rest;
  if (joint.kind == JointKind::kPrismatic) {
    return {rest.position + normalized(joint.axis) * value, rest.orientation};
  }
  const Quat r = Quat::from_axis_angle(joint.axis, value);
  return {joint.origin + rotate(r, rest.position - joint.origin), normalized(r * rest.orientation)};
}

std::size_t count_events(const WorldState& world, EventKind kind, std::string_view subject) {
  return static_cast<std::size_t>(std::count_if(
      world.event_log.begin(), world.event_log.end(),
      [&](const WorldEvent& e) { return e.kind == kind && (subject.empty() || e.subject == subject); }));
}

void attach_in_place(WorldState& world, std::string_view object_id) {
  ObjectState* obj = find_body(world, object_id);
  if (obj == nullptr) throw Error(ErrorCode::kUnknownObject, "'" + std::string(object_id) + "'");
  if (world.agent.held_object_id) {
    throw Error(ErrorCode::kAlreadyHolding, "agent already holds '" + *world.agent.held_object_id + "'");
  }
  if (!obj->graspable) throw Error(ErrorCode::kNotGraspable, "'" + obj->id + "'");
  const AgentState& ag = world.agent;
  const bool closing = ag.gripper_command_m < ag.gripper_aperture_m ||
                       ag.gripper_aperture_m < world.params.grasp_threshold_m;
  if (!closing) throw Error(ErrorCode::kInvalidAction, "gripper is not closing");
  double distance = 0.0;
  double angle = 0.0;
  grasp_alignment_ok(world, *obj, &distance, &angle);
  if (distance > world.params.grasp_tolerance_m) {
    throw Error(ErrorCode::kOutOfReach, "grasp point is " + std::to_string(distance) + " m away");
  }
  if (angle > world.params.grasp_tolerance_deg) {
    throw Error(ErrorCode::kMisaligned, "tool axis is " + std::to_string(angle) + " deg off");
  }
  freeze_grasp(world, *obj);
}

WorldState attach(WorldState world, std::string_view object_id) {
  attach_in_place(world, object_id);
  return world;
}

void release_in_place(WorldState& world) {
  if (!world.agent.held_object_id) throw Error(ErrorCode::kNotGrasping, "nothing held");
  const std::string id = *world.agent.held_object_id;
  world.agent.held_object_id.reset();
  world.agent.held_offset = Pose{};
  ObjectState* obj = find_body(world, id);
  if (obj == nullptr) return;
  obj->held_by_agent = false;
  log_event(world, EventKind::kReleased, id);
  settle(world, *obj);
}

void pour_tick_in_place(WorldState& world, std::string_view source_id, double dt) {
  ContainerState& src = container_at(world, source_id);
  if (!src.object.held_by_agent) {
    throw Error(ErrorCode::kNotGrasping, "pour source '" + src.object.id + "' is not held");
  }
  const double tilt = tilt_of(src.object.pose.orientation);
  const double onset = deg_to_rad(world.params.pour_onset_deg);
  if (tilt <= onset) return;
  const double volume = liquid_volume_ml(world, src);
  if (volume <= 0.0) return;
  const double factor = std::min(1.0, (tilt - onset) / (kPi / 2 - onset));
  const double amount = world.params.pour_rate_ml_per_s * dt * factor;
  chem::Mixture stream = src.contents.take_fraction(std::min(1.0, amount / volume));
  const double stream_ml = mixture_volume(world, stream);

  const Vec3 lip = pour_lip(src);
  ContainerState* target = nullptr;
  double target_mouth_z = -std::numeric_limits<double>::infinity();
  for (auto& [id, c] : world.containers) {
    if (id == src.object.id || c.object.held_by_agent) continue;
    const Vec3 mouth = top_center(c.object);
    if (mouth.z >= lip.z || norm(mouth.xy() - lip.xy()) > c.mouth_radius_m) continue;
    if (mouth.z > target_mouth_z) {
      target = &c;
      target_mouth_z = mouth.z;
    }
  }

  if (target != nullptr && stream_ml > 0.0) {
    const double space = std::max(0.0, target->capacity_ml - liquid_volume_ml(world, *target));
    chem::Mixture caught = stream.take_fraction(std::min(1.0, space / stream_ml));
    const double caught_ml = mixture_volume(world, caught);
    target->contents.merge(caught);
    log_event(world, EventKind::kPour, src.object.id, target->object.id, caught_ml);
    const chem::Chemistry& chemistry = chemistry_of(world);
    chem::ResolveResult reacted =
        chem::resolve_reactions(target->contents, chemistry.rules, chemistry.substances);
    target->contents = std::move(reacted.mixture);
    for (const chem::ReactionOutcome& outcome : reacted.outcomes) {
      log_event(world, EventKind::kReaction, target->object.id, outcome.rule_id);
    }
  }
  spill(world, std::move(stream), src.object.id);
}

WorldState pour_tick(WorldState world, std::string_view source_id, double dt) {
  pour_tick_in_place(world, source_id, dt);
  return world;
}

void advance(WorldState& world, const AgentAction& action) {
  if (!is_finite(action)) throw Error(ErrorCode::kInvalidAction, "non-finite action component");
  ++world.tick;
  const double before_aperture = world.agent.gripper_aperture_m;

  move_base(world, action.base);
  move_end_effector(world, action);
  update_buttons(world);
  update_held(world);
  move_gripper(world, action.gripper);

  const double threshold = world.params.grasp_threshold_m;
  const double after_aperture = world.agent.gripper_aperture_m;
  if (!world.agent.held_object_id && before_aperture >= threshold && after_aperture < threshold) {
    try_auto_attach(world);
  } else if (world.agent.held_object_id && after_aperture >= threshold) {
    release_in_place(world);
  }

  if (world.agent.held_object_id) {
    const std::string held = *world.agent.held_object_id;
    if (auto it = world.containers.find(held); it != world.containers.end()) {
      pour_tick_in_place(world, held, world.dt_s);
      track_tilt(world, it->second);
    } else if (const ObjectState* obj = find_body(world, held); obj && obj->category == "glass_rod") {
      track_stir(world, *obj);
    }
  }
  heat_instruments(world);
  check_base_collision(world);
}

WorldState step(WorldState world, const AgentAction& action) {
  advance(world, action);
  return world;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

Json object_to_json(const ObjectState& o) {
  return Json{{"id", o.id},
              {"category", o.category},
              {"pose", o.pose},
              {"half_extents", o.half_extents},
              {"graspable", o.graspable},
              {"held_by_agent", o.held_by_agent},
              {"upright_tolerance_deg", o.upright_tolerance_deg},
              {"support_surface", o.support_surface},
              {"grasp_point_local", o.grasp_point_local},
              {"grasp_axis_local", o.grasp_axis_local},
              {"tags", o.tags}};
}

ObjectState object_from_json(const Json& j) {
  ObjectState o;
  o.id = j.at("id").get<std::string>();
  o.category = j.at("category").get<std::string>();
  o.pose = j.at("pose").get<Pose>();
  o.half_extents = j.at("half_extents").get<Vec3>();
  o.graspable = j.at("graspable").get<bool>();
  o.held_by_agent = j.at("held_by_agent").get<bool>();
  o.upright_tolerance_deg = j.at("upright_tolerance_deg").get<double>();
  o.support_surface = j.at("support_surface").get<bool>();
  o.grasp_point_local = j.at("grasp_point_local").get<Vec3>();
  o.grasp_axis_local = j.at("grasp_axis_local").get<Vec3>();
  o.tags = j.at("tags").get<std::vector<std::string>>();
  if (!(o.half_extents.x > 0 && o.half_extents.y > 0 && o.half_extents.z > 0)) {
    throw Error(ErrorCode::kSchemaError, o.id + ": half extents must be positive");
  }
  return o;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
std::optional<double> optional_number(const Json& j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

std::string_view to_string(JointKind k) { return k == JointKind::kRevolute ? "revolute" : "prismatic"; }
std::string_view to_string(JointRole r) { return r == JointRole::kHandle ? "handle" : "button"; }

}  // namespace

void to_json(Json& j, const AgentAction& a) {
  j = Json{{"ee_linear", a.ee_linear},
           {"ee_angular", a.ee_angular},
           {"gripper", optional_number(a.gripper)},
           {"base", Json::array({a.base.vx, a.base.vy, a.base.omega})}};
}

void from_json(const Json& j, AgentAction& a) {
  a.ee_linear = j.at("ee_linear").get<Vec3>();
  a.ee_angular = j.at("ee_angular").get<Vec3>();
  a.gripper = optional_number(j.at("gripper"));
  const Json& b = j.at("base");
  a.base = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>()};
}

void to_json(Json& j, const WorldEvent& e) {
  j = Json{{"tick", e.tick}, {"kind", to_string(e.kind)}, {"subject", e.subject},
           {"other", e.other}, {"value", e.value}};
}

void from_json(const Json& j, WorldEvent& e) {
  e.tick = j.at("tick").get<std::int64_t>();
  e.kind = event_kind_from_string(j.at("kind").get<std::string>());
  e.subject = j.at("subject").get<std::string>();
  e.other = j.at("other").get<std::string>();
  e.value = j.at("value").get<double>();
}

Json world_to_json(const WorldState& w) {
  Json objects = Json::array();
  for (const auto& [id, o] : w.objects) objects.push_back(object_to_json(o));
  Json containers = Json::array();
  for (const auto& [id, c] : w.containers) {
    containers.push_back({{"object", object_to_json(c.object)},
                          {"capacity_ml", c.capacity_ml},
                          {"contents", c.contents},
                          {"mouth_radius_m", c.mouth_radius_m},
                          {"rim_height_m", c.rim_height_m},
                          {"last_tilt_side", c.last_tilt_side},
                          {"shake_cycles", c.shake_cycles},
                          {"stir_angle_rad", c.stir_angle_rad},
                          {"stir_last_angle", optional_number(c.stir_last_angle)}});
  }
  Json joints = Json::array();
  for (const auto& [id, jt] : w.joints) {
    joints.push_back({{"id", jt.id},
                      {"kind", to_string(jt.kind)},
                      {"role", to_string(jt.role)},
                      {"value", jt.value},
                      {"range", Json::array({jt.range_min, jt.range_max})},
                      {"attached_object_id", jt.attached_object_id},
                      {"origin", jt.origin},
                      {"axis", jt.axis},
                      {"attachment_rest", jt.attachment_rest},
                      {"handle_turn_rad", jt.handle_turn_rad},
                      {"handle_angle_rad", jt.handle_angle_rad},
                      {"activated", jt.activated},
                      {"activation_threshold", jt.activation_threshold},
                      {"powers_object_id", jt.powers_object_id}});
  }
  const AgentState& a = w.agent;
  Json base = nullptr;
  if (a.base_pose) base = Json::array({a.base_pose->x, a.base_pose->y, a.base_pose->yaw});
  Json agent{{"ee_pose", a.ee_pose},
             {"gripper_aperture_m", a.gripper_aperture_m},
             {"gripper_command_m", a.gripper_command_m},
             {"held_object_id", a.held_object_id ? Json(*a.held_object_id) : Json(nullptr)},
             {"held_offset", a.held_offset},
             {"base_pose", base},
             {"max_ee_speed_mps", a.max_ee_speed_mps},
             {"max_ee_angular_speed", a.max_ee_angular_speed},
             {"max_base_speed", Json::array({a.max_base_speed.vx, a.max_base_speed.vy, a.max_base_speed.omega})},
             {"base_in_collision", a.base_in_collision}};
  const WorldParams& p = w.params;
  Json params{{"max_aperture_m", p.max_aperture_m},
              {"gripper_speed_mps", p.gripper_speed_mps},
              {"grasp_threshold_m", p.grasp_threshold_m},
              {"grasp_tolerance_m", p.grasp_tolerance_m},
              {"grasp_tolerance_deg", p.grasp_tolerance_deg},
              {"pour_onset_deg", p.pour_onset_deg},
              {"pour_rate_ml_per_s", p.pour_rate_ml_per_s},
              {"drop_gap_m", p.drop_gap_m},
              {"support_slack_m", p.support_slack_m},
              {"tilt_event_deg", p.tilt_event_deg},
              {"reach_m", p.reach_m},
              {"base_radius_m", p.base_radius_m},
              {"obstacle_band_low_m", p.obstacle_band_low_m},
              {"obstacle_band_high_m", p.obstacle_band_high_m},
              {"heater_rate_c_per_s", p.heater_rate_c_per_s}};
  return Json{{"schema_version", kWorldSchemaVersion},
              {"tick", w.tick},
              {"dt_s", w.dt_s},
              {"rng_seed", w.rng_seed},
              {"objects", objects},
              {"containers", containers},
              {"joints", joints},
              {"agent", agent},
              {"params", params},
              {"event_log", w.event_log},
              {"spilled_ml", w.spilled_ml},
              {"spilled_g", w.spilled_g}};
}

WorldState world_from_json(const Json& doc, std::shared_ptr<const chem::Chemistry> chemistry) {
  try {
    if (doc.at("schema_version").get<int>() != kWorldSchemaVersion) {
      throw Error(ErrorCode::kSchemaError, "unsupported world schema version");
    }
    WorldState w;
    w.chemistry = std::move(chemistry);
    w.tick = doc.at("tick").get<std::int64_t>();
    w.dt_s = doc.at("dt_s").get<double>();
    w.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    for (const Json& o : doc.at("objects")) {
      ObjectState obj = object_from_json(o);
      w.objects.emplace(obj.id, std::move(obj));
    }
    for (const Json& cj : doc.at("containers")) {
      ContainerState c;
      c.object = object_from_json(cj.at("object"));
      c.capacity_ml = cj.at("capacity_ml").get<double>();
      c.contents = cj.at("contents").get<chem::Mixture>();
      c.mouth_radius_m = cj.at("mouth_radius_m").get<double>();
      c.rim_height_m = cj.at("rim_height_m").get<double>();
      c.last_tilt_side = cj.at("last_tilt_side").get<int>();
      c.shake_cycles = cj.at("shake_cycles").get<int>();
      c.stir_angle_rad = cj.at("stir_angle_rad").get<double>();
      c.stir_last_angle = optional_number(cj.at("stir_last_angle"));
      w.containers.emplace(c.object.id, std::move(c));
    }
    for (const Json& jj : doc.at("joints")) {
      JointState jt;
      jt.id = jj.at("id").get<std::string>();
      jt.kind = jj.at("kind").get<std::string>() == "revolute" ? JointKind::kRevolute : JointKind::kPrismatic;
      jt.role = jj.at("role").get<std::string>() == "handle" ? JointRole::kHandle : JointRole::kButton;
      jt.value = jj.at("value").get<double>();
      jt.range_min = jj.at("range").at(0).get<double>();
      jt.range_max = jj.at("range").at(1).get<double>();
      jt.attached_object_id = jj.at("attached_object_id").get<std::string>();
      jt.origin = jj.at("origin").get<Vec3>();
      jt.axis = jj.at("axis").get<Vec3>();
      jt.attachment_rest = jj.at("attachment_rest").get<Pose>();
      jt.handle_turn_rad = jj.at("handle_turn_rad").get<double>();
      jt.handle_angle_rad = jj.at("handle_angle_rad").get<double>();
      jt.activated = jj.at("activated").get<bool>();
      jt.activation_threshold = jj.at("activation_threshold").get<double>();
      jt.powers_object_id = jj.at("powers_object_id").get<std::string>();
      w.joints.emplace(jt.id, std::move(jt));
    }
    const Json& a = doc.at("agent");
    w.agent.ee_pose = a.at("ee_pose").get<Pose>();
    w.agent.gripper_aperture_m = a.at("gripper_aperture_m").get<double>();
    w.agent.gripper_command_m = a.at("gripper_command_m").get<double>();
    if (!a.at("held_object_id").is_null()) w.agent.held_object_id = a.at("held_object_id").get<std::string>();
    w.agent.held_offset = a.at("held_offset").get<Pose>();
    if (!a.at("base_pose").is_null()) {
      const Json& b = a.at("base_pose");
      w.agent.base_pose = BasePose{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>()};
    }
    w.agent.max_ee_speed_mps = a.at("max_ee_speed_mps").get<double>();
    w.agent.max_ee_angular_speed = a.at("max_ee_angular_speed").get<double>();
    const Json& mb = a.at("max_base_speed");
    w.agent.max_base_speed = {mb.at(0).get<double>(), mb.at(1).get<double>(), mb.at(2).get<double>()};
    w.agent.base_in_collision = a.at("base_in_collision").get<bool>();
    const Json& p = doc.at("params");
    WorldParams& wp = w.params;
    wp.max_aperture_m = p.at("max_aperture_m").get<double>();
    wp.gripper_speed_mps = p.at("gripper_speed_mps").get<double>();
    wp.grasp_threshold_m = p.at("grasp_threshold_m").get<double>();
    wp.grasp_tolerance_m = p.at("grasp_tolerance_m").get<double>();
    wp.grasp_tolerance_deg = p.at("grasp_tolerance_deg").get<double>();
    wp.pour_onset_deg = p.at("pour_onset_deg").get<double>();
    wp.pour_rate_ml_per_s = p.at("pour_rate_ml_per_s").get<double>();
    wp.drop_gap_m = p.at("drop_gap_m").get<double>();
    wp.support_slack_m = p.at("support_slack_m").get<double>();
    wp.tilt_event_deg = p.at("tilt_event_deg").get<double>();
    wp.reach_m = p.at("reach_m").get<double>();
    wp.base_radius_m = p.at("base_radius_m").get<double>();
    wp.obstacle_band_low_m = p.at("obstacle_band_low_m").get<double>();
    wp.obstacle_band_high_m = p.at("obstacle_band_high_m").get<double>();
    wp.heater_rate_c_per_s = p.at("heater_rate_c_per_s").get<double>();
    w.event_log = doc.at("event_log").get<std::vector<WorldEvent>>();
    w.spilled_ml = doc.at("spilled_ml").get<double>();
    w.spilled_g = doc.at("spilled_g").get<double>();
    return w;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("world snapshot: ") + e.what());
  }
}

}  // namespace labsim::world
