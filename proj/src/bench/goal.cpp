#include "labsim/bench/goal.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "labsim/core/error.hpp"
#include "labsim/world/world.hpp"

namespace labsim::bench {

using world::WorldState;

namespace {

constexpr std::array<std::pair<ConditionKind, std::string_view>, 23> kNames{{
    {ConditionKind::kHeld, "held"},
    {ConditionKind::kNotHeld, "not_held"},
    {ConditionKind::kMinBaseHeight, "min_base_height"},
    {ConditionKind::kUpright, "upright"},
    {ConditionKind::kNearXY, "near_xy"},
    {ConditionKind::kNearPoint, "near_point"},
    {ConditionKind::kRestsOn, "rests_on"},
    {ConditionKind::kJointAtLeast, "joint_at_least"},
    {ConditionKind::kJointAtMost, "joint_at_most"},
    {ConditionKind::kButtonActive, "button_active"},
    {ConditionKind::kVolumeAtLeast, "volume_at_least"},
    {ConditionKind::kVolumeAtMost, "volume_at_most"},
    {ConditionKind::kSubstanceAtLeast, "substance_at_least"},
    {ConditionKind::kSpillAtMost, "spill_at_most"},
    {ConditionKind::kNoFall, "no_fall"},
    {ConditionKind::kShakeCycles, "shake_cycles"},
    {ConditionKind::kStirTurns, "stir_turns"},
    {ConditionKind::kTipAbove, "tip_above"},
    {ConditionKind::kEeAwayFrom, "ee_away_from"},
    {ConditionKind::kNoBaseCollision, "no_base_collision"},
    {ConditionKind::kBaseNear, "base_near"},
    {ConditionKind::kBaseFacing, "base_facing"},
    {ConditionKind::kBaseHeading, "base_heading"},
}};

bool held(const WorldState& w, const std::string& id) { return w.agent.held_object_id == id; }

const world::ContainerState* container(const WorldState& w, const std::string& id) {
  const auto it = w.containers.find(id);
  return it == w.containers.end() ? nullptr : &it->second;
}

const world::JointState* joint(const WorldState& w, const std::string& id) {
  const auto it = w.joints.find(id);
  return it == w.joints.end() ? nullptr : &it->second;
}

}  // namespace

std::string_view to_string(ConditionKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ConditionKind condition_kind_from_string(std::string_view text) {
  for (const auto& [k, name] : kNames) {
    if (name == text) return k;
  }
  throw Error(ErrorCode::kSchemaError, "unknown condition '" + std::string(text) + "'");
}

bool satisfied(const Condition& c, const WorldState& w) {
  const world::ObjectState* body = c.subject.empty() ? nullptr : world::find_body(w, c.subject);
  switch (c.kind) {
    case ConditionKind::kHeld: return held(w, c.subject);
    case ConditionKind::kNotHeld: return !held(w, c.subject);
    case ConditionKind::kMinBaseHeight: return body && world::base_center(*body).z >= c.value;
    case ConditionKind::kUpright: return body && world::tilt_deg(*body) <= c.value;
    case ConditionKind::kNearXY:
      return body && norm(body->pose.position.xy() - c.point.xy()) <= c.value;
    case ConditionKind::kNearPoint: return body && norm(body->pose.position - c.point) <= c.value;
    case ConditionKind::kRestsOn: {
      if (!body || body->held_by_agent) return false;
      const world::ObjectState* support = world::resting_support(w, *body);
      return support && support->id == c.other;
    }
    case ConditionKind::kJointAtLeast: {
      const world::JointState* j = joint(w, c.subject);
      return j && j->value >= c.value;
    }
    case ConditionKind::kJointAtMost: {
      const world::JointState* j = joint(w, c.subject);
      return j && j->value <= c.value;
    }
    case ConditionKind::kButtonActive: {
      const world::JointState* j = joint(w, c.subject);
      return j && j->activated;
    }
    case ConditionKind::kVolumeAtLeast: {
      const world::ContainerState* k = container(w, c.subject);
      return k && world::liquid_volume_ml(w, *k) >= c.value;
    }
    case ConditionKind::kVolumeAtMost: {
      const world::ContainerState* k = container(w, c.subject);
      return k && world::liquid_volume_ml(w, *k) <= c.value;
    }
    case ConditionKind::kSubstanceAtLeast: {
      const world::ContainerState* k = container(w, c.subject);
      return k && k->contents.amount_of(c.other) >= c.value;
    }
    case ConditionKind::kSpillAtMost: return w.spilled_ml <= c.value;
    case ConditionKind::kNoFall: return world::count_events(w, world::EventKind::kFell) == 0;
    case ConditionKind::kShakeCycles: {
      const world::ContainerState* k = container(w, c.subject);
      return k && k->shake_cycles >= c.value;
    }
    case ConditionKind::kStirTurns: {
      const world::ContainerState* k = container(w, c.subject);
      return k && std::abs(k->stir_angle_rad) / (2.0 * kPi) >= c.value;
    }
    case ConditionKind::kTipAbove: {
      const world::ObjectState* vessel = world::find_body(w, c.other);
      if (!body || !vessel) return false;
      const Vec3 tip = transform_point(body->pose, {0, 0, -body->half_extents.z});
      return tip.z >= world::top_center(*vessel).z + c.value;
    }
    case ConditionKind::kEeAwayFrom:
      return body && norm(w.agent.ee_pose.position - world::grasp_point(*body)) >= c.value;
    case ConditionKind::kNoBaseCollision: return world::count_events(w, world::EventKind::kBaseCollision) == 0;
    case ConditionKind::kBaseNear: {
      if (!w.agent.base_pose) return false;
      return std::hypot(w.agent.base_pose->x - c.point.x, w.agent.base_pose->y - c.point.y) <= c.value;
    }
    case ConditionKind::kBaseFacing: {
      if (!w.agent.base_pose || !body) return false;
      const world::BasePose& b = *w.agent.base_pose;
      const double bearing = std::atan2(body->pose.position.y - b.y, body->pose.position.x - b.x);
      return std::abs(wrap_angle(bearing - b.yaw)) <= c.value;
    }
    case ConditionKind::kBaseHeading: {
      if (!w.agent.base_pose) return false;
      const double heading = std::atan2(c.point.y, c.point.x);
      return std::abs(wrap_angle(heading - w.agent.base_pose->yaw)) <= c.value;
    }
  }
  return false;
}

std::string describe(const Condition& c) {
  std::ostringstream out;
  out << to_string(c.kind);
  if (!c.subject.empty()) out << "(" << c.subject << (c.other.empty() ? "" : ", " + c.other) << ")";
  out << " " << c.value;
  return out.str();
}

bool GoalPredicate::holds(const WorldState& w) const {
  for (const Condition& c : all) {
    if (!satisfied(c, w)) return false;
  }
  return true;
}

std::optional<Condition> GoalPredicate::first_violation(const WorldState& w) const {
  for (const Condition& c : all) {
    if (!satisfied(c, w)) return c;
  }
  return std::nullopt;
}

void to_json(Json& j, const Condition& c) {
  j = Json{{"kind", to_string(c.kind)}, {"value", c.value}};
  if (!c.subject.empty()) j["subject"] = c.subject;
  if (!c.other.empty()) j["other"] = c.other;
  if (c.point != Vec3{}) j["point"] = c.point;
}

void from_json(const Json& j, Condition& c) {
  try {
    c = Condition{};
    c.kind = condition_kind_from_string(j.at("kind").get<std::string>());
    c.value = j.at("value").get<double>();
    c.subject = j.value("subject", "");
    c.other = j.value("other", "");
    if (j.contains("point")) c.point = j.at("point").get<Vec3>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("condition: ") + e.what());
  }
}

void to_json(Json& j, const GoalPredicate& g) { j = g.all; }
void from_json(const Json& j, GoalPredicate& g) { g.all = j.get<std::vector<Condition>>(); }

}  // namespace labsim::bench
