#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labsim/core/json.hpp"
#include "labsim/world/types.hpp"

namespace labsim::bench {

enum class ConditionKind {
  kHeld,              // subject is in the gripper
  kNotHeld,           // subject is not in the gripper
  kMinBaseHeight,     // subject base z >= value
  kUpright,           // subject tilt <= value degrees
  kNearXY,            // subject xy within value of point
  kNearPoint,         // subject position within value of point
  kRestsOn,           // subject rests on support `other`
  kJointAtLeast,      // joint subject value >= value
  kJointAtMost,       // joint subject value <= value
  kButtonActive,      // button joint subject has fired
  kVolumeAtLeast,     // container subject holds >= value ml
  kVolumeAtMost,      // container subject holds <= value ml
  kSubstanceAtLeast,  // container subject holds >= value mol of `other`
  kSpillAtMost,       // total spilled volume <= value ml
  kNoFall,            // no body has fallen
  kShakeCycles,       // container subject counted >= value shake cycles
  kStirTurns,         // container subject stirred >= value revolutions
  kTipAbove,          // rod subject tip at least value above the mouth of `other`
  kEeAwayFrom,        // end-effector at least value from subject's grasp point
  kNoBaseCollision,   // the mobile base never touched an obstacle
  kBaseNear,          // base xy within value of point
  kBaseFacing,        // base heading within value radians of the bearing to subject
  kBaseHeading,       // base heading within value radians of the direction point
};

std::string_view to_string(ConditionKind kind);
ConditionKind condition_kind_from_string(std::string_view text);

struct Condition {
  ConditionKind kind = ConditionKind::kNoFall;
  std::string subject;
  std::string other;
  double value = 0.0;  // threshold or tolerance
  Vec3 point{};

  friend bool operator==(const Condition&, const Condition&) = default;
};

bool satisfied(const Condition& c, const world::WorldState& w);
std::string describe(const Condition& c);

// Conjunction of conditions; pure and linear in the state size.
struct GoalPredicate {
  std::vector<Condition> all;

  bool holds(const world::WorldState& w) const;
  // First condition that fails, if any.
  std::optional<Condition> first_violation(const world::WorldState& w) const;

  friend bool operator==(const GoalPredicate&, const GoalPredicate&) = default;
};

void to_json(Json& j, const Condition& c);
void from_json(const Json& j, Condition& c);
void to_json(Json& j, const GoalPredicate& g);
void from_json(const Json& j, GoalPredicate& g);

}  // namespace labsim::bench
