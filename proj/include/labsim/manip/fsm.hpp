#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "labsim/core/json.hpp"
#include "labsim/world/types.hpp"

namespace labsim::manip {

enum class ActionKind {
  kPick,
  kPour,
  kPlace,
  kPress,
  kShake,
  kStir,
  kOpenDoor,
  kCloseDoor,
  kOpenDrawer,
  kCloseDrawer,
};

std::string_view to_string(ActionKind kind);
ActionKind action_kind_from_string(std::string_view text);

// Ordered phase labels; the last phase of every action is terminal.
std::span<const std::string_view> phase_labels(ActionKind kind);
inline int phase_count(ActionKind kind) { return static_cast<int>(phase_labels(kind).size()); }

inline constexpr double kPositionToleranceM = 0.01;
inline constexpr double kOrientationToleranceRad = deg_to_rad(5.0);
inline constexpr double kServoGain = 4.0;  // 1/s
inline constexpr double kServoSpeedMps = 0.4;
inline constexpr double kServoAngularRadPerS = 1.5;
inline constexpr int kDefaultPhaseBudgetTicks = 600;

struct ActionParams {
  ActionKind kind = ActionKind::kPick;
  std::string object_id;  // manipulated body: picked, poured, placed, shaken, or the stir rod
  std::string target_id;  // pour target, place support, stirred container
  std::string joint_id;   // button or articulated joint
  std::optional<Vec2> place_xy;
  std::optional<double> joint_target;  // open target; range_max when absent

  double approach_height_m = 0.15;
  double pre_grasp_height_m = 0.03;
  double lift_height_m = 0.25;
  double place_clearance_m = 0.005;
  double retract_height_m = 0.12;
  double retreat_m = 0.10;          // open actions back off along -tool z after release
  double close_retreat_m = 0.0;     // close actions stay put unless set
  double pour_tilt_deg = 100.0;
  int pour_min_ticks = 30;
  double shake_tilt_deg = 25.0;
  int shake_half_cycle_ticks = 30;
  double stir_depth_fraction = 0.6;
  double stir_radius_fraction = 0.5;
  double stir_revolutions = 2.0;
  int stir_ticks = 120;
  double press_standoff_m = 0.05;
  double press_depth_m = 0.01;
  double revolute_step_rad = deg_to_rad(1.0);
  double prismatic_step_m = 0.005;
  double revolute_verify_rad = deg_to_rad(0.5);
  double prismatic_verify_m = 0.002;
  int dwell_ticks = 15;
  int phase_budget_ticks = kDefaultPhaseBudgetTicks;

  friend bool operator==(const ActionParams&, const ActionParams&) = default;
};

ActionParams pick(std::string object_id);
ActionParams pour(std::string source_id, std::string target_id);
ActionParams place(std::string object_id, std::string support_id, std::optional<Vec2> xy = std::nullopt);
ActionParams press(std::string joint_id);
ActionParams shake(std::string container_id);
ActionParams stir(std::string rod_id, std::string container_id);
ActionParams open_door(std::string joint_id, std::optional<double> target = std::nullopt);
ActionParams close_door(std::string joint_id);
ActionParams open_drawer(std::string joint_id, std::optional<double> target = std::nullopt);
ActionParams close_drawer(std::string joint_id);

void to_json(Json& j, const ActionParams& p);
void from_json(const Json& j, ActionParams& p);

// Per-tick handle targets for driving a held articulated joint. Step k (1..steps)
// has value start + k/steps * (target - start); the last step is exactly target.
struct ArticulationTrajectory {
  std::string joint_id;
  double start_value = 0.0;
  double target_value = 0.0;
  int steps = 0;
  Quat start_orientation;
  Quat target_orientation;

  double value_at(int k) const;
  // Handle pose at step k, including the current latch twist.
  Pose handle_pose_at(const world::WorldState& world, int k) const;
};

// Throws NotGrasping unless the agent holds the joint's handle.
ArticulationTrajectory articulate(const world::WorldState& world, std::string_view joint_id, double target,
                                  double step);

class AtomicActionFsm {
 public:
  explicit AtomicActionFsm(ActionParams params);

  // Commands the agent for one tick. Throws TargetLost, PhaseTimeout, or the
  // world errors raised while resolving targets.
  world::AgentAction tick(const world::WorldState& world);

  const ActionParams& params() const { return params_; }
  int phase() const { return phase_; }
  std::string_view phase_label() const;
  int ticks_in_phase() const { return ticks_in_phase_; }
  bool complete() const { return complete_; }

 private:
  struct Command {
    Pose frame_in_ee;  // controlled frame expressed in the end-effector frame
    Pose target;
    bool track = false;
    std::optional<double> gripper;
    bool hold = false;  // no motion this tick
  };

  bool phase_done(const world::WorldState& w) const;
  void enter_phase(const world::WorldState& w);
  Command command(const world::WorldState& w);
  void check_targets(const world::WorldState& w) const;

  bool pose_reached(const world::WorldState& w, const Pose& frame_in_ee, const Pose& target) const;
  Command pick_command(const world::WorldState& w) const;
  Command pour_command(const world::WorldState& w) const;
  Command place_command(const world::WorldState& w) const;
  Command press_command(const world::WorldState& w) const;
  Command shake_command(const world::WorldState& w) const;
  Command stir_command(const world::WorldState& w) const;
  Command articulation_command(const world::WorldState& w);

  ActionParams params_;
  int phase_ = 0;
  int ticks_in_phase_ = 0;
  bool complete_ = false;
  bool started_ = false;

  // Captured on phase entry.
  Pose entry_ee_;
  Quat upright_;              // manipulated body orientation with tilt removed
  Vec3 pivot_local_;          // pour lip or rod tip in the body frame
  Vec3 tilt_axis_;            // pour tilt axis, world frame
  Vec3 anchor_;               // shake and stir reference point
  Vec3 origin_;               // manipulated body position when the action started
  std::optional<ArticulationTrajectory> trajectory_;
  int trajectory_step_ = 0;
  std::optional<Pose> retreat_target_;
};

// Functional form: returns the advanced machine and its command.
std::pair<AtomicActionFsm, world::AgentAction> fsm_tick(AtomicActionFsm fsm, const world::WorldState& world);

// Velocity command that moves `frame_in_ee` (carried by the end-effector) toward
// `target`. Servo mode is proportional with capped speeds; track mode jumps.
world::AgentAction servo_action(const world::WorldState& world, const Pose& frame_in_ee, const Pose& target,
                                bool track);

// End-effector pose that grasps `obj` at its grasp point with tool z on the grasp axis.
Pose grasp_pose(const world::ObjectState& obj);

}  // namespace labsim::manip
