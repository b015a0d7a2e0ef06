#include <cmath>

#include "doctest.h"
#include "labsim/core/error.hpp"
#include "labsim/core/random.hpp"
#include "labsim/world/world.hpp"

using namespace labsim;
using namespace labsim::world;

namespace {

const std::string kDataDir = LABSIM_DATA_DIR;
constexpr double kTableTop = 0.75;

std::shared_ptr<const chem::Chemistry> shipped() {
  static const auto chem =
      chem::Chemistry::load(kDataDir + "/substances.json", kDataDir + "/reactions.json");
  return chem;
}

double water_mol(double ml) { return ml * 1.0 / 18.02; }

ObjectState table() {
  ObjectState t;
  t.id = "table";
  t.category = "table";
  t.pose.position = {0.5, 0.0, kTableTop / 2};
  t.half_extents = {0.6, 0.8, kTableTop / 2};
  t.support_surface = true;
  return t;
}

ContainerState beaker(std::string id, Vec3 xy, double water_ml) {
  ContainerState c;
  c.object.id = std::move(id);
  c.object.category = "beaker";
  c.object.half_extents = {0.035, 0.035, 0.05};
  c.object.pose.position = {xy.x, xy.y, kTableTop + 0.05};
  c.object.graspable = true;
  c.object.grasp_point_local = {0, 0, 0.02};
  c.object.grasp_axis_local = {0, 0, -1};
  if (water_ml > 0) c.contents.set("water", water_mol(water_ml));
  return c;
}

WorldState base_world() {
  WorldState w;
  w.chemistry = shipped();
  w.objects.emplace("table", table());
  return w;
}

void add(WorldState& w, ContainerState c) { w.containers.emplace(c.object.id, std::move(c)); }

// Places the end-effector on the object's grasp point, tool pointing down, gripper closed.
void hover_grasp(WorldState& w, std::string_view id) {
  w.agent.ee_pose.position = grasp_point(body_at(w, id));
  w.agent.ee_pose.orientation = {0, 1, 0, 0};
  w.agent.gripper_aperture_m = 0.0;
  w.agent.gripper_command_m = 0.0;
}

AgentAction move(Vec3 v, Vec3 omega = {}) {
  AgentAction a;
  a.ee_linear = v;
  a.ee_angular = omega;
  return a;
}

bool near_pose(const Pose& a, const Pose& b, double tol) {
  return norm(a.position - b.position) <= tol && angle_between(a.orientation, b.orientation) <= tol;
}

}  // namespace

TEST_CASE("zero action only advances the tick") {
  WorldState w = base_world();
  add(w, beaker("b1", {0.4, 0.0, 0}, 100));
  const WorldState next = step(w, AgentAction{});
  CHECK(next.tick == 1);
  WorldState expected = w;
  expected.tick = 1;
  CHECK(next == expected);
}

TEST_CASE("end-effector speed is clamped") {
  WorldState w = base_world();
  const Vec3 start = w.agent.ee_pose.position;
  advance(w, move({10, 0, 0}));
  CHECK(norm(w.agent.ee_pose.position - start) == doctest::Approx(0.5 / 60).epsilon(1e-12));
}

TEST_CASE("120 ticks span two seconds") {
  WorldState w = base_world();
  for (int i = 0; i < 120; ++i) advance(w, AgentAction{});
  CHECK(w.time_s() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(ticks_for_seconds(2.0) == 120);
  CHECK(ticks_for_seconds(0.01) == 1);
}

TEST_CASE("non-finite actions are rejected") {
  WorldState w = base_world();
  CHECK_THROWS_AS(advance(w, move({std::nan(""), 0, 0})), Error);
  AgentAction a;
  a.gripper = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(step(w, a), Error);
}

TEST_CASE("attach validates reach, alignment and gripper state") {
  WorldState w = base_world();
  add(w, beaker("b1", {0.4, 0.0, 0}, 0));
  ObjectState rock = table();
  rock.id = "rock";
  rock.support_surface = false;
  w.objects.emplace("rock", rock);

  SUBCASE("success freezes the offset") {
    hover_grasp(w, "b1");
    const WorldState held = attach(w, "b1");
    CHECK(held.agent.held_object_id == "b1");
    CHECK(near_pose(held.agent.ee_pose * held.agent.held_offset, body_at(held, "b1").pose, 1e-12));
    CHECK(count_events(held, EventKind::kAttached, "b1") == 1);
  }
  SUBCASE("too far") {
    hover_grasp(w, "b1");
    w.agent.ee_pose.position.z += 0.05;
    CHECK_THROWS_WITH_AS(attach(w, "b1"), doctest::Contains("OutOfReach"), Error);
  }
  SUBCASE("tilted tool") {
    hover_grasp(w, "b1");
    w.agent.ee_pose.orientation = Quat::from_axis_angle({1, 0, 0}, deg_to_rad(30)) * w.agent.ee_pose.orientation;
    CHECK_THROWS_WITH_AS(attach(w, "b1"), doctest::Contains("Misaligned"), Error);
  }
  SUBCASE("open gripper") {
    hover_grasp(w, "b1");
    w.agent.gripper_aperture_m = 0.08;
    w.agent.gripper_command_m = 0.08;
    CHECK_THROWS_WITH_AS(attach(w, "b1"), doctest::Contains("InvalidAction"), Error);
  }
  SUBCASE("unknown and ungraspable") {
    hover_grasp(w, "b1");
    CHECK_THROWS_WITH_AS(attach(w, "nope"), doctest::Contains("UnknownObject"), Error);
    CHECK_THROWS_WITH_AS(attach(w, "rock"), doctest::Contains("NotGraspable"), Error);
  }
  SUBCASE("already holding") {
    hover_grasp(w, "b1");
    const WorldState held = attach(w, "b1");
    CHECK_THROWS_WITH_AS(attach(held, "b1"), doctest::Contains("AlreadyHolding"), Error);
  }
}

TEST_CASE("closing the gripper on an aligned body grasps it") {
  WorldState w = base_world();
  add(w, beaker("b1", {0.4, 0.0, 0}, 0));
  hover_grasp(w, "b1");
  w.agent.gripper_aperture_m = 0.08;
  w.agent.gripper_command_m = 0.08;
  AgentAction close;
  close.gripper = 0.0;
  for (int i = 0; i < 30 && !w.agent.held_object_id; ++i) advance(w, close);
  REQUIRE(w.agent.held_object_id == "b1");
  AgentAction open;
  open.gripper = 0.08;
  for (int i = 0; i < 30 && w.agent.held_object_id; ++i) advance(w, open);
  CHECK_FALSE(w.agent.held_object_id);
  CHECK(body_at(w, "b1").pose.position.z == doctest::Approx(kTableTop + 0.05).epsilon(1e-12));
}

TEST_CASE("held object follows a 0.25 m lift rigidly") {
  WorldState w = base_world();
  add(w, beaker("b1", {0.4, 0.0, 0}, 50));
  hover_grasp(w, "b1");
  attach_in_place(w, "b1");
  const double z0 = body_at(w, "b1").pose.position.z;
  for (int i = 0; i < 60; ++i) advance(w, move({0, 0, 0.25}));
  CHECK(body_at(w, "b1").pose.position.z - z0 == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("rigid hold invariant holds under random motion") {
  WorldState w = base_world();
  add(w, beaker("b1", {0.4, 0.0, 0}, 0));
  hover_grasp(w, "b1");
  attach_in_place(w, "b1");
  for (int i = 0; i < 60; ++i) advance(w, move({0, 0, 0.3}));
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const Vec3 v{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.05, 0.05)};
    const Vec3 omega{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
    advance(w, move(v, omega));
    const Pose rel = inverse(w.agent.ee_pose) * body_at(w, "b1").pose;
    REQUIRE(near_pose(rel, w.agent.held_offset, 1e-12));
  }
}

namespace {

// Source held at 90 degrees tilt about y; returns the world and the lip location.
WorldState tipped_source(double source_ml, Vec3 target_offset, double target_capacity) {
  WorldState w = base_world();
  ContainerState src = beaker("src", {0.3, 0.0, 0}, source_ml);
  src.object.pose.position.z = 1.0;
  src.object.pose.orientation = Quat::from_axis_angle({0, 1, 0}, kPi / 2);
  src.object.held_by_agent = true;
  w.agent.held_object_id = "src";
  const Vec3 lip = pour_lip(src);
  ContainerState dst = beaker("dst", {lip.x + target_offset.x, lip.y + target_offset.y, 0}, 0);
  dst.capacity_ml = target_capacity;
  add(w, std::move(src));
  add(w, std::move(dst));
  return w;
}

}  // namespace

TEST_CASE("pour at full tilt for one second moves the nominal rate") {
  const WorldState w = tipped_source(100, {0, 0, 0}, 250);
  const WorldState after = pour_tick(w, "src", 1.0);
  CHECK(liquid_volume_ml(after, container_at(after, "dst")) == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(liquid_volume_ml(after, container_at(after, "src")) == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(after.spilled_ml == doctest::Approx(0.0));
  CHECK(count_events(after, EventKind::kPour, "src") == 1);
}

TEST_CASE("pour misses a target two mouth radii away") {
  const WorldState w = tipped_source(100, {0.06, 0, 0}, 250);
  const WorldState after = pour_tick(w, "src", 1.0);
  CHECK(liquid_volume_ml(after, container_at(after, "dst")) == 0.0);
  CHECK(after.spilled_ml == doctest::Approx(50.0).epsilon(1e-9));
}

TEST_CASE("overflow past capacity spills") {
  const WorldState w = tipped_source(100, {0, 0, 0}, 30);
  const WorldState after = pour_tick(w, "src", 1.0);
  CHECK(liquid_volume_ml(after, container_at(after, "dst")) == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(after.spilled_ml == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("pour below onset is a no-op") {
  WorldState w = tipped_source(100, {0, 0, 0}, 250);
  container_at(w, "src").object.pose.orientation = Quat::from_axis_angle({0, 1, 0}, deg_to_rad(40));
  const WorldState after = pour_tick(w, "src", 1.0);
  CHECK(container_at(after, "src") == container_at(w, "src"));
}

TEST_CASE("pour rate scales linearly above onset") {
  WorldState w = tipped_source(100, {0, 0, 0}, 250);
  container_at(w, "src").object.pose.orientation = Quat::from_axis_angle({0, 1, 0}, deg_to_rad(67.5));
  const WorldState after = pour_tick(w, "src", 1.0);
  const double moved = 100.0 - liquid_volume_ml(after, container_at(after, "src"));
  CHECK(moved == doctest::Approx(25.0).epsilon(1e-9));
}

TEST_CASE("volume and mass are conserved across random pours") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    WorldState w = tipped_source(rng.uniform(1, 200), {rng.uniform(-0.04, 0.04), rng.uniform(-0.04, 0.04), 0},
                                 rng.uniform(10, 250));
    const double v0 = total_liquid_volume_ml(w);
    const double m0 = total_liquid_mass_g(w);
    for (int i = 0; i < 20; ++i) {
      container_at(w, "src").object.pose.orientation =
          Quat::from_axis_angle({0, 1, 0}, rng.uniform(0.0, kPi / 2));
      pour_tick_in_place(w, "src", rng.uniform(0.01, 0.5));
    }
    CHECK(total_liquid_volume_ml(w) == doctest::Approx(v0).epsilon(1e-9));
    CHECK(total_liquid_mass_g(w) == doctest::Approx(m0).epsilon(1e-9));
  }
}

TEST_CASE("pouring acid into base runs the reaction in the target") {
  WorldState w = tipped_source(0, {0, 0, 0}, 250);
  container_at(w, "src").contents = chem::Mixture{{"water", water_mol(50)}, {"hcl", 0.1}};
  container_at(w, "dst").contents = chem::Mixture{{"water", water_mol(50)}, {"naoh", 0.2}};
  const double m0 = total_liquid_mass_g(w);
  for (int i = 0; i < 120; ++i) pour_tick_in_place(w, "src", kDefaultDt);
  const ContainerState& dst = container_at(w, "dst");
  CHECK(dst.contents.amount_of("hcl") == 0.0);
  CHECK(dst.contents.amount_of("nacl") == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(count_events(w, EventKind::kReaction, "dst") >= 1);
  CHECK(total_liquid_mass_g(w) == doctest::Approx(m0).epsilon(1e-9));
}

TEST_CASE("release from height falls and spills") {
  WorldState w = base_world();
  add(w, beaker("b1", {0.4, 0.0, 0}, 80));
  hover_grasp(w, "b1");
  attach_in_place(w, "b1");
  for (int i = 0; i < 60; ++i) advance(w, move({0, 0, 0.2}));
  release_in_place(w);
  CHECK(count_events(w, EventKind::kFell, "b1") == 1);
  CHECK_FALSE(is_upright(body_at(w, "b1")));
  CHECK(container_at(w, "b1").contents.empty());
  CHECK(w.spilled_ml == doctest::Approx(80.0).epsilon(1e-9));
}

TEST_CASE("release just above a surface settles upright") {
  WorldState w = base_world();
  add(w, beaker("b1", {0.4, 0.0, 0}, 80));
  hover_grasp(w, "b1");
  attach_in_place(w, "b1");
  for (int i = 0; i < 6; ++i) advance(w, move({0, 0, 0.1}));
  release_in_place(w);
  CHECK(count_events(w, EventKind::kFell) == 0);
  CHECK(base_center(body_at(w, "b1")).z == doctest::Approx(kTableTop).epsilon(1e-12));
  CHECK(resting_support(w, body_at(w, "b1"))->id == "table");
}

namespace {

WorldState door_world(double turn_rad = 0.0) {
  WorldState w = base_world();
  ObjectState handle;
  handle.id = "door_handle";
  handle.category = "handle";
  handle.half_extents = {0.01, 0.01, 0.04};
  handle.graspable = true;
  handle.grasp_axis_local = {1, 0, 0};
  handle.pose.position = {0.6, 0.1, 0.95};
  w.objects.emplace(handle.id, handle);
  JointState j;
  j.id = "door";
  j.kind = JointKind::kRevolute;
  j.range_min = 0.0;
  j.range_max = deg_to_rad(110);
  j.attached_object_id = handle.id;
  j.origin = {0.6, -0.15, 0.95};
  j.axis = {0, 0, 1};
  j.attachment_rest = handle.pose;
  j.handle_turn_rad = turn_rad;
  w.joints.emplace(j.id, j);
  w.agent.ee_pose = {handle.pose.position, Quat::from_axis_angle({0, 1, 0}, kPi / 2)};
  w.agent.gripper_aperture_m = 0.0;
  w.agent.gripper_command_m = 0.0;
  attach_in_place(w, "door_handle");
  return w;
}

}  // namespace

TEST_CASE("held door handle stays on the hinge circle and clamps to range") {
  WorldState w = door_world();
  for (int i = 0; i < 600; ++i) advance(w, move({-0.3, -0.1, 0}));
  const JointState& j = w.joints.at("door");
  CHECK(j.value >= 0.0);
  CHECK(j.value <= j.range_max + 1e-12);
  const Vec3 h = body_at(w, "door_handle").pose.position;
  CHECK(std::hypot(h.x - 0.6, h.y + 0.15) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(near_pose(w.agent.ee_pose * w.agent.held_offset, body_at(w, "door_handle").pose, 1e-9));

  for (int i = 0; i < 600; ++i) advance(w, move({0.3, 0.3, 0}));
  CHECK(w.joints.at("door").value == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("door swings through a quarter turn") {
  WorldState w = door_world();
  Vec3 target{0.6 - 0.25, -0.15, 0.95};
  for (int i = 0; i < 400; ++i) {
    const Vec3 d = target - w.agent.ee_pose.position;
    advance(w, move(d * 4.0));
  }
  CHECK(rad_to_deg(w.joints.at("door").value) == doctest::Approx(90.0).epsilon(1e-3));
}

TEST_CASE("latched handle blocks the joint until turned") {
  WorldState w = door_world(deg_to_rad(30));
  for (int i = 0; i < 60; ++i) advance(w, move({-0.2, -0.1, 0}));
  CHECK(w.joints.at("door").value == 0.0);
  const Vec3 grasp_axis = rotate(body_at(w, "door_handle").pose.orientation, {1, 0, 0});
  for (int i = 0; i < 60; ++i) advance(w, move({}, grasp_axis * 0.6));
  CHECK(rad_to_deg(w.joints.at("door").handle_angle_rad) == doctest::Approx(30.0).epsilon(1e-6));
  for (int i = 0; i < 60; ++i) advance(w, move({-0.2, -0.1, 0}));
  CHECK(w.joints.at("door").value > deg_to_rad(5));
}

TEST_CASE("pressing a button activates it once and it springs back") {
  WorldState w = base_world();
  ObjectState cap;
  cap.id = "btn";
  cap.category = "button";
  cap.half_extents = {0.015, 0.015, 0.005};
  cap.pose.position = {0.55, -0.25, 0.83};
  w.objects.emplace(cap.id, cap);
  JointState j;
  j.id = "btn_joint";
  j.kind = JointKind::kPrismatic;
  j.role = JointRole::kButton;
  j.range_max = 0.012;
  j.axis = {0, 0, -1};
  j.attached_object_id = cap.id;
  j.attachment_rest = cap.pose;
  w.joints.emplace(j.id, j);
  w.agent.ee_pose.position = {0.55, -0.25, 0.86};
  for (int i = 0; i < 120; ++i) advance(w, move({0, 0, -0.05}));
  CHECK(w.joints.at("btn_joint").activated);
  CHECK(w.joints.at("btn_joint").value == doctest::Approx(0.012));
  CHECK(w.agent.ee_pose.position.z == doctest::Approx(0.83 + 0.005 - 0.012).epsilon(1e-9));
  CHECK(count_events(w, EventKind::kButtonActivated) == 1);
  for (int i = 0; i < 60; ++i) advance(w, move({0, 0, 0.1}));
  CHECK(w.joints.at("btn_joint").value == 0.0);
  CHECK(w.joints.at("btn_joint").activated);
}

TEST_CASE("alternating roll counts shake cycles") {
  WorldState w = base_world();
  add(w, beaker("b1", {0.4, 0.0, 0}, 40));
  hover_grasp(w, "b1");
  attach_in_place(w, "b1");
  for (int i = 0; i < 60; ++i) advance(w, move({0, 0, 0.2}));
  for (int cycle = 0; cycle < 3; ++cycle) {
    for (int i = 0; i < 15; ++i) advance(w, move({}, {1.6, 0, 0}));
    for (int i = 0; i < 30; ++i) advance(w, move({}, {-1.6, 0, 0}));
    for (int i = 0; i < 15; ++i) advance(w, move({}, {1.6, 0, 0}));
  }
  CHECK(container_at(w, "b1").shake_cycles == 3);
  CHECK(count_events(w, EventKind::kShakeCycle, "b1") == 3);
  CHECK(w.spilled_ml == 0.0);
}

TEST_CASE("rod circling inside a beaker accumulates stir angle") {
  WorldState w = base_world();
  add(w, beaker("b1", {0.4, 0.0, 0}, 100));
  ObjectState rod;
  rod.id = "rod";
  rod.category = "glass_rod";
  rod.half_extents = {0.004, 0.004, 0.1};
  rod.graspable = true;
  rod.grasp_point_local = {0, 0, 0.07};
  rod.pose.position = {0.4, 0.0, kTableTop + 0.02 + 0.1};
  w.objects.emplace(rod.id, rod);
  hover_grasp(w, "rod");
  attach_in_place(w, "rod");
  for (int i = 0; i < 3; ++i) advance(w, move({0.9, 0, 0}));
  const int ticks = 240;
  for (int i = 0; i < ticks; ++i) {
    const double phase = 2 * kPi * 2 * i / ticks;
    advance(w, move({-0.015 * std::sin(phase) * 2 * kPi * 2 / (ticks * kDefaultDt),
                     0.015 * std::cos(phase) * 2 * kPi * 2 / (ticks * kDefaultDt), 0}));
  }
  CHECK(container_at(w, "b1").stir_angle_rad / (2 * kPi) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("base motion carries the end-effector and reports collisions once") {
  WorldState w = base_world();
  w.agent.base_pose = BasePose{-1.0, 0.0, 0.0};
  w.agent.ee_pose.position = {-0.7, 0.0, 1.1};
  AgentAction a;
  a.base = {0.5, 0, 0.0};
  const Pose rel0 = inverse(Pose{{-1.0, 0, 0}, Quat{}}) * w.agent.ee_pose;
  for (int i = 0; i < 60; ++i) advance(w, a);
  const BasePose& b = *w.agent.base_pose;
  const Pose rel1 = inverse(Pose{{b.x, b.y, 0}, Quat::from_yaw(b.yaw)}) * w.agent.ee_pose;
  CHECK(near_pose(rel0, rel1, 1e-12));
  CHECK(b.x == doctest::Approx(-0.5));
  for (int i = 0; i < 120; ++i) advance(w, a);
  CHECK(w.agent.base_in_collision);
  CHECK(count_events(w, EventKind::kBaseCollision, "table") == 1);
}

TEST_CASE("heater warms containers resting on it after activation") {
  WorldState w = base_world();
  ObjectState heater = table();
  heater.id = "heater";
  heater.category = "heater";
  heater.half_extents = {0.1, 0.1, 0.02};
  heater.pose.position = {0.4, 0.3, kTableTop + 0.02};
  w.objects.emplace(heater.id, heater);
  ContainerState b = beaker("b1", {0.4, 0.3, 0}, 50);
  b.object.pose.position.z = kTableTop + 0.04 + 0.05;
  add(w, b);
  JointState j;
  j.id = "sw";
  j.role = JointRole::kButton;
  j.kind = JointKind::kPrismatic;
  j.activated = true;
  j.powers_object_id = "heater";
  j.attached_object_id = "missing";
  w.joints.emplace(j.id, j);
  for (int i = 0; i < 120; ++i) advance(w, AgentAction{});
  CHECK(container_at(w, "b1").contents.temperature_c() == doctest::Approx(22.0).epsilon(1e-9));
}

TEST_CASE("identical seeds and actions give identical worlds") {
  const auto run = [] {
    WorldState w = base_world();
    add(w, beaker("b1", {0.4, 0.0, 0}, 100));
    add(w, beaker("b2", {0.6, 0.1, 0}, 0));
    Rng rng(42);
    for (int i = 0; i < 500; ++i) {
      AgentAction a = move({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)},
                           {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
      if (i % 50 == 0) a.gripper = rng.uniform(0, 0.08);
      advance(w, a);
    }
    return w;
  };
  CHECK(run() == run());
}

TEST_CASE("world snapshots round-trip through JSON") {
  WorldState w = door_world(0.2);
  add(w, beaker("b1", {0.4, 0.0, 0}, 100));
  container_at(w, "b1").stir_last_angle = 0.3;
  w.agent.base_pose = BasePose{0.1, 0.2, 0.3};
  for (int i = 0; i < 30; ++i) advance(w, move({-0.1, 0, 0}, {0.1, 0, 0}));
  const Json doc = world_to_json(w);
  const WorldState back = world_from_json(Json::parse(doc.dump()), w.chemistry);
  CHECK(back == w);
  Json broken = doc;
  broken["schema_version"] = 99;
  CHECK_THROWS_WITH_AS(world_from_json(broken, w.chemistry), doctest::Contains("SchemaError"), Error);
  broken = doc;
  broken.erase("agent");
  CHECK_THROWS_WITH_AS(world_from_json(broken, w.chemistry), doctest::Contains("SchemaError"), Error);
}
