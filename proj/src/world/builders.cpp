#include "labsim/world/builders.hpp"

namespace labsim::world {

namespace {
constexpr double kBeakerHalfHeight = 0.05;
constexpr double kRodHalfLength = 0.1;
}  // namespace

ObjectState make_table(std::string id, Vec2 center, Vec2 half_size, double top_z) {
  ObjectState t;
  t.id = std::move(id);
  t.category = "table";
  t.pose.position = {center.x, center.y, top_z / 2};
  t.half_extents = {half_size.x, half_size.y, top_z / 2};
  t.support_surface = true;
  return t;
}

ContainerState make_beaker(std::string id, Vec2 xy, double support_z, double capacity_ml) {
  ContainerState c;
  c.object.id = std::move(id);
  c.object.category = "beaker";
  c.object.half_extents = {0.035, 0.035, kBeakerHalfHeight};
  c.object.pose.position = {xy.x, xy.y, support_z + kBeakerHalfHeight};
  c.object.graspable = true;
  c.object.grasp_point_local = {0, 0, 0.02};
  c.object.grasp_axis_local = {0, 0, -1};
  c.capacity_ml = capacity_ml;
  c.mouth_radius_m = 0.03;
  c.rim_height_m = 2 * kBeakerHalfHeight;
  return c;
}

ObjectState make_rod(std::string id, Vec2 xy, double support_z) {
  ObjectState rod;
  rod.id = std::move(id);
  rod.category = "glass_rod";
  rod.half_extents = {0.004, 0.004, kRodHalfLength};
  rod.graspable = true;
  rod.grasp_point_local = {0, 0, 0.07};
  rod.pose.position = {xy.x, xy.y, support_z + kRodHalfLength};
  return rod;
}

ObjectState make_block(std::string id, std::string category, Vec2 xy, Vec3 half_extents, double support_z) {
  ObjectState o;
  o.id = std::move(id);
  o.category = std::move(category);
  o.half_extents = half_extents;
  o.pose.position = {xy.x, xy.y, support_z + half_extents.z};
  return o;
}

void add_door(WorldState& w, std::string id, Vec3 hinge, Vec3 handle_at, double max_rad, double latch_rad) {
  ObjectState handle;
  handle.id = id + "_handle";
  handle.category = "handle";
  handle.half_extents = {0.01, 0.01, 0.04};
  handle.graspable = true;
  // Grasp horizontally, pointing into the door face.
  handle.grasp_axis_local = {1, 0, 0};
  handle.pose.position = handle_at;
  JointState j;
  j.id = std::move(id);
  j.kind = JointKind::kRevolute;
  j.range_max = max_rad;
  j.attached_object_id = handle.id;
  j.origin = hinge;
  j.axis = {0, 0, 1};
  j.attachment_rest = handle.pose;
  j.handle_turn_rad = latch_rad;
  w.objects.emplace(handle.id, std::move(handle));
  w.joints.emplace(j.id, std::move(j));
}

void add_drawer(WorldState& w, std::string id, Vec3 handle_at, Vec3 pull_dir, double max_m) {
  ObjectState handle;
  handle.id = id + "_handle";
  handle.category = "handle";
  handle.half_extents = {0.01, 0.04, 0.01};
  handle.graspable = true;
  handle.grasp_axis_local = -normalized(pull_dir);
  handle.pose.position = handle_at;
  JointState j;
  j.id = std::move(id);
  j.kind = JointKind::kPrismatic;
  j.range_max = max_m;
  j.attached_object_id = handle.id;
  j.axis = normalized(pull_dir);
  j.attachment_rest = handle.pose;
  w.objects.emplace(handle.id, std::move(handle));
  w.joints.emplace(j.id, std::move(j));
}

void add_button(WorldState& w, std::string id, Vec3 top, std::string powers) {
  ObjectState cap;
  cap.id = id + "_cap";
  cap.category = "button";
  cap.half_extents = {0.015, 0.015, 0.005};
  cap.pose.position = top - Vec3{0, 0, 0.005};
  JointState j;
  j.id = std::move(id);
  j.kind = JointKind::kPrismatic;
  j.role = JointRole::kButton;
  j.range_max = 0.012;
  j.axis = {0, 0, -1};
  j.attached_object_id = cap.id;
  j.attachment_rest = cap.pose;
  j.powers_object_id = std::move(powers);
  w.objects.emplace(cap.id, std::move(cap));
  w.joints.emplace(j.id, std::move(j));
}

}  // namespace labsim::world
