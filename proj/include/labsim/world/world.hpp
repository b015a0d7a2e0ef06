#pragma once

#include <string_view>

#include "labsim/core/json.hpp"
#include "labsim/world/types.hpp"

namespace labsim::world {

// Advances the world by one tick in place. Throws InvalidAction on non-finite input.
void advance(WorldState& world, const AgentAction& action);
WorldState step(WorldState world, const AgentAction& action);

// Freezes the current end-effector to object transform. Requires a closing
// gripper and the end-effector within grasp tolerance of the object's grasp point.
void attach_in_place(WorldState& world, std::string_view object_id);
WorldState attach(WorldState world, std::string_view object_id);

// Drops the held object and settles it on the highest support below it.
void release_in_place(WorldState& world);

// Transfers liquid out of a held, tilted container for `dt` seconds.
void pour_tick_in_place(WorldState& world, std::string_view source_id, double dt);
WorldState pour_tick(WorldState world, std::string_view source_id, double dt);

// Body lookup across plain objects and containers.
ObjectState* find_body(WorldState& world, std::string_view id);
const ObjectState* find_body(const WorldState& world, std::string_view id);
const ObjectState& body_at(const WorldState& world, std::string_view id);
ContainerState& container_at(WorldState& world, std::string_view id);
const ContainerState& container_at(const WorldState& world, std::string_view id);
bool has_body(const WorldState& world, std::string_view id);
// Removes an object or container (and releases it if held).
void remove_body(WorldState& world, std::string_view id);

Vec3 grasp_point(const ObjectState& obj);
Vec3 top_center(const ObjectState& obj);
Vec3 base_center(const ObjectState& obj);
// Lowest point of the rim circle; the mouth centre when upright.
Vec3 pour_lip(const ContainerState& c);
double tilt_deg(const ObjectState& obj);
bool is_upright(const ObjectState& obj);
// Roll about world x, positive when the body z axis leans toward -y.
double roll_rad(const ObjectState& obj);

double liquid_volume_ml(const WorldState& world, const ContainerState& c);
double contents_mass_g(const WorldState& world, const ContainerState& c);
// Σ container contents mass + spilled mass.
double total_liquid_mass_g(const WorldState& world);
double total_liquid_volume_ml(const WorldState& world);

// Top-face height of the highest support surface under `xy` at or below
// `max_z`, or 0 for the floor. `exclude` is skipped.
double support_height(const WorldState& world, Vec2 xy, double max_z, std::string_view exclude);
// Support body currently under an object, if any.
const ObjectState* resting_support(const WorldState& world, const ObjectState& obj);

Pose joint_attachment_pose(const JointState& joint, double value);
// Orthogonal-footprint test in the xy plane for an object's oriented box.
bool footprint_contains(const ObjectState& obj, Vec2 xy, double margin = 0.0);

std::size_t count_events(const WorldState& world, EventKind kind, std::string_view subject = {});

Json world_to_json(const WorldState& world);
WorldState world_from_json(const Json& doc, std::shared_ptr<const chem::Chemistry> chemistry);

void to_json(Json& j, const AgentAction& a);
void from_json(const Json& j, AgentAction& a);
void to_json(Json& j, const WorldEvent& e);
void from_json(const Json& j, WorldEvent& e);

}  // namespace labsim::world
