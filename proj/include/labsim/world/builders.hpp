#pragma once

#include <string>

#include "labsim/world/types.hpp"

namespace labsim::world {

inline constexpr double kTableTopM = 0.75;

// Bench-top lab furniture and glassware with the default tabletop geometry.
ObjectState make_table(std::string id, Vec2 center, Vec2 half_size, double top_z = kTableTopM);
ContainerState make_beaker(std::string id, Vec2 xy, double support_z = kTableTopM, double capacity_ml = 250.0);
ObjectState make_rod(std::string id, Vec2 xy, double support_z = kTableTopM);
ObjectState make_block(std::string id, std::string category, Vec2 xy, Vec3 half_extents,
                       double support_z = kTableTopM);

// Cabinet door: handle at `handle`, hinge at `hinge`, both at the same height.
// Adds the handle body and the revolute joint.
void add_door(WorldState& w, std::string id, Vec3 hinge, Vec3 handle, double max_rad = deg_to_rad(110.0),
              double latch_rad = 0.0);
// Drawer sliding along `pull_dir` from a handle at `handle`.
void add_drawer(WorldState& w, std::string id, Vec3 handle, Vec3 pull_dir, double max_m = 0.35);
// Push button on top of `top` pressing straight down; optionally powers a hotplate body.
void add_button(WorldState& w, std::string id, Vec3 top, std::string powers = {});

}  // namespace labsim::world
