#include "labsim/scene/to_world.hpp"

#include <algorithm>

#include "labsim/core/error.hpp"

namespace labsim::scene {

world::ObjectState placement_body(const Placement& p, const AssetSpec& asset) {
  world::ObjectState body;
  body.id = p.asset_id;
  body.category = p.category;
  body.pose = p.world_pose;
  body.half_extents = {p.footprint_half_extents.x, p.footprint_half_extents.y, p.height_m / 2};
  body.support_surface = asset.support_surface;
  return body;
}

world::WorldState layout_to_world(const SceneLayout& layout, const std::vector<AssetSpec>& catalog) {
  world::WorldState w;
  for (const Placement& p : layout.placements) {
    const auto it = std::find_if(catalog.begin(), catalog.end(), [&](const AssetSpec& a) { return a.id == p.asset_id; });
    if (it == catalog.end()) throw Error(ErrorCode::kUnknownObject, "asset '" + p.asset_id + "' not in catalog");
    w.objects.emplace(p.asset_id, placement_body(p, *it));
  }
  w.rng_seed = layout.generator_seed;
  return w;
}

}  // namespace labsim::scene
