#pragma once

#include "labsim/scene/layout.hpp"
#include "labsim/world/types.hpp"

namespace labsim::scene {

// Static furniture bodies for every placement. Supports keep their catalog flag.
world::ObjectState placement_body(const Placement& p, const AssetSpec& asset);
world::WorldState layout_to_world(const SceneLayout& layout, const std::vector<AssetSpec>& catalog);

}  // namespace labsim::scene
