#include "labsim/bench/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "labsim/core/error.hpp"
#include "labsim/core/random.hpp"
#include "labsim/scene/to_world.hpp"
#include "labsim/world/builders.hpp"
#include "labsim/world/world.hpp"

namespace labsim::bench {

using world::ContainerState;
using world::ObjectState;
using world::WorldState;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kNone: return "none";
    case Split::kId: return "id";
    case Split::kOod: return "ood";
  }
  return "none";
}

Split split_from_string(std::string_view text) {
  if (text == "none") return Split::kNone;
  if (text == "id") return Split::kId;
  if (text == "ood") return Split::kOod;
  throw Error(ErrorCode::kSchemaError, "unknown split '" + std::string(text) + "'");
}

std::string TaskSpec::key() const {
  return split == Split::kNone ? id : id + "[" + std::string(to_string(split)) + "]";
}

std::vector<TaskSpec> registry_from_json(const Json& doc) {
  std::vector<TaskSpec> out;
  try {
    for (const Json& t : doc.at("tasks")) {
      TaskSpec spec;
      spec.id = t.at("id").get<std::string>();
      spec.name = t.at("name").get<std::string>();
      spec.level = t.at("level").get<int>();
      spec.template_name = t.at("template").get<std::string>();
      spec.hold_s = t.value("hold_s", kDefaultHoldS);
      spec.time_limit_ticks = t.at("time_limit_ticks").get<std::int64_t>();
      spec.stage_labels = t.at("stages").get<std::vector<std::string>>();
      spec.episodes = t.value("episodes", 60);
      spec.notes = t.value("notes", std::vector<std::string>{});
      if (spec.stage_labels.empty()) throw Error(ErrorCode::kSchemaError, "task '" + spec.id + "' has no stages");
      const auto splits = t.value("splits", std::vector<std::string>{});
      if (splits.empty()) {
        out.push_back(std::move(spec));
        continue;
      }
      for (const std::string& s : splits) {
        TaskSpec variant = spec;
        variant.split = split_from_string(s);
        out.push_back(std::move(variant));
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("task registry: ") + e.what());
  }
  return out;
}

std::vector<TaskSpec> load_registry(const std::filesystem::path& path) {
  return registry_from_json(read_json_file(path));
}

const TaskSpec& find_task(const std::vector<TaskSpec>& registry, std::string_view id, Split split) {
  for (const TaskSpec& t : registry) {
    if (t.id == id && t.split == split) return t;
  }
  std::string known;
  for (const TaskSpec& t : registry) known += (known.empty() ? "" : ", ") + t.key();
  throw Error(ErrorCode::kUnknownTask, "'" + std::string(id) + "' (" + std::string(to_string(split)) +
                                           "); known: " + known);
}

void to_json(Json& j, const TaskSpec& t) {
  j = Json{{"id", t.id},
           {"key", t.key()},
           {"name", t.name},
           {"level", t.level},
           {"template", t.template_name},
           {"split", to_string(t.split)},
           {"hold_s", t.hold_s},
           {"time_limit_ticks", t.time_limit_ticks},
           {"stages", t.stage_labels},
           {"episodes", t.episodes},
           {"notes", t.notes}};
}

BenchContext BenchContext::load(const std::filesystem::path& data_dir) {
  BenchContext ctx;
  ctx.chemistry = chem::Chemistry::load(data_dir / "substances.json", data_dir / "reactions.json");
  const Json doc = read_json_file(data_dir / "assets.json");
  ctx.room = doc.at("room").get<scene::RoomSpec>();
  ctx.catalog = scene::catalog_from_json(doc);
  return ctx;
}

std::uint64_t instance_seed(const TaskSpec& task, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : task.key()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  // splitmix64 finaliser over the mixed value
  std::uint64_t z = h ^ (seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

// ---------------------------------------------------------------------------
// Variant pools. The first ID entry of each pool is the nominal variant.

struct ContainerVariant {
  std::string tag;
  std::string category;
  Vec3 half;
  double mouth_r = 0.03;
  double capacity_ml = 250.0;
};

struct HandleVariant {
  std::string tag;
  double latch_deg = 0.0;
  double width_m = 0.25;
};

struct SlotVariant {
  std::string tag;
  Vec2 xy{};
};

template <typename T>
struct Pool {
  std::vector<T> id;
  std::vector<T> ood;

  const std::vector<T>& of(Split s) const { return s == Split::kOod ? ood : id; }
};

const Pool<ContainerVariant> kContainers{
    {{"container:beaker_250ml", "beaker", {0.035, 0.035, 0.05}, 0.03, 250.0},
     {"container:beaker_100ml", "beaker", {0.027, 0.027, 0.04}, 0.022, 100.0},
     {"container:flask_250ml", "flask", {0.04, 0.04, 0.06}, 0.016, 250.0}},
    {{"container:beaker_400ml", "beaker", {0.042, 0.042, 0.065}, 0.037, 400.0},
     {"container:flask_100ml", "flask", {0.03, 0.03, 0.045}, 0.013, 100.0},
     {"container:cylinder_50ml", "cylinder", {0.016, 0.016, 0.08}, 0.012, 50.0}}};

const Pool<std::string> kMaterials{{"material:epoxy_black", "material:oak", "material:steel"},
                                   {"material:marble", "material:tile_white"}};

const Pool<std::string> kButtonColors{{"button:red", "button:green", "button:blue"},
                                      {"button:yellow", "button:purple"}};

const Pool<SlotVariant> kButtonSlots{{{"button_slot:left", {0.45, 0.35}}, {"button_slot:center", {0.55, 0.0}}},
                                     {{"button_slot:right", {0.55, -0.35}}, {"button_slot:back", {0.80, 0.25}}}};

const Pool<HandleVariant> kHandles{{{"handle:bar", 0.0, 0.25}, {"handle:knob", 0.0, 0.30}},
                                   {{"handle:lever", 30.0, 0.35}, {"handle:ring", 0.0, 0.40}}};

const Pool<SlotVariant> kTargets{{{"target:front_left", {0.40, 0.30}}, {"target:front_right", {0.40, -0.30}}},
                                 {{"target:back_center", {0.75, 0.0}}, {"target:back_left", {0.75, 0.35}}}};

enum Dim : unsigned {
  kDimContainer = 1U << 0,
  kDimSecondContainer = 1U << 1,
  kDimMaterial = 1U << 2,
  kDimButtonColor = 1U << 3,
  kDimButtonSlot = 1U << 4,
  kDimHandle = 1U << 5,
  kDimTarget = 1U << 6,
};

// Dimensions the Level-3 generalisation splits vary per template.
unsigned varied_dims(std::string_view template_name) {
  static const std::map<std::string, unsigned, std::less<>> kDims{
      {"pick", kDimContainer | kDimMaterial},
      {"press", kDimButtonColor | kDimButtonSlot | kDimMaterial},
      {"open_door", kDimHandle | kDimMaterial},
      {"pour_liquid", kDimContainer | kDimSecondContainer | kDimMaterial},
      {"heater_beaker", kDimContainer | kDimButtonColor | kDimMaterial},
      {"transport_beaker", kDimContainer | kDimTarget | kDimMaterial},
  };
  const auto it = kDims.find(template_name);
  return it == kDims.end() ? 0U : it->second;
}

struct Variants {
  ContainerVariant container = kContainers.id.front();
  ContainerVariant second = kContainers.id.front();
  std::string material = kMaterials.id.front();
  std::string button_color = kButtonColors.id.front();
  std::optional<SlotVariant> button_slot;  // fixed slot, otherwise sampled
  HandleVariant handle = kHandles.id.front();
  std::optional<SlotVariant> target;  // fixed slot, otherwise sampled
  std::vector<std::string> tags;
};

Variants sample_variants(std::string_view template_name, Split split, Rng& rng) {
  Variants v;
  if (split == Split::kNone) return v;
  const unsigned dims = varied_dims(template_name);
  if (dims & kDimContainer) {
    v.container = rng.pick(kContainers.of(split));
    v.tags.push_back(v.container.tag);
  }
  if (dims & kDimSecondContainer) {
    v.second = rng.pick(kContainers.of(split));
    v.tags.push_back(v.second.tag);
  }
  if (dims & kDimMaterial) {
    v.material = rng.pick(kMaterials.of(split));
    v.tags.push_back(v.material);
  }
  if (dims & kDimButtonColor) {
    v.button_color = rng.pick(kButtonColors.of(split));
    v.tags.push_back(v.button_color);
  }
  if (dims & kDimButtonSlot) {
    v.button_slot = rng.pick(kButtonSlots.of(split));
    v.tags.push_back(v.button_slot->tag);
  }
  if (dims & kDimHandle) {
    v.handle = rng.pick(kHandles.of(split));
    v.tags.push_back(v.handle.tag);
  }
  if (dims & kDimTarget) {
    v.target = rng.pick(kTargets.of(split));
    v.tags.push_back(v.target->tag);
  }
  std::sort(v.tags.begin(), v.tags.end());
  v.tags.erase(std::unique(v.tags.begin(), v.tags.end()), v.tags.end());
  return v;
}

// ---------------------------------------------------------------------------
// Condition shorthands.

Condition cond(ConditionKind kind, std::string subject = {}, double value = 0.0, std::string other = {},
               Vec3 point = {}) {
  return Condition{kind, std::move(subject), std::move(other), value, point};
}

constexpr double kUprightDeg = 10.0;
constexpr double kEmptyMl = 1e-6;
constexpr double kTransferFraction = 0.98;
constexpr double kReactedFraction = 0.99;
constexpr double kAwayM = 0.05;

std::vector<Condition> pick_conditions(const std::string& id, double base_z) {
  return {cond(ConditionKind::kHeld, id), cond(ConditionKind::kMinBaseHeight, id, base_z + kLiftBarM),
          cond(ConditionKind::kUpright, id, kUprightDeg)};
}

std::vector<Condition> pour_conditions(const std::string& src, Condition delivered) {
  return {cond(ConditionKind::kVolumeAtMost, src, kEmptyMl), std::move(delivered),
          cond(ConditionKind::kUpright, src, kUprightDeg), cond(ConditionKind::kHeld, src)};
}

std::vector<Condition> place_conditions(const std::string& id, const std::string& support, Vec2 xy) {
  return {cond(ConditionKind::kNotHeld, id), cond(ConditionKind::kRestsOn, id, 0.0, support),
          cond(ConditionKind::kNearXY, id, kPlaceToleranceM, {}, {xy.x, xy.y, 0.0}),
          cond(ConditionKind::kUpright, id, kUprightDeg)};
}

std::vector<Condition> shake_conditions(const std::string& id) {
  return {cond(ConditionKind::kShakeCycles, id, kShakeCyclesMin), cond(ConditionKind::kHeld, id),
          cond(ConditionKind::kUpright, id, kUprightDeg)};
}

std::vector<Condition> stir_conditions(const std::string& rod, const std::string& vessel) {
  return {cond(ConditionKind::kStirTurns, vessel, kStirRevolutionsMin), cond(ConditionKind::kHeld, rod),
          cond(ConditionKind::kTipAbove, rod, 0.0, vessel)};
}

std::vector<Condition> safety() {
  return {cond(ConditionKind::kSpillAtMost, {}, kSpillToleranceMl), cond(ConditionKind::kNoFall)};
}

std::vector<Condition> concat(std::initializer_list<std::vector<Condition>> parts) {
  std::vector<Condition> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// ---------------------------------------------------------------------------
// Tabletop scene builder.

constexpr Vec2 kTableCenter{0.55, 0.0};
constexpr Vec2 kTableHalf{0.45, 0.7};
constexpr double kTableTop = world::kTableTopM;
constexpr double kHeldLiftM = 0.25;
constexpr double kGapM = 0.06;

struct Region {
  Vec2 lo;
  Vec2 hi;
};

constexpr Region kWorkRegion{{0.30, -0.45}, {0.80, 0.45}};

class Builder {
 public:
  Builder(const BenchContext& ctx, std::uint64_t seed, Variants variants)
      : rng_(seed), variants_(std::move(variants)) {
    world_.chemistry = ctx.chemistry;
    world_.rng_seed = seed;
    ObjectState table = world::make_table("lab_bench", kTableCenter, kTableHalf);
    table.tags = {variants_.material};
    world_.objects.emplace(table.id, std::move(table));
  }

  Rng& rng() { return rng_; }
  WorldState& world() { return world_; }
  const Variants& variants() const { return variants_; }

  // Free tabletop spot for a footprint of radius r.
  Vec2 spot(double r, Region region = kWorkRegion) {
    for (int attempt = 0; attempt < 2000; ++attempt) {
      const Vec2 p{rng_.uniform(region.lo.x, region.hi.x), rng_.uniform(region.lo.y, region.hi.y)};
      if (clear(p, r)) {
        taken_.push_back({p, r});
        return p;
      }
    }
    throw Error(ErrorCode::kInfeasible, "no free tabletop spot");
  }

  void reserve(Vec2 p, double r) { taken_.push_back({p, r}); }

  void container(const std::string& id, const ContainerVariant& v, Vec2 xy, double support_z = kTableTop) {
    ContainerState c = world::make_beaker(id, xy, support_z, v.capacity_ml);
    c.object.category = v.category;
    c.object.half_extents = v.half;
    c.object.pose.position.z = support_z + v.half.z;
    c.object.pose.orientation = Quat::from_yaw(rng_.uniform(-kPi, kPi));
    c.object.grasp_point_local = {0, 0, 0.4 * v.half.z};
    c.object.tags = {v.tag};
    c.mouth_radius_m = v.mouth_r;
    c.rim_height_m = 2 * v.half.z;
    world_.containers.emplace(id, std::move(c));
  }

  void fill(const std::string& id, std::string_view substance, double ml) {
    const chem::SubstanceRecord& r = world_.chemistry->substances.at(substance);
    fill_mol(id, substance, ml * r.density_g_per_ml / r.molar_mass_g_per_mol);
  }
  void fill_mol(const std::string& id, std::string_view substance, double mol) {
    world::container_at(world_, id).contents.add(substance, mol);
  }
  double volume(const std::string& id) const {
    return world::liquid_volume_ml(world_, world::container_at(world_, id));
  }

  // Raises the body and closes the gripper on it.
  void hold(const std::string& id) {
    ObjectState& o = *world::find_body(world_, id);
    o.pose.position.z += kHeldLiftM;
    world_.agent.ee_pose = manip::grasp_pose(o);
    world_.agent.gripper_aperture_m = 0.0;
    world_.agent.gripper_command_m = 0.0;
    world::attach_in_place(world_, id);
  }

  Vec3 position(const std::string& id) const { return world::body_at(world_, id).pose.position; }

  void hotplate(Vec2 xy) {
    ObjectState plate = world::make_block("hotplate", "hotplate", xy, {0.1, 0.1, 0.02});
    plate.support_surface = true;
    world_.objects.emplace(plate.id, std::move(plate));
  }

  void button(Vec2 xy, std::string powers) {
    ObjectState housing = world::make_block("power_housing", "button_housing", xy, {0.03, 0.03, 0.02});
    const double top = housing.pose.position.z + housing.half_extents.z + 0.01;
    world_.objects.emplace(housing.id, std::move(housing));
    world::add_button(world_, "power", {xy.x, xy.y, top}, std::move(powers));
    world_.objects.at("power_cap").tags = {variants_.button_color};
  }

  // Door on the bench front; opening swings the handle toward -x.
  void door(Vec2 handle_xy, double latch_rad) {
    const HandleVariant& h = variants_.handle;
    const Vec3 handle{handle_xy.x, handle_xy.y, 0.95};
    world::add_door(world_, "door", handle - Vec3{0, h.width_m, 0}, handle, deg_to_rad(110.0), latch_rad);
    world_.objects.at("door_handle").tags = {h.tag};
    reserve({handle_xy.x - h.width_m / 2, handle_xy.y - h.width_m / 2}, h.width_m);
  }

  void drawer(double y) {
    world::add_drawer(world_, "drawer", {0.12, y, 0.65}, {-1, 0, 0});
  }

  void set_joint(const std::string& id, double value) {
    world::JointState& j = world_.joints.at(id);
    j.value = value;
    world_.objects.at(j.attached_object_id).pose = world::joint_attachment_pose(j, value);
  }

 private:
  bool clear(Vec2 p, double r) const {
    return std::all_of(taken_.begin(), taken_.end(),
                       [&](const auto& t) { return norm(p - t.first) >= r + t.second + kGapM; });
  }

  Rng rng_;
  Variants variants_;
  WorldState world_;
  std::vector<std::pair<Vec2, double>> taken_;
};

constexpr double kBeakerR = 0.05;
constexpr double kPlateR = 0.15;

double radius_of(const ContainerVariant& v) { return std::hypot(v.half.x, v.half.y); }

// Liquid volume a source may carry so the target never overflows.
double pour_volume(Builder& b, const ContainerVariant& src, const ContainerVariant& dst, double dst_existing = 0.0) {
  const double room = std::min(src.capacity_ml, dst.capacity_ml - dst_existing);
  return b.rng().uniform(0.3, 0.6) * room;
}

struct Draft {
  std::vector<Stage> stages;
  std::vector<Condition> goal;
  std::vector<manip::ActionParams> plan;
};

// ---------------------------------------------------------------------------
// Level 1.

Draft tmpl_pick(Builder& b) {
  const ContainerVariant& v = b.variants().container;
  b.container("beaker", v, b.spot(radius_of(v)));
  b.fill("beaker", "water", b.rng().uniform(0.2, 0.5) * v.capacity_ml);
  auto stage = pick_conditions("beaker", kTableTop);
  return {{{"pick", {stage}}}, concat({stage, safety()}), {manip::pick("beaker")}};
}

Draft tmpl_pour(Builder& b) {
  const Variants& v = b.variants();
  b.container("source", v.container, b.spot(kBeakerR));
  b.container("target", v.second, b.spot(kBeakerR));
  b.fill("source", "water", pour_volume(b, v.container, v.second));
  const double expect = kTransferFraction * b.volume("source");
  b.hold("source");
  auto stage = pour_conditions("source", cond(ConditionKind::kVolumeAtLeast, "target", expect));
  return {{{"pour", {stage}}}, concat({stage, safety()}), {manip::pour("source", "target")}};
}

Draft tmpl_place(Builder& b) {
  const ContainerVariant& v = b.variants().container;
  b.container("beaker", v, b.spot(kBeakerR));
  const Vec2 target = b.spot(kBeakerR);
  b.fill("beaker", "water", 0.3 * v.capacity_ml);
  b.hold("beaker");
  auto stage = place_conditions("beaker", "lab_bench", target);
  return {{{"place", {stage}}}, concat({stage, safety()}), {manip::place("beaker", "lab_bench", target)}};
}

Draft tmpl_press(Builder& b) {
  Vec2 at{};
  if (const auto& slot = b.variants().button_slot) {
    at = slot->xy + Vec2{b.rng().uniform(-0.02, 0.02), b.rng().uniform(-0.02, 0.02)};
    b.reserve(at, kBeakerR);
  } else {
    at = b.spot(kBeakerR);
  }
  b.hotplate(b.spot(kPlateR));
  b.button(at, "hotplate");
  std::vector<Condition> stage{cond(ConditionKind::kButtonActive, "power")};
  return {{{"press", {stage}}}, concat({stage, safety()}), {manip::press("power")}};
}

Draft tmpl_shake(Builder& b) {
  const ContainerVariant& v = b.variants().container;
  b.container("beaker", v, b.spot(kBeakerR));
  b.fill("beaker", "water", 0.4 * v.capacity_ml);
  b.hold("beaker");
  const Vec3 origin = b.position("beaker");
  auto stage = shake_conditions("beaker");
  auto goal = concat({stage, safety(), {cond(ConditionKind::kNearPoint, "beaker", 0.02, {}, origin)}});
  return {{{"shake", {stage}}}, goal, {manip::shake("beaker")}};
}

Draft tmpl_stir(Builder& b) {
  const ContainerVariant& v = b.variants().container;
  b.container("beaker", v, b.spot(kBeakerR));
  b.fill("beaker", "water", 0.5 * v.capacity_ml);
  b.world().objects.emplace("rod", world::make_rod("rod", b.spot(kBeakerR)));
  b.hold("rod");
  auto stage = stir_conditions("rod", "beaker");
  auto goal = concat({stage, safety(), {cond(ConditionKind::kUpright, "beaker", kUprightDeg)}});
  return {{{"stir", {stage}}}, goal, {manip::stir("rod", "beaker")}};
}

Vec2 door_handle_xy(Builder& b) {
  return {0.6 + b.rng().uniform(-0.05, 0.05), 0.1 + b.rng().uniform(-0.05, 0.05)};
}

Draft tmpl_open_door(Builder& b) {
  b.door(door_handle_xy(b), deg_to_rad(b.variants().handle.latch_deg));
  const double target = deg_to_rad(b.rng().uniform(80.0, 100.0));
  std::vector<Condition> stage{cond(ConditionKind::kJointAtLeast, "door", target - kDoorToleranceRad)};
  auto goal = concat({stage,
                      {cond(ConditionKind::kJointAtMost, "door", target + kDoorToleranceRad),
                       cond(ConditionKind::kNotHeld, "door_handle"),
                       cond(ConditionKind::kEeAwayFrom, "door_handle", kAwayM)}});
  return {{{"open_door", {stage}}}, goal, {manip::open_door("door", target)}};
}

Draft tmpl_close_door(Builder& b) {
  b.door(door_handle_xy(b), 0.0);
  b.set_joint("door", deg_to_rad(b.rng().uniform(60.0, 100.0)));
  std::vector<Condition> stage{cond(ConditionKind::kJointAtMost, "door", kDoorClosedRad)};
  auto goal = concat({stage, {cond(ConditionKind::kNotHeld, "door_handle")}});
  return {{{"close_door", {stage}}}, goal, {manip::close_door("door")}};
}

Draft tmpl_open_drawer(Builder& b) {
  b.drawer(b.rng().uniform(-0.3, 0.3));
  const double target = b.rng().uniform(0.25, 0.32);
  std::vector<Condition> stage{cond(ConditionKind::kJointAtLeast, "drawer", target - kDrawerToleranceM)};
  auto goal = concat({stage,
                      {cond(ConditionKind::kJointAtMost, "drawer", target + kDrawerToleranceM),
                       cond(ConditionKind::kNotHeld, "drawer_handle"),
                       cond(ConditionKind::kEeAwayFrom, "drawer_handle", kAwayM)}});
  return {{{"open_drawer", {stage}}}, goal, {manip::open_drawer("drawer", target)}};
}

Draft tmpl_close_drawer(Builder& b) {
  b.drawer(b.rng().uniform(-0.3, 0.3));
  b.set_joint("drawer", b.rng().uniform(0.2, 0.3));
  std::vector<Condition> stage{cond(ConditionKind::kJointAtMost, "drawer", kDrawerClosedM)};
  auto goal = concat({stage, {cond(ConditionKind::kNotHeld, "drawer_handle")}});
  return {{{"close_drawer", {stage}}}, goal, {manip::close_drawer("drawer")}};
}

// ---------------------------------------------------------------------------
// Level 2 and Level 3.

Draft tmpl_pour_liquid(Builder& b) {
  const Variants& v = b.variants();
  b.container("source", v.container, b.spot(kBeakerR));
  b.container("target", v.second, b.spot(kBeakerR));
  b.fill("source", "water", pour_volume(b, v.container, v.second));
  const double expect = kTransferFraction * b.volume("source");
  auto pour = pour_conditions("source", cond(ConditionKind::kVolumeAtLeast, "target", expect));
  return {{{"pick", {pick_conditions("source", kTableTop)}}, {"pour", {pour}}},
          concat({pour, safety()}),
          {manip::pick("source"), manip::pour("source", "target")}};
}

Draft tmpl_shake_beaker(Builder& b) {
  const ContainerVariant& v = b.variants().container;
  b.container("beaker", v, b.spot(kBeakerR));
  b.fill("beaker", "water", 0.4 * v.capacity_ml);
  auto shake = shake_conditions("beaker");
  auto goal = concat({shake, safety(), {cond(ConditionKind::kMinBaseHeight, "beaker", kTableTop + kLiftBarM)}});
  return {{{"pick", {pick_conditions("beaker", kTableTop)}}, {"shake", {shake}}},
          goal,
          {manip::pick("beaker"), manip::shake("beaker")}};
}

Draft tmpl_heater_beaker(Builder& b) {
  const ContainerVariant& v = b.variants().container;
  const Vec2 plate = b.spot(kPlateR);
  b.hotplate(plate);
  b.button(b.spot(kBeakerR), "hotplate");
  b.container("beaker", v, b.spot(kBeakerR));
  b.fill("beaker", "water", 0.4 * v.capacity_ml);
  const double plate_top = kTableTop + 0.04;
  auto place = place_conditions("beaker", "hotplate", plate);
  std::vector<Condition> press{cond(ConditionKind::kButtonActive, "power")};
  return {{{"pick", {pick_conditions("beaker", kTableTop)}}, {"place", {place}}, {"press", {press}}},
          concat({place, press, safety(),
                  {cond(ConditionKind::kMinBaseHeight, "beaker", plate_top - 0.005)}}),
          {manip::pick("beaker"), manip::place("beaker", "hotplate"), manip::press("power")}};
}

Draft tmpl_operate_drawer(Builder& b) {
  b.drawer(b.rng().uniform(-0.3, 0.3));
  const double target = b.rng().uniform(0.25, 0.32);
  manip::ActionParams close = manip::close_drawer("drawer");
  close.close_retreat_m = 0.10;
  std::vector<Condition> closed{cond(ConditionKind::kJointAtMost, "drawer", kDrawerClosedM)};
  return {{{"open", {{cond(ConditionKind::kJointAtLeast, "drawer", target - kDrawerToleranceM)}}},
           {"close", {closed}}},
          concat({closed,
                  {cond(ConditionKind::kNotHeld, "drawer_handle"),
                   cond(ConditionKind::kEeAwayFrom, "drawer_handle", kAwayM)}}),
          {manip::open_drawer("drawer", target), close}};
}

Draft tmpl_stir_glass_rod(Builder& b) {
  const ContainerVariant& v = b.variants().container;
  b.container("beaker", v, b.spot(kBeakerR));
  b.fill("beaker", "water", 0.5 * v.capacity_ml);
  b.world().objects.emplace("rod", world::make_rod("rod", b.spot(kBeakerR)));
  auto stir = stir_conditions("rod", "beaker");
  return {{{"pick", {pick_conditions("rod", kTableTop)}}, {"stir", {stir}}},
          concat({stir, safety(), {cond(ConditionKind::kUpright, "beaker", kUprightDeg)}}),
          {manip::pick("rod"), manip::stir("rod", "beaker")}};
}

Draft tmpl_transport_beaker(Builder& b) {
  const Variants& v = b.variants();
  Vec2 target{};
  if (v.target) {
    target = v.target->xy + Vec2{b.rng().uniform(-0.02, 0.02), b.rng().uniform(-0.02, 0.02)};
    b.reserve(target, radius_of(v.container));
  } else {
    target = b.spot(kBeakerR);
  }
  b.container("beaker", v.container, b.spot(radius_of(v.container)));
  b.fill("beaker", "water", 0.3 * v.container.capacity_ml);
  auto place = place_conditions("beaker", "lab_bench", target);
  return {{{"pick", {pick_conditions("beaker", kTableTop)}}, {"place", {place}}},
          concat({place, safety()}),
          {manip::pick("beaker"), manip::place("beaker", "lab_bench", target)}};
}

// ---------------------------------------------------------------------------
// Level 4.

Draft tmpl_clean_beaker(Builder& b) {
  const ContainerVariant nominal = kContainers.id.front();
  const ContainerVariant waste_variant{"container:beaker_400ml", "beaker", nominal.half, nominal.mouth_r, 400.0};
  const Vec2 beaker_xy = b.spot(kBeakerR);
  const Vec2 rinse_xy = b.spot(kBeakerR);
  b.container("beaker", nominal, beaker_xy);
  b.container("rinse", nominal, rinse_xy);
  b.container("waste", waste_variant, b.spot(kBeakerR));
  b.fill("beaker", "water", 10.0);
  b.fill_mol("beaker", "cuso4", 0.0005);
  b.fill("rinse", "water", b.rng().uniform(50.0, 80.0));
  const double total = b.volume("beaker") + b.volume("rinse");
  auto into_beaker = pour_conditions("rinse", cond(ConditionKind::kVolumeAtLeast, "beaker", kTransferFraction * total));
  auto into_waste = pour_conditions("beaker", cond(ConditionKind::kVolumeAtLeast, "waste", kTransferFraction * total));
  auto rinse_back = place_conditions("rinse", "lab_bench", rinse_xy);
  auto beaker_back = place_conditions("beaker", "lab_bench", beaker_xy);
  return {{{"pick_rinse", {pick_conditions("rinse", kTableTop)}},
           {"pour_rinse", {into_beaker}},
           {"place_rinse", {rinse_back}},
           {"pick_beaker", {pick_conditions("beaker", kTableTop)}},
           {"shake_beaker", {shake_conditions("beaker")}},
           {"pour_waste", {into_waste}},
           {"place_beaker", {beaker_back}}},
          concat({rinse_back, beaker_back, safety(),
                  {cond(ConditionKind::kVolumeAtMost, "beaker", kEmptyMl),
                   cond(ConditionKind::kVolumeAtLeast, "waste", kTransferFraction * total)}}),
          {manip::pick("rinse"), manip::pour("rinse", "beaker"), manip::place("rinse", "lab_bench", rinse_xy),
           manip::pick("beaker"), manip::shake("beaker"), manip::pour("beaker", "waste"),
           manip::place("beaker", "lab_bench", beaker_xy)}};
}

Draft tmpl_drying_beakers(Builder& b) {
  constexpr Vec2 kShelf{0.82, -0.45};
  constexpr Vec2 kSlotA{0.82, -0.35};
  constexpr Vec2 kSlotB{0.82, -0.55};
  ObjectState shelf = world::make_block("cabinet_floor", "cabinet_shelf", kShelf, {0.13, 0.2, 0.02});
  shelf.support_surface = true;
  b.world().objects.emplace(shelf.id, std::move(shelf));
  world::add_door(b.world(), "door", {0.66, -0.65, 0.95}, {0.66, -0.28, 0.95}, deg_to_rad(110.0), deg_to_rad(20.0));
  const Region outside{{0.30, 0.0}, {0.60, 0.45}};
  const ContainerVariant nominal = kContainers.id.front();
  b.container("beaker_a", nominal, b.spot(kBeakerR, outside));
  b.container("beaker_b", nominal, b.spot(kBeakerR, outside));
  const double open = deg_to_rad(90.0);
  auto place_a = place_conditions("beaker_a", "cabinet_floor", kSlotA);
  auto place_b = place_conditions("beaker_b", "cabinet_floor", kSlotB);
  std::vector<Condition> closed{cond(ConditionKind::kJointAtMost, "door", kDoorClosedRad)};
  return {{{"open_door", {{cond(ConditionKind::kJointAtLeast, "door", open - kDoorToleranceRad)}}},
           {"pick_b", {pick_conditions("beaker_b", kTableTop)}},
           {"place_b", {place_b}},
           {"pick_a", {pick_conditions("beaker_a", kTableTop)}},
           {"place_a", {place_a}},
           {"close_door", {closed}}},
          concat({place_a, place_b, closed, safety(), {cond(ConditionKind::kNotHeld, "door_handle")}}),
          {manip::open_door("door", open), manip::pick("beaker_b"),
           manip::place("beaker_b", "cabinet_floor", kSlotB), manip::pick("beaker_a"),
           manip::place("beaker_a", "cabinet_floor", kSlotA), manip::close_door("door")}};
}

Draft tmpl_liquid_fusion(Builder& b) {
  const ContainerVariant nominal = kContainers.id.front();
  const Vec2 acid_xy = b.spot(kBeakerR);
  const Vec2 base_xy = b.spot(kBeakerR);
  b.container("acid", nominal, acid_xy);
  b.container("base", nominal, base_xy);
  b.container("target", nominal, b.spot(kBeakerR));
  const double mol = b.rng().uniform(0.01, 0.03);
  b.fill("acid", "water", 40.0);
  b.fill_mol("acid", "hcl", mol);
  b.fill("base", "water", 40.0);
  b.fill_mol("base", "naoh", mol);
  const Condition salt_in_base = cond(ConditionKind::kSubstanceAtLeast, "base", kReactedFraction * mol, "nacl");
  const Condition salt_in_target = cond(ConditionKind::kSubstanceAtLeast, "target", kReactedFraction * mol, "nacl");
  auto acid_back = place_conditions("acid", "lab_bench", acid_xy);
  auto base_back = place_conditions("base", "lab_bench", base_xy);
  return {{{"pick_acid", {pick_conditions("acid", kTableTop)}},
           {"pour_acid", {pour_conditions("acid", salt_in_base)}},
           {"place_acid", {acid_back}},
           {"pick_base", {pick_conditions("base", kTableTop)}},
           {"shake_base", {shake_conditions("base")}},
           {"pour_base", {pour_conditions("base", salt_in_target)}},
           {"place_base", {base_back}}},
          concat({acid_back, base_back, safety(),
                  {salt_in_target, cond(ConditionKind::kVolumeAtMost, "base", kEmptyMl)}}),
          {manip::pick("acid"), manip::pour("acid", "base"), manip::place("acid", "lab_bench", acid_xy),
           manip::pick("base"), manip::shake("base"), manip::pour("base", "target"),
           manip::place("base", "lab_bench", base_xy)}};
}

// ---------------------------------------------------------------------------
// Level 5: navigate to the main bench, then pick a beaker from it.

constexpr double kNavMinTravelM = 2.0;
constexpr Vec3 kEeInBase{0.3, 0.0, 1.1};

constexpr int kNavLayoutAttempts = 20;
constexpr int kNavItemAttempts = 50;

std::optional<TaskInstance> nav_pick_in(const scene::SceneLayout& layout, std::uint64_t seed, Rng& rng,
                                        const BenchContext& ctx) {
  const nav::OccupancyGrid inflated = nav::inflate(nav::build_occupancy(layout), nav::kCollisionRadiusM);
  const scene::Placement* bench = layout.find("lab_bench_main");
  if (bench == nullptr) return std::nullopt;

  std::vector<nav::GridIndex> free_cells;
  for (int r = 0; r < inflated.height; ++r) {
    for (int c = 0; c < inflated.width; ++c) {
      if (inflated.free({r, c})) free_cells.push_back({r, c});
    }
  }

  for (int attempt = 0; attempt < kNavItemAttempts; ++attempt) {
    const Vec2 margin = bench->footprint_half_extents - Vec2{0.08, 0.08};
    const Vec3 local{rng.uniform(-margin.x, margin.x), rng.uniform(-margin.y, margin.y), 0.0};
    const Vec2 item = transform_point(bench->world_pose, local).xy();

    std::vector<nav::GridIndex> goals;
    for (const nav::GridIndex g : free_cells) {
      if (norm(inflated.cell_center(g) - item) <= kNavGoalReachM) goals.push_back(g);
    }
    if (goals.empty()) continue;
    const Vec2 goal = inflated.cell_center(rng.pick(goals));

    std::vector<nav::GridIndex> starts;
    for (const nav::GridIndex s : free_cells) {
      if (norm(inflated.cell_center(s) - goal) >= kNavMinTravelM) starts.push_back(s);
    }
    if (starts.empty()) continue;
    const Vec2 start = inflated.cell_center(rng.pick(starts));

    nav::NavPath path;
    try {
      path = nav::plan_on_inflated(inflated, start, goal);
    } catch (const Error&) {
      continue;
    }

    WorldState w = scene::layout_to_world(layout, ctx.catalog);
    w.chemistry = ctx.chemistry;
    w.rng_seed = seed;
    const double top = bench->height_m;
    ContainerState beaker = world::make_beaker("beaker", item, top);
    beaker.object.pose.orientation = Quat::from_yaw(rng.uniform(-kPi, kPi));
    beaker.object.tags = {kContainers.id.front().tag};
    w.containers.emplace("beaker", std::move(beaker));
    const world::BasePose base{start.x, start.y, rng.uniform(-kPi, kPi)};
    w.agent.base_pose = base;
    const Pose frame{{base.x, base.y, 0.0}, Quat::from_yaw(base.yaw)};
    w.agent.ee_pose = frame * Pose{kEeInBase, w.agent.ee_pose.orientation};

    const double heading = std::atan2(item.y - goal.y, item.x - goal.x);
    TaskInstance inst;
    inst.world = std::move(w);
    inst.stages = {{"navigate",
                    {{cond(ConditionKind::kBaseNear, {}, nav::kArrivalToleranceM, {}, {goal.x, goal.y, 0.0}),
                      cond(ConditionKind::kNoBaseCollision)}}},
                   {"orient",
                    {{cond(ConditionKind::kBaseHeading, {}, nav::kHeadingToleranceRad, {},
                           {std::cos(heading), std::sin(heading), 0.0})}}},
                   {"pick", {pick_conditions("beaker", top)}}};
    inst.goal.all = concat({pick_conditions("beaker", top), safety(),
                            {cond(ConditionKind::kNoBaseCollision),
                             cond(ConditionKind::kBaseNear, {}, 1.5 * nav::kArrivalToleranceM, {},
                                  {goal.x, goal.y, 0.0})}});
    inst.plan = {manip::pick("beaker")};
    inst.nav = NavSetup{inflated, std::move(path), goal, heading, "beaker"};
    return inst;
  }
  return std::nullopt;
}

// A layout without a reachable pick pose is replaced by the next one.
TaskInstance nav_pick(std::uint64_t seed, const BenchContext& ctx) {
  Rng rng(seed);
  for (int attempt = 0; attempt < kNavLayoutAttempts; ++attempt) {
    const scene::SceneLayout layout = scene::place_all(ctx.room, ctx.catalog, {}, rng.next());
    if (auto inst = nav_pick_in(layout, seed, rng, ctx)) return std::move(*inst);
  }
  throw Error(ErrorCode::kInfeasible, "no reachable start/goal pair near the bench");
}

using Template = std::function<Draft(Builder&)>;

const std::map<std::string, Template, std::less<>>& templates() {
  static const std::map<std::string, Template, std::less<>> kTemplates{
      {"pick", tmpl_pick},
      {"pour", tmpl_pour},
      {"place", tmpl_place},
      {"press", tmpl_press},
      {"shake", tmpl_shake},
      {"stir", tmpl_stir},
      {"open_door", tmpl_open_door},
      {"close_door", tmpl_close_door},
      {"open_drawer", tmpl_open_drawer},
      {"close_drawer", tmpl_close_drawer},
      {"pour_liquid", tmpl_pour_liquid},
      {"shake_beaker", tmpl_shake_beaker},
      {"heater_beaker", tmpl_heater_beaker},
      {"operate_drawer", tmpl_operate_drawer},
      {"stir_glass_rod", tmpl_stir_glass_rod},
      {"transport_beaker", tmpl_transport_beaker},
      {"clean_beaker", tmpl_clean_beaker},
      {"drying_beakers", tmpl_drying_beakers},
      {"liquid_fusion", tmpl_liquid_fusion},
  };
  return kTemplates;
}

}  // namespace

TaskInstance instantiate(const TaskSpec& task, std::uint64_t seed, const BenchContext& context) {
  const std::uint64_t s = instance_seed(task, seed);
  TaskInstance inst;
  if (task.template_name == "nav_pick") {
    inst = nav_pick(s, context);
  } else {
    const auto it = templates().find(task.template_name);
    if (it == templates().end()) throw Error(ErrorCode::kUnknownTask, "template '" + task.template_name + "'");
    Rng variant_rng(s ^ 0x5bd1e995ULL);
    Variants variants = sample_variants(task.template_name, task.split, variant_rng);
    inst.variant_tags = variants.tags;
    Builder builder(context, s, std::move(variants));
    Draft draft = it->second(builder);
    inst.world = std::move(builder.world());
    inst.stages = std::move(draft.stages);
    inst.goal.all = std::move(draft.goal);
    inst.plan = std::move(draft.plan);
  }
  if (inst.stages.size() != task.stage_labels.size()) {
    throw Error(ErrorCode::kSchemaError, "task '" + task.id + "' lists " + std::to_string(task.stage_labels.size()) +
                                             " stages, template builds " + std::to_string(inst.stages.size()));
  }
  for (std::size_t k = 0; k < inst.stages.size(); ++k) inst.stages[k].label = task.stage_labels[k];
  return inst;
}

std::vector<std::string> variant_pool_tags(std::string_view template_name, Split split) {
  const unsigned dims = varied_dims(template_name);
  std::vector<std::string> tags;
  if (dims & (kDimContainer | kDimSecondContainer)) {
    for (const auto& v : kContainers.of(split)) tags.push_back(v.tag);
  }
  if (dims & kDimMaterial) tags.insert(tags.end(), kMaterials.of(split).begin(), kMaterials.of(split).end());
  if (dims & kDimButtonColor) {
    tags.insert(tags.end(), kButtonColors.of(split).begin(), kButtonColors.of(split).end());
  }
  if (dims & kDimButtonSlot) {
    for (const auto& v : kButtonSlots.of(split)) tags.push_back(v.tag);
  }
  if (dims & kDimHandle) {
    for (const auto& v : kHandles.of(split)) tags.push_back(v.tag);
  }
  if (dims & kDimTarget) {
    for (const auto& v : kTargets.of(split)) tags.push_back(v.tag);
  }
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  return tags;
}

}  // namespace labsim::bench
