#include "labsim/chem/mixture.hpp"

#include <algorithm>
#include <cmath>

#include "labsim/core/error.hpp"

namespace labsim::chem {

namespace {

// Residues this far below the largest component are floating-point noise from
// stoichiometric subtraction, not chemistry.
constexpr double kRelativePruneThreshold = 1e-12;

bool has_volume(Phase phase) { return phase != Phase::kGas; }
bool is_liquid(Phase phase) { return phase == Phase::kLiquid || phase == Phase::kAqueous; }

}  // namespace

Mixture::Mixture(std::initializer_list<Component> components, double temperature_c)
    : temperature_c_(temperature_c) {
  for (const Component& c : components) add(c.substance_id, c.amount_mol);
}

double Mixture::amount_of(std::string_view id) const {
  const auto it = std::lower_bound(
      components_.begin(), components_.end(), id,
      [](const Component& c, std::string_view key) { return c.substance_id < key; });
  return (it != components_.end() && it->substance_id == id) ? it->amount_mol : 0.0;
}

void Mixture::add(std::string_view id, double delta_mol) {
  if (!std::isfinite(delta_mol)) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite amount for " + std::string(id));
  }
  auto it = std::lower_bound(
      components_.begin(), components_.end(), id,
      [](const Component& c, std::string_view key) { return c.substance_id < key; });
  if (it != components_.end() && it->substance_id == id) {
    it->amount_mol = std::max(0.0, it->amount_mol + delta_mol);
  } else if (delta_mol > 0.0) {
    components_.insert(it, Component{std::string(id), delta_mol});
  }
  prune();
}

void Mixture::set(std::string_view id, double amount_mol) {
  if (!std::isfinite(amount_mol)) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite amount for " + std::string(id));
  }
  auto it = std::lower_bound(
      components_.begin(), components_.end(), id,
      [](const Component& c, std::string_view key) { return c.substance_id < key; });
  if (it != components_.end() && it->substance_id == id) {
    it->amount_mol = std::max(0.0, amount_mol);
  } else if (amount_mol > 0.0) {
    components_.insert(it, Component{std::string(id), amount_mol});
  }
  prune();
}

void Mixture::scale(double factor) {
  for (Component& c : components_) c.amount_mol *= factor;
  prune();
}

Mixture Mixture::take_fraction(double fraction) {
  fraction = std::clamp(fraction, 0.0, 1.0);
  Mixture taken;
  taken.temperature_c_ = temperature_c_;
  if (fraction == 0.0) return taken;
  if (fraction == 1.0) {
    taken.components_ = std::move(components_);
    components_.clear();
    return taken;
  }
  for (Component& c : components_) {
    const double moved = c.amount_mol * fraction;
    taken.components_.push_back({c.substance_id, moved});
    c.amount_mol -= moved;
  }
  taken.prune();
  prune();
  return taken;
}

void Mixture::merge(const Mixture& other) {
  for (const Component& c : other.components_) add(c.substance_id, c.amount_mol);
}

void Mixture::prune() {
  double largest = 0.0;
  for (const Component& c : components_) largest = std::max(largest, c.amount_mol);
  const double threshold = largest * kRelativePruneThreshold;
  std::erase_if(components_,
                [&](const Component& c) { return c.amount_mol <= 0.0 || c.amount_mol <= threshold; });
}

double component_volume_ml(const Component& c, const SubstanceDatabase& db) {
  const SubstanceRecord& rec = db.at(c.substance_id);
  if (!has_volume(rec.phase)) return 0.0;
  return c.amount_mol * rec.molar_mass_g_per_mol / rec.density_g_per_ml;
}

double liquid_volume_ml(const Mixture& mix, const SubstanceDatabase& db) {
  double total = 0.0;
  for (const Component& c : mix.components()) {
    const SubstanceRecord& rec = db.at(c.substance_id);
    if (is_liquid(rec.phase)) total += c.amount_mol * rec.molar_mass_g_per_mol / rec.density_g_per_ml;
  }
  return total;
}

double mass_g(const Mixture& mix, const SubstanceDatabase& db) {
  double total = 0.0;
  for (const Component& c : mix.components()) {
    total += c.amount_mol * db.at(c.substance_id).molar_mass_g_per_mol;
  }
  return total;
}

Rgba mixture_color(const Mixture& mix, const SubstanceDatabase& db) {
  double weight = 0.0;
  Rgba sum;
  for (const Component& c : mix.components()) {
    const double v = component_volume_ml(c, db);
    const Rgba& col = db.at(c.substance_id).color;
    sum.r += v * col.r;
    sum.g += v * col.g;
    sum.b += v * col.b;
    sum.a += v * col.a;
    weight += v;
  }
  if (weight <= 0.0) return {};
  const auto unit = [](double x) { return std::clamp(x, 0.0, 1.0); };
  return {unit(sum.r / weight), unit(sum.g / weight), unit(sum.b / weight), unit(sum.a / weight)};
}

std::optional<double> mixture_ph(const Mixture& mix, const SubstanceDatabase& db) {
  double weight = 0.0;
  double sum = 0.0;
  for (const Component& c : mix.components()) {
    const SubstanceRecord& rec = db.at(c.substance_id);
    if (!rec.ph) continue;
    const double v = component_volume_ml(c, db);
    sum += v * *rec.ph;
    weight += v;
  }
  if (weight <= 0.0) return std::nullopt;
  return std::clamp(sum / weight, 0.0, 14.0);
}

void to_json(Json& j, const Mixture& m) {
  Json comps = Json::array();
  for (const Component& c : m.components()) {
    comps.push_back({{"id", c.substance_id}, {"mol", c.amount_mol}});
  }
  j = Json{{"components", comps}, {"temperature_c", m.temperature_c()}};
}

void from_json(const Json& j, Mixture& m) {
  m = Mixture{};
  for (const Json& c : j.at("components")) {
    m.add(c.at("id").get<std::string>(), c.at("mol").get<double>());
  }
  m.set_temperature_c(j.value("temperature_c", 20.0));
}

}  // namespace labsim::chem
