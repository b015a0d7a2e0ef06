#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labsim/chem/substance.hpp"

namespace labsim::chem {

struct Component {
  std::string substance_id;
  double amount_mol = 0.0;

  friend bool operator==(const Component&, const Component&) = default;
};

// Container contents. Components are kept sorted by substance id and
// zero-amount entries are pruned after every mutation.
class Mixture {
 public:
  Mixture() = default;
  Mixture(std::initializer_list<Component> components, double temperature_c = 20.0);

  const std::vector<Component>& components() const { return components_; }
  bool empty() const { return components_.empty(); }
  double amount_of(std::string_view id) const;

  // Adds (or with negative delta removes) an amount; the result is clamped at zero.
  void add(std::string_view id, double delta_mol);
  void set(std::string_view id, double amount_mol);
  void scale(double factor);
  // Removes `fraction` of every component and returns it as a new mixture.
  Mixture take_fraction(double fraction);
  void merge(const Mixture& other);

  double temperature_c() const { return temperature_c_; }
  void set_temperature_c(double t) { temperature_c_ = t; }

  friend bool operator==(const Mixture&, const Mixture&) = default;

 private:
  void prune();

  std::vector<Component> components_;
  double temperature_c_ = 20.0;
};

// Sum of amount * molar_mass / density over liquid and aqueous components.
double liquid_volume_ml(const Mixture& mix, const SubstanceDatabase& db);
double component_volume_ml(const Component& c, const SubstanceDatabase& db);
double mass_g(const Mixture& mix, const SubstanceDatabase& db);

// Volume-weighted mean colour; an empty (or gas-only) mixture is fully transparent.
Rgba mixture_color(const Mixture& mix, const SubstanceDatabase& db);

// Volume-weighted mean pH over pH-bearing components, clamped to [0, 14].
// This is an attribute-level simplification, not H+ concentration arithmetic.
std::optional<double> mixture_ph(const Mixture& mix, const SubstanceDatabase& db);

void to_json(Json& j, const Mixture& m);
void from_json(const Json& j, Mixture& m);

}  // namespace labsim::chem
