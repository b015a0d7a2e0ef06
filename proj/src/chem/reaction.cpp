#include "labsim/chem/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "labsim/core/error.hpp"

namespace labsim::chem {

namespace {

constexpr int kMaxRuleApplications = 10000;

std::vector<StoichTerm> terms_from_json(const Json& j) {
  std::vector<StoichTerm> terms;
  for (const Json& t : j) {
    StoichTerm term;
    term.substance_id = t.at("id").get<std::string>();
    const Json& coeff = t.at("coeff");
    if (!coeff.is_number_integer()) {
      throw Error(ErrorCode::kSchemaError, "stoichiometric coefficient must be an integer");
    }
    term.coefficient = coeff.get<int>();
    terms.push_back(std::move(term));
  }
  return terms;
}

Json terms_to_json(const std::vector<StoichTerm>& terms) {
  Json out = Json::array();
  for (const StoichTerm& t : terms) out.push_back({{"id", t.substance_id}, {"coeff", t.coefficient}});
  return out;
}

double terms_mass(const std::vector<StoichTerm>& terms, const SubstanceDatabase& db) {
  double m = 0.0;
  for (const StoichTerm& t : terms) m += t.coefficient * db.at(t.substance_id).molar_mass_g_per_mol;
  return m;
}

}  // namespace

std::string_view to_string(Effect effect) {
  switch (effect) {
    case Effect::kColorChange: return "color_change";
    case Effect::kGasEvolution: return "gas_evolution";
    case Effect::kPrecipitate: return "precipitate";
    case Effect::kExothermic: return "exothermic";
  }
  return "color_change";
}

Effect effect_from_string(std::string_view text) {
  if (text == "color_change") return Effect::kColorChange;
  if (text == "gas_evolution") return Effect::kGasEvolution;
  if (text == "precipitate") return Effect::kPrecipitate;
  if (text == "exothermic") return Effect::kExothermic;
  throw Error(ErrorCode::kSchemaError, "unknown effect '" + std::string(text) + "'");
}

void to_json(Json& j, const ReactionRule& r) {
  Json effects = Json::array();
  for (Effect e : r.effects) effects.push_back(to_string(e));
  j = Json{{"id", r.id},
           {"reactants", terms_to_json(r.reactants)},
           {"products", terms_to_json(r.products)},
           {"effects", effects},
           {"priority", r.priority}};
}

void from_json(const Json& j, ReactionRule& r) {
  r.id = j.value("id", std::string{});
  r.reactants = terms_from_json(j.at("reactants"));
  r.products = terms_from_json(j.at("products"));
  r.effects.clear();
  for (const Json& e : j.value("effects", Json::array())) {
    r.effects.push_back(effect_from_string(e.get<std::string>()));
  }
  std::sort(r.effects.begin(), r.effects.end());
  r.effects.erase(std::unique(r.effects.begin(), r.effects.end()), r.effects.end());
  r.priority = j.value("priority", 0);
  if (r.id.empty()) {
    for (const StoichTerm& t : r.reactants) r.id += (r.id.empty() ? "" : "+") + t.substance_id;
  }
}

double reactant_mass_g_per_mol(const ReactionRule& rule, const SubstanceDatabase& db) {
  return terms_mass(rule.reactants, db);
}

double mass_imbalance_g_per_mol(const ReactionRule& rule, const SubstanceDatabase& db) {
  return terms_mass(rule.products, db) - terms_mass(rule.reactants, db);
}

std::optional<std::string> validate_rule(const ReactionRule& rule, const SubstanceDatabase& db,
                                         double max_relative_imbalance) {
  if (rule.reactants.empty() || rule.products.empty()) {
    return "rule " + rule.id + " has an empty reactant or product list";
  }
  for (const auto* side : {&rule.reactants, &rule.products}) {
    for (const StoichTerm& t : *side) {
      if (t.coefficient <= 0) return "rule " + rule.id + " has a non-positive coefficient";
      if (!db.contains(t.substance_id)) {
        return "rule " + rule.id + " references unknown substance '" + t.substance_id + "'";
      }
    }
  }
  const double reactant_mass = reactant_mass_g_per_mol(rule, db);
  const double imbalance = std::abs(mass_imbalance_g_per_mol(rule, db));
  if (imbalance > max_relative_imbalance * reactant_mass) {
    return "rule " + rule.id + " violates mass balance by " + std::to_string(imbalance) + " g/mol";
  }
  return std::nullopt;
}

bool is_applicable(const ReactionRule& rule, const Mixture& mix) {
  return std::all_of(rule.reactants.begin(), rule.reactants.end(),
                     [&](const StoichTerm& t) { return mix.amount_of(t.substance_id) > 0.0; });
}

RuleTableOracle::RuleTableOracle(std::vector<ReactionRule> rules) : rules_(std::move(rules)) {}

RuleTableOracle RuleTableOracle::from_json(const Json& doc, const SubstanceDatabase& db) {
  std::vector<ReactionRule> rules;
  try {
    for (const Json& entry : doc.at("rules")) rules.push_back(entry.get<ReactionRule>());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("reactions: ") + e.what());
  }
  for (const ReactionRule& r : rules) {
    // shipped tables are balanced to molar-mass rounding; 1% is the external bound
    if (auto reason = validate_rule(r, db, 0.01)) throw Error(ErrorCode::kSchemaError, *reason);
  }
  return RuleTableOracle(std::move(rules));
}

RuleTableOracle RuleTableOracle::load(const std::filesystem::path& path,
                                      const SubstanceDatabase& db) {
  return from_json(read_json_file(path), db);
}

std::vector<ReactionRule> RuleTableOracle::propose(const Mixture& mix) const {
  std::vector<ReactionRule> out;
  for (const ReactionRule& r : rules_) {
    if (is_applicable(r, mix)) out.push_back(r);
  }
  return out;
}

ResolveResult resolve_reactions(const Mixture& mix, const ReactionOracle& oracle,
                                const SubstanceDatabase& db) {
  for (const Component& c : mix.components()) db.at(c.substance_id);

  ResolveResult result{mix, {}};
  Mixture& current = result.mixture;
  for (int applied = 0;; ++applied) {
    std::vector<ReactionRule> candidates = oracle.propose(current);
    std::erase_if(candidates, [&](const ReactionRule& r) { return !is_applicable(r, current); });
    if (candidates.empty()) break;
    if (applied >= kMaxRuleApplications) {
      throw Error(ErrorCode::kReactionCycle, "rule application did not reach a fixed point");
    }
    const auto best = std::min_element(
        candidates.begin(), candidates.end(), [](const ReactionRule& a, const ReactionRule& b) {
          if (a.priority != b.priority) return a.priority > b.priority;
          return a.id < b.id;
        });
    const ReactionRule& rule = *best;

    double extent = std::numeric_limits<double>::infinity();
    std::size_t limiting = 0;
    for (std::size_t i = 0; i < rule.reactants.size(); ++i) {
      const StoichTerm& t = rule.reactants[i];
      const double e = current.amount_of(t.substance_id) / t.coefficient;
      if (e < extent) {
        extent = e;
        limiting = i;
      }
    }

    ReactionOutcome outcome;
    outcome.rule_id = rule.id;
    for (std::size_t i = 0; i < rule.reactants.size(); ++i) {
      const StoichTerm& t = rule.reactants[i];
      const double available = current.amount_of(t.substance_id);
      const double used = i == limiting ? available : std::min(available, t.coefficient * extent);
      outcome.consumed.push_back({t.substance_id, used});
      if (i == limiting) {
        current.set(t.substance_id, 0.0);
      } else {
        current.set(t.substance_id, available - used);
      }
    }
    for (const StoichTerm& t : rule.products) {
      const double made = t.coefficient * extent;
      outcome.produced.push_back({t.substance_id, made});
      current.add(t.substance_id, made);
    }
    outcome.events = rule.effects;
    if (std::find(rule.effects.begin(), rule.effects.end(), Effect::kColorChange) !=
        rule.effects.end()) {
      outcome.new_color_rgba = mixture_color(current, db);
    }
    result.outcomes.push_back(std::move(outcome));
  }
  return result;
}

std::shared_ptr<const Chemistry> Chemistry::load(const std::filesystem::path& substances_path,
                                                 const std::filesystem::path& reactions_path) {
  auto chem = std::make_shared<Chemistry>();
  chem->substances = SubstanceDatabase::load(substances_path);
  chem->rules = RuleTableOracle::load(reactions_path, chem->substances);
  return chem;
}

}  // namespace labsim::chem
