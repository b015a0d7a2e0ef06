#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "labsim/chem/mixture.hpp"
#include "labsim/chem/substance.hpp"

namespace labsim::chem {

enum class Effect { kColorChange, kGasEvolution, kPrecipitate, kExothermic };

std::string_view to_string(Effect effect);
Effect effect_from_string(std::string_view text);

struct StoichTerm {
  std::string substance_id;
  int coefficient = 1;

  friend bool operator==(const StoichTerm&, const StoichTerm&) = default;
};

struct ReactionRule {
  std::string id;
  std::vector<StoichTerm> reactants;
  std::vector<StoichTerm> products;
  std::vector<Effect> effects;  // kept sorted and unique
  int priority = 0;

  friend bool operator==(const ReactionRule&, const ReactionRule&) = default;
};

struct ReactionOutcome {
  std::string rule_id;
  std::vector<Component> consumed;
  std::vector<Component> produced;
  std::optional<Rgba> new_color_rgba;
  std::vector<Effect> events;

  friend bool operator==(const ReactionOutcome&, const ReactionOutcome&) = default;
};

void to_json(Json& j, const ReactionRule& r);
void from_json(const Json& j, ReactionRule& r);

// Sum of product masses minus reactant masses per unit extent, g/mol.
double mass_imbalance_g_per_mol(const ReactionRule& rule, const SubstanceDatabase& db);
double reactant_mass_g_per_mol(const ReactionRule& rule, const SubstanceDatabase& db);

// Structural checks plus a relative mass-balance bound. Returns a reason on failure.
std::optional<std::string> validate_rule(const ReactionRule& rule, const SubstanceDatabase& db,
                                         double max_relative_imbalance);

bool is_applicable(const ReactionRule& rule, const Mixture& mix);

// Decides which transformations a mixture may undergo.
class ReactionOracle {
 public:
  virtual ~ReactionOracle() = default;
  // Candidate rules for the mixture; may include rules that are not currently
  // applicable. Throws Error(kOracleFailure) when the oracle cannot answer.
  virtual std::vector<ReactionRule> propose(const Mixture& mix) const = 0;
};

// Deterministic default oracle backed by a fixed rule table.
class RuleTableOracle final : public ReactionOracle {
 public:
  RuleTableOracle() = default;
  explicit RuleTableOracle(std::vector<ReactionRule> rules);

  static RuleTableOracle from_json(const Json& doc, const SubstanceDatabase& db);
  static RuleTableOracle load(const std::filesystem::path& path, const SubstanceDatabase& db);

  std::vector<ReactionRule> propose(const Mixture& mix) const override;
  const std::vector<ReactionRule>& rules() const { return rules_; }

 private:
  std::vector<ReactionRule> rules_;
};

struct ResolveResult {
  Mixture mixture;
  std::vector<ReactionOutcome> outcomes;
};

// Applies oracle-selected rules to completion under limiting-reagent
// stoichiometry, highest priority first (ties by rule id), until no rule fires.
ResolveResult resolve_reactions(const Mixture& mix, const ReactionOracle& oracle,
                                const SubstanceDatabase& db);

// Substance database plus the rule-table oracle the simulator uses.
struct Chemistry {
  SubstanceDatabase substances;
  RuleTableOracle rules;

  static std::shared_ptr<const Chemistry> load(const std::filesystem::path& substances_path,
                                               const std::filesystem::path& reactions_path);
};

}  // namespace labsim::chem
