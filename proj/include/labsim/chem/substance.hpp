#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labsim/core/json.hpp"

namespace labsim::chem {

enum class Phase { kSolid, kLiquid, kGas, kAqueous };

std::string_view to_string(Phase phase);
Phase phase_from_string(std::string_view text);

struct Rgba {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  double a = 0.0;

  friend bool operator==(const Rgba&, const Rgba&) = default;
};

struct SubstanceRecord {
  std::string id;
  std::string name;
  std::string formula;
  Rgba color;
  double molar_mass_g_per_mol = 0.0;
  std::optional<double> ph;  // none for non-aqueous substances
  Phase phase = Phase::kLiquid;
  double density_g_per_ml = 1.0;

  friend bool operator==(const SubstanceRecord&, const SubstanceRecord&) = default;
};

// Immutable after load; safe to share between episode workers.
class SubstanceDatabase {
 public:
  SubstanceDatabase() = default;

  static SubstanceDatabase from_json(const Json& doc);
  static SubstanceDatabase load(const std::filesystem::path& path);

  // Validates the record; duplicate ids are rejected.
  void add(SubstanceRecord record);

  const SubstanceRecord& at(std::string_view id) const;
  bool contains(std::string_view id) const;
  std::size_t size() const { return records_.size(); }
  const std::map<std::string, SubstanceRecord, std::less<>>& records() const { return records_; }

  const std::string& source_note() const { return source_note_; }
  void set_source_note(std::string note) { source_note_ = std::move(note); }

 private:
  std::map<std::string, SubstanceRecord, std::less<>> records_;
  std::string source_note_;
};

void to_json(Json& j, const SubstanceRecord& r);
void from_json(const Json& j, SubstanceRecord& r);
void to_json(Json& j, const Rgba& c);
void from_json(const Json& j, Rgba& c);

}  // namespace labsim::chem
