#include "labsim/chem/substance.hpp"

#include <cmath>

#include "labsim/core/error.hpp"

namespace labsim::chem {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kSolid: return "solid";
    case Phase::kLiquid: return "liquid";
    case Phase::kGas: return "gas";
    case Phase::kAqueous: return "aqueous";
  }
  return "liquid";
}

Phase phase_from_string(std::string_view text) {
  if (text == "solid") return Phase::kSolid;
  if (text == "liquid") return Phase::kLiquid;
  if (text == "gas") return Phase::kGas;
  if (text == "aqueous") return Phase::kAqueous;
  throw Error(ErrorCode::kSchemaError, "unknown phase '" + std::string(text) + "'");
}

void to_json(Json& j, const Rgba& c) { j = Json::array({c.r, c.g, c.b, c.a}); }
void from_json(const Json& j, Rgba& c) {
  c.r = j.at(0).get<double>();
  c.g = j.at(1).get<double>();
  c.b = j.at(2).get<double>();
  c.a = j.at(3).get<double>();
}

void to_json(Json& j, const SubstanceRecord& r) {
  j = Json{{"id", r.id},
           {"name", r.name},
           {"formula", r.formula},
           {"color_rgba", r.color},
           {"molar_mass_g_per_mol", r.molar_mass_g_per_mol},
           {"ph", r.ph ? Json(*r.ph) : Json(nullptr)},
           {"phase", to_string(r.phase)},
           {"density_g_per_ml", r.density_g_per_ml}};
}

void from_json(const Json& j, SubstanceRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.name = j.value("name", r.id);
  r.formula = j.value("formula", std::string{});
  r.color = j.at("color_rgba").get<Rgba>();
  r.molar_mass_g_per_mol = j.at("molar_mass_g_per_mol").get<double>();
  const Json& ph = j.at("ph");
  r.ph = ph.is_null() ? std::nullopt : std::optional<double>(ph.get<double>());
  r.phase = phase_from_string(j.at("phase").get<std::string>());
  r.density_g_per_ml = j.at("density_g_per_ml").get<double>();
}

void SubstanceDatabase::add(SubstanceRecord record) {
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (record.id.empty()) throw Error(ErrorCode::kSchemaError, "substance with empty id");
  if (!(record.molar_mass_g_per_mol > 0.0)) {
    throw Error(ErrorCode::kSchemaError, record.id + ": molar mass must be positive");
  }
  if (!(record.density_g_per_ml > 0.0)) {
    throw Error(ErrorCode::kSchemaError, record.id + ": density must be positive");
  }
  if (!in_unit(record.color.r) || !in_unit(record.color.g) || !in_unit(record.color.b) ||
      !in_unit(record.color.a)) {
    throw Error(ErrorCode::kSchemaError, record.id + ": color components must lie in [0,1]");
  }
  if (record.ph && (*record.ph < 0.0 || *record.ph > 14.0)) {
    throw Error(ErrorCode::kSchemaError, record.id + ": pH must lie in [0,14]");
  }
  const std::string id = record.id;
  if (!records_.emplace(id, std::move(record)).second) {
    throw Error(ErrorCode::kSchemaError, "duplicate substance id '" + id + "'");
  }
}

const SubstanceRecord& SubstanceDatabase::at(std::string_view id) const {
  const auto it = records_.find(id);
  if (it == records_.end()) {
    throw Error(ErrorCode::kUnknownSubstance, "'" + std::string(id) + "'");
  }
  return it->second;
}

bool SubstanceDatabase::contains(std::string_view id) const { return records_.contains(id); }

SubstanceDatabase SubstanceDatabase::from_json(const Json& doc) {
  SubstanceDatabase db;
  try {
    db.source_note_ = doc.value("source_note", std::string{});
    for (const Json& entry : doc.at("records")) db.add(entry.get<SubstanceRecord>());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("substances: ") + e.what());
  }
  return db;
}

SubstanceDatabase SubstanceDatabase::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

}  // namespace labsim::chem
