#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "labsim/chem/external_oracle.hpp"
#include "labsim/chem/reaction.hpp"
#include "labsim/core/error.hpp"
#include "labsim/core/random.hpp"

using namespace labsim;
using namespace labsim::chem;

namespace {

const std::string kDataDir = LABSIM_DATA_DIR;

std::shared_ptr<const Chemistry> shipped() {
  static const auto chem =
      Chemistry::load(kDataDir + "/substances.json", kDataDir + "/reactions.json");
  return chem;
}

SubstanceRecord liquid(std::string id, Rgba color, std::optional<double> ph) {
  SubstanceRecord r;
  r.id = id;
  r.name = id;
  r.color = color;
  r.molar_mass_g_per_mol = 10.0;
  r.ph = ph;
  r.phase = Phase::kLiquid;
  r.density_g_per_ml = 1.0;
  return r;
}

// Serves every shipped rule, as an external service mirroring the table would.
Transport mirror_transport(const RuleTableOracle& table, std::atomic<int>& calls) {
  return [&table, &calls](const std::string&, const std::string&, std::chrono::milliseconds) {
    ++calls;
    return Json(table.rules()).dump();
  };
}

}  // namespace

TEST_CASE("shipped database covers the desk-scale substance set") {
  const auto chem = shipped();
  CHECK(chem->substances.size() >= 25);
  CHECK(chem->substances.at("hcl").molar_mass_g_per_mol == 36.46);
  CHECK(chem->substances.at("naoh").molar_mass_g_per_mol == 40.00);
  CHECK(chem->substances.at("nacl").molar_mass_g_per_mol == 58.44);
  CHECK(chem->substances.at("water").molar_mass_g_per_mol == 18.02);
  CHECK_THROWS_AS(chem->substances.at("unobtainium"), Error);
}

TEST_CASE("every shipped rule balances within rounding") {
  for (const ReactionRule& rule : shipped()->rules.rules()) {
    INFO(rule.id);
    CHECK(std::abs(mass_imbalance_g_per_mol(rule, shipped()->substances)) <= 0.1);
  }
}

TEST_CASE("database rejects duplicates and out-of-range attributes") {
  SubstanceDatabase db;
  db.add(liquid("a", {1, 0, 0, 1}, 7.0));
  CHECK_THROWS_AS(db.add(liquid("a", {1, 0, 0, 1}, 7.0)), Error);
  CHECK_THROWS_AS(db.add(liquid("b", {1.5, 0, 0, 1}, 7.0)), Error);
  CHECK_THROWS_AS(db.add(liquid("c", {1, 0, 0, 1}, 15.0)), Error);
}

TEST_CASE("mixture keeps components sorted and prunes zeros") {
  Mixture m{{"water", 1.0}, {"hcl", 0.5}};
  REQUIRE(m.components().size() == 2);
  CHECK(m.components()[0].substance_id == "hcl");
  m.add("hcl", -0.5);
  CHECK(m.components().size() == 1);
  m.set("water", 0.0);
  CHECK(m.empty());
}

TEST_CASE("take_fraction splits amounts without loss") {
  Mixture m{{"water", 2.0}, {"nacl", 0.4}};
  const Mixture part = m.take_fraction(0.25);
  CHECK(part.amount_of("water") == doctest::Approx(0.5));
  CHECK(m.amount_of("water") + part.amount_of("water") == 2.0);
  CHECK(m.amount_of("nacl") + part.amount_of("nacl") == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("single-substance mixture does not react") {
  const auto chem = shipped();
  const Mixture m{{"water", 3.0}};
  const ResolveResult r = resolve_reactions(m, chem->rules, chem->substances);
  CHECK(r.mixture == m);
  CHECK(r.outcomes.empty());
}

TEST_CASE("equimolar HCl and NaOH neutralize completely") {
  const auto chem = shipped();
  const ResolveResult r =
      resolve_reactions(Mixture{{"hcl", 1.0}, {"naoh", 1.0}}, chem->rules, chem->substances);
  // hand stoichiometry: 1 HCl + 1 NaOH -> 1 NaCl + 1 H2O; 36.46 + 40.00 = 58.44 + 18.02
  CHECK(r.mixture == Mixture{{"nacl", 1.0}, {"water", 1.0}});
  REQUIRE(r.outcomes.size() == 1);
  CHECK(r.outcomes[0].rule_id == "neutralize_hcl_naoh");
  CHECK(r.outcomes[0].new_color_rgba.has_value());
  const auto& events = r.outcomes[0].events;
  CHECK(std::find(events.begin(), events.end(), Effect::kColorChange) != events.end());
  CHECK(mass_g(r.mixture, chem->substances) == doctest::Approx(76.46).epsilon(1e-12));
}

TEST_CASE("excess HCl remains after neutralization") {
  const auto chem = shipped();
  const ResolveResult r =
      resolve_reactions(Mixture{{"hcl", 2.0}, {"naoh", 1.0}}, chem->rules, chem->substances);
  CHECK(r.mixture == Mixture{{"hcl", 1.0}, {"nacl", 1.0}, {"water", 1.0}});
}

TEST_CASE("consumed amounts never exceed what was available") {
  const auto chem = shipped();
  const Mixture start{{"fecl3", 0.2}, {"naoh", 0.5}};
  const ResolveResult r = resolve_reactions(start, chem->rules, chem->substances);
  REQUIRE(r.outcomes.size() == 1);
  for (const Component& c : r.outcomes[0].consumed) CHECK(c.amount_mol <= start.amount_of(c.substance_id));
  // limiting reagent is NaOH: extent 0.5/3
  CHECK(r.mixture.amount_of("naoh") == 0.0);
  CHECK(r.mixture.amount_of("fe_oh_3") == doctest::Approx(0.5 / 3.0).epsilon(1e-14));
}

TEST_CASE("higher priority rule fires first") {
  const auto chem = shipped();
  // indicator (priority 12) competes with neutralization (10) for NaOH
  const ResolveResult r = resolve_reactions(
      Mixture{{"phenolphthalein", 0.01}, {"hcl", 1.0}, {"naoh", 0.5}}, chem->rules, chem->substances);
  REQUIRE(r.outcomes.size() == 2);
  CHECK(r.outcomes[0].rule_id == "indicator_phenolphthalein");
  CHECK(r.outcomes[1].rule_id == "neutralize_hcl_naoh");
}

TEST_CASE("resolve is idempotent and conserves mass on random mixtures") {
  const auto chem = shipped();
  std::vector<std::string> ids;
  for (const auto& [id, rec] : chem->substances.records()) ids.push_back(id);
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    Mixture m;
    const int n = 2 + static_cast<int>(rng.index(5));
    for (int i = 0; i < n; ++i) m.add(rng.pick(ids), rng.uniform(0.01, 2.0));
    const ResolveResult once = resolve_reactions(m, chem->rules, chem->substances);
    const ResolveResult twice = resolve_reactions(once.mixture, chem->rules, chem->substances);
    CHECK(twice.mixture == once.mixture);
    CHECK(twice.outcomes.empty());
    const double before = mass_g(m, chem->substances);
    CHECK(std::abs(mass_g(once.mixture, chem->substances) - before) <= 1e-9 * before);
    for (const Component& c : once.mixture.components()) CHECK(c.amount_mol > 0.0);
  }
}

TEST_CASE("a rule cycle is reported instead of looping") {
  SubstanceDatabase db;
  db.add(liquid("a", {1, 0, 0, 1}, 7.0));
  db.add(liquid("b", {0, 0, 1, 1}, 7.0));
  ReactionRule forward{"ab", {{"a", 1}}, {{"b", 1}}, {}, 0};
  ReactionRule back{"ba", {{"b", 1}}, {{"a", 1}}, {}, 0};
  const RuleTableOracle cyclic({forward, back});
  CHECK_THROWS_AS(resolve_reactions(Mixture{{"a", 1.0}, {"b", 1.0}}, cyclic, db), Error);
}

TEST_CASE("mixture colour is the volume-weighted mean") {
  SubstanceDatabase db;
  db.add(liquid("red", {1, 0, 0, 1}, 1.0));
  db.add(liquid("blue", {0, 0, 1, 1}, 13.0));
  db.add(liquid("oil", {0.9, 0.9, 0.5, 0.5}, std::nullopt));
  CHECK(mixture_color(Mixture{}, db) == Rgba{0, 0, 0, 0});
  CHECK(mixture_color(Mixture{{"red", 2.0}}, db) == Rgba{1, 0, 0, 1});
  CHECK(mixture_color(Mixture{{"red", 1.0}, {"blue", 1.0}}, db) == Rgba{0.5, 0, 0.5, 1});
  CHECK(mixture_ph(Mixture{{"red", 1.0}, {"blue", 1.0}}, db) == 7.0);
  CHECK_FALSE(mixture_ph(Mixture{{"oil", 1.0}}, db).has_value());
  CHECK_THROWS_AS(mixture_color(Mixture{{"ghost", 1.0}}, db), Error);
}

TEST_CASE("pure water has pH 7") {
  CHECK(mixture_ph(Mixture{{"water", 5.0}}, shipped()->substances) == 7.0);
}

TEST_CASE("component set key is canonical") {
  CHECK(component_set_key(Mixture{{"naoh", 1.0}, {"hcl", 2.0}}) ==
        component_set_key(Mixture{{"hcl", 0.1}, {"naoh", 9.0}}));
  CHECK(component_set_key(Mixture{{"naoh", 1.0}, {"hcl", 2.0}}) == "hcl|naoh");
}

TEST_CASE("external oracle mirroring the table gives identical mixtures") {
  const auto chem = shipped();
  std::atomic<int> calls = 0;
  const ExternalOracle external({"http://mock/react", std::chrono::milliseconds(100), {}},
                                chem->substances, mirror_transport(chem->rules, calls));
  const Mixture m{{"hcl", 1.0}, {"naoh", 1.0}};
  CHECK(resolve_reactions(m, external, chem->substances).mixture ==
        resolve_reactions(m, chem->rules, chem->substances).mixture);
}

TEST_CASE("repeated identical mixture hits the cache") {
  const auto chem = shipped();
  std::atomic<int> calls = 0;
  const ExternalOracle external({"http://mock/react", std::chrono::milliseconds(100), {}},
                                chem->substances, mirror_transport(chem->rules, calls));
  external.propose(Mixture{{"water", 1.0}});
  external.propose(Mixture{{"water", 2.0}});
  CHECK(calls == 1);
  CHECK(external.network_calls() == 1);
}

TEST_CASE("responses naming unknown substances are rejected") {
  const auto chem = shipped();
  const Transport bad = [](const std::string&, const std::string&, std::chrono::milliseconds) {
    return std::string(
        R"([{"id":"x","reactants":[{"id":"hcl","coeff":1}],"products":[{"id":"mystery","coeff":1}]}])");
  };
  const ExternalOracle external({"http://mock", std::chrono::milliseconds(10), {}}, chem->substances, bad);
  try {
    external.propose(Mixture{{"hcl", 1.0}});
    FAIL("expected OracleFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOracleFailure);
  }
}

TEST_CASE("responses violating mass balance by more than 1% are rejected") {
  const auto chem = shipped();
  const Transport lossy = [](const std::string&, const std::string&, std::chrono::milliseconds) {
    return std::string(
        R"([{"id":"x","reactants":[{"id":"hcl","coeff":1},{"id":"naoh","coeff":1}],"products":[{"id":"nacl","coeff":1}]}])");
  };
  const ExternalOracle external({"http://mock", std::chrono::milliseconds(10), {}}, chem->substances, lossy);
  CHECK_THROWS_AS(external.propose(Mixture{{"hcl", 1.0}}), Error);
  const Transport garbage = [](const std::string&, const std::string&, std::chrono::milliseconds) {
    return std::string("not json");
  };
  const ExternalOracle broken({"http://mock", std::chrono::milliseconds(10), {}}, chem->substances, garbage);
  CHECK_THROWS_AS(broken.propose(Mixture{{"hcl", 1.0}}), Error);
}

TEST_CASE("fallback oracle answers from the table when the endpoint fails") {
  const auto chem = shipped();
  const Transport down = [](const std::string&, const std::string&, std::chrono::milliseconds) -> std::string {
    throw Error(ErrorCode::kOracleFailure, "connection refused");
  };
  auto external = std::make_shared<ExternalOracle>(
      ExternalOracleConfig{"http://mock", std::chrono::milliseconds(10), {}}, chem->substances, down);
  auto table = std::make_shared<RuleTableOracle>(chem->rules);
  const FallbackOracle oracle(external, table);
  const Mixture m{{"hcl", 1.0}, {"naoh", 1.0}};
  CHECK(resolve_reactions(m, oracle, chem->substances).mixture ==
        resolve_reactions(m, chem->rules, chem->substances).mixture);
  CHECK(oracle.fallback_count() >= 1);
}

TEST_CASE("http transport talks to a live endpoint") {
  const auto chem = shipped();
  httplib::Server server;
  std::atomic<int> hits = 0;
  server.Post("/react", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    const Json body = Json::parse(req.body);
    CHECK(body.at("components").is_array());
    res.set_content(Json(chem->rules.rules()).dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const ExternalOracle external(
      {"http://127.0.0.1:" + std::to_string(port) + "/react", std::chrono::milliseconds(2000), {}},
      chem->substances);
  const Mixture m{{"cuso4", 0.1}, {"naoh", 0.3}};
  const ResolveResult via_http = resolve_reactions(m, external, chem->substances);
  server.stop();
  worker.join();
  CHECK(via_http.mixture == resolve_reactions(m, chem->rules, chem->substances).mixture);
  CHECK(hits >= 1);

  const ExternalOracle closed({"http://127.0.0.1:" + std::to_string(port) + "/react",
                               std::chrono::milliseconds(200), {}},
                              chem->substances);
  CHECK_THROWS_AS(closed.propose(Mixture{{"hcl", 1.0}}), Error);
}

TEST_CASE("oracle cache persists to a file") {
  const auto chem = shipped();
  const auto path = std::filesystem::temp_directory_path() / "labsim_oracle_cache_test.json";
  std::filesystem::remove(path);
  std::atomic<int> calls = 0;
  {
    const ExternalOracle first({"http://mock", std::chrono::milliseconds(10), path}, chem->substances,
                               mirror_transport(chem->rules, calls));
    first.propose(Mixture{{"hcl", 1.0}, {"koh", 1.0}});
  }
  const ExternalOracle second({"http://mock", std::chrono::milliseconds(10), path}, chem->substances,
                              mirror_transport(chem->rules, calls));
  second.propose(Mixture{{"hcl", 3.0}, {"koh", 1.0}});
  CHECK(calls == 1);
  std::filesystem::remove(path);
}
