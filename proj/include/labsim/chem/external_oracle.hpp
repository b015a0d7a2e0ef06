#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "labsim/chem/reaction.hpp"

namespace labsim::chem {

struct ExternalOracleConfig {
  std::string url;  // e.g. http://127.0.0.1:8080/react
  std::chrono::milliseconds timeout{2000};
  std::optional<std::filesystem::path> cache_file;

  // Reads LABSIM_ORACLE_URL, LABSIM_ORACLE_TIMEOUT_MS and LABSIM_ORACLE_CACHE.
  // Returns nullopt when no endpoint is configured.
  static std::optional<ExternalOracleConfig> from_env();
};

// POSTs `body` to `url` and returns the response body. Implementations throw
// Error(kOracleFailure) on transport errors, timeouts and non-2xx statuses.
using Transport = std::function<std::string(const std::string& url, const std::string& body,
                                            std::chrono::milliseconds timeout)>;

Transport http_transport();

// Canonical cache key: sorted, de-duplicated substance ids joined by '|'.
std::string component_set_key(const Mixture& mix);

// Parses and validates an oracle response. Any unknown substance, malformed
// rule or mass imbalance above 1% rejects the whole response.
std::vector<ReactionRule> parse_oracle_response(std::string_view body,
                                                const SubstanceDatabase& db);

// Reaction oracle served by an external inference endpoint.
class ExternalOracle final : public ReactionOracle {
 public:
  ExternalOracle(ExternalOracleConfig config, SubstanceDatabase db,
                 Transport transport = http_transport());

  std::vector<ReactionRule> propose(const Mixture& mix) const override;

  std::size_t network_calls() const;
  std::size_t cache_size() const;

 private:
  void load_cache();
  void save_cache() const;  // caller holds mutex_

  ExternalOracleConfig config_;
  SubstanceDatabase db_;
  Transport transport_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::vector<ReactionRule>> cache_;
  mutable std::size_t network_calls_ = 0;
};

// Tries the primary oracle and answers from the fallback whenever the primary
// raises OracleFailure. Each fallback is recorded, never propagated.
class FallbackOracle final : public ReactionOracle {
 public:
  FallbackOracle(std::shared_ptr<const ReactionOracle> primary,
                 std::shared_ptr<const ReactionOracle> fallback);

  std::vector<ReactionRule> propose(const Mixture& mix) const override;

  std::size_t fallback_count() const;
  std::vector<std::string> fallback_log() const;

 private:
  std::shared_ptr<const ReactionOracle> primary_;
  std::shared_ptr<const ReactionOracle> fallback_;
  mutable std::mutex mutex_;
  mutable std::vector<std::string> log_;
};

}  // namespace labsim::chem
