#include "labsim/chem/external_oracle.hpp"

#include <cstdlib>
#include <set>

#include "httplib.h"
#include "labsim/core/error.hpp"

namespace labsim::chem {

namespace {

constexpr double kMaxRelativeImbalance = 0.01;

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kOracleFailure, "malformed oracle url '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::optional<ExternalOracleConfig> ExternalOracleConfig::from_env() {
  const char* url = std::getenv("LABSIM_ORACLE_URL");
  if (url == nullptr || *url == '\0') return std::nullopt;
  ExternalOracleConfig config;
  config.url = url;
  if (const char* timeout = std::getenv("LABSIM_ORACLE_TIMEOUT_MS")) {
    char* end = nullptr;
    const long ms = std::strtol(timeout, &end, 10);
    if (end == timeout || *end != '\0' || ms <= 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "LABSIM_ORACLE_TIMEOUT_MS must be a positive integer");
    }
    config.timeout = std::chrono::milliseconds(ms);
  }
  if (const char* cache = std::getenv("LABSIM_ORACLE_CACHE"); cache != nullptr && *cache != '\0') {
    config.cache_file = cache;
  }
  return config;
}

Transport http_transport() {
  return [](const std::string& url, const std::string& body, std::chrono::milliseconds timeout) {
    const SplitUrl parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    const httplib::Result res = client.Post(parts.path, body, "application/json");
    if (!res) {
      throw Error(ErrorCode::kOracleFailure, "request failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::kOracleFailure, "endpoint returned status " + std::to_string(res->status));
    }
    return res->body;
  };
}

std::string component_set_key(const Mixture& mix) {
  std::set<std::string> ids;
  for (const Component& c : mix.components()) ids.insert(c.substance_id);
  std::string key;
  for (const std::string& id : ids) {
    if (!key.empty()) key += '|';
    key += id;
  }
  return key;
}

std::vector<ReactionRule> parse_oracle_response(std::string_view body,
                                                const SubstanceDatabase& db) {
  std::vector<ReactionRule> rules;
  try {
    const Json doc = Json::parse(body);
    if (!doc.is_array()) throw Error(ErrorCode::kOracleFailure, "response is not a rule array");
    for (const Json& entry : doc) rules.push_back(entry.get<ReactionRule>());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kOracleFailure, std::string("malformed response: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kOracleFailure) throw;
    throw Error(ErrorCode::kOracleFailure, e.what());
  }
  for (const ReactionRule& r : rules) {
    if (auto reason = validate_rule(r, db, kMaxRelativeImbalance)) {
      throw Error(ErrorCode::kOracleFailure, *reason);
    }
  }
  return rules;
}

ExternalOracle::ExternalOracle(ExternalOracleConfig config, SubstanceDatabase db,
                               Transport transport)
    : config_(std::move(config)), db_(std::move(db)), transport_(std::move(transport)) {
  load_cache();
}

std::vector<ReactionRule> ExternalOracle::propose(const Mixture& mix) const {
  const std::string key = component_set_key(mix);
  {
    std::lock_guard lock(mutex_);
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
    ++network_calls_;
  }

  Json request{{"components", Json::array()}};
  for (const Component& c : mix.components()) {
    request["components"].push_back({{"id", c.substance_id}, {"mol", c.amount_mol}});
  }
  // Transport runs unlocked so concurrent queries do not serialize on the network.
  const std::string body = transport_(config_.url, request.dump(), config_.timeout);
  std::vector<ReactionRule> rules = parse_oracle_response(body, db_);

  std::lock_guard lock(mutex_);
  cache_[key] = rules;
  if (config_.cache_file) save_cache();
  return rules;
}

std::size_t ExternalOracle::network_calls() const {
  std::lock_guard lock(mutex_);
  return network_calls_;
}

std::size_t ExternalOracle::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

void ExternalOracle::load_cache() {
  if (!config_.cache_file || !std::filesystem::exists(*config_.cache_file)) return;
  const Json doc = read_json_file(*config_.cache_file);
  for (const auto& [key, rules] : doc.items()) {
    std::vector<ReactionRule> parsed;
    for (const Json& r : rules) parsed.push_back(r.get<ReactionRule>());
    cache_[key] = std::move(parsed);
  }
}

void ExternalOracle::save_cache() const {
  Json doc = Json::object();
  for (const auto& [key, rules] : cache_) doc[key] = rules;
  write_text_file(*config_.cache_file, doc.dump(2) + "\n");
}

FallbackOracle::FallbackOracle(std::shared_ptr<const ReactionOracle> primary,
                               std::shared_ptr<const ReactionOracle> fallback)
    : primary_(std::move(primary)), fallback_(std::move(fallback)) {}

std::vector<ReactionRule> FallbackOracle::propose(const Mixture& mix) const {
  try {
    return primary_->propose(mix);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kOracleFailure) throw;
    std::lock_guard lock(mutex_);
    log_.push_back(e.what());
  }
  return fallback_->propose(mix);
}

std::size_t FallbackOracle::fallback_count() const {
  std::lock_guard lock(mutex_);
  return log_.size();
}

std::vector<std::string> FallbackOracle::fallback_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

}  // namespace labsim::chem
