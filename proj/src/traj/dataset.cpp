#include "labsim/traj/dataset.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <optional>

#include "labsim/core/error.hpp"
#include "labsim/traj/record.hpp"

namespace labsim::traj {

namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

std::string episode_file_name(const std::string& key, std::uint64_t seed) {
  std::string name;
  for (char c : key) {
    if (c == '[') {
      name += '-';
    } else if (c != ']') {
      name += c;
    }
  }
  return name + "_s" + std::to_string(seed) + ".ep.jsonl";
}

struct Outcome {
  bench::EpisodeResult result;
  std::optional<ManifestEntry> entry;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw Error(ErrorCode::kIoFailure, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

DatasetManifest collect_batch(const bench::TaskSpec& task, std::span<const std::uint64_t> seeds,
                              const bench::BenchContext& context, const std::filesystem::path& out_dir,
                              const CollectOptions& options) {
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "collect needs at least one seed");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

  const std::string key = task.key();
  std::vector<Outcome> outcomes(seeds.size());
  bench::parallel_for(seeds.size(), options.workers, [&](std::size_t i) {
    const std::uint64_t seed = seeds[i];
    Recorder recorder;
    bool started = false;
    bench::EpisodeResult result;
    try {
      bench::TaskInstance instance = bench::instantiate(task, seed, context);
      if (options.prepare) options.prepare(instance);
      auto policy = bench::make_oracle(instance);
      started = true;
      result = bench::run_episode(task, seed, instance, *policy, &recorder);
    } catch (const std::exception& e) {
      result = bench::EpisodeResult{};
      result.task_key = key;
      result.seed = seed;
      result.failure_reason = e.what();
    }
    Outcome& out = outcomes[i];
    out.result = result;
    if (started && (result.success || options.keep_failures)) {
      const std::string text = to_jsonl(recorder.take());
      const std::string file = episode_file_name(key, seed);
      write_text_file(out_dir / file, text);
      out.entry = ManifestEntry{file, sha256_hex(text), key, seed, result.success, result.ticks_used};
    }
  });

  DatasetManifest manifest;
  manifest.dataset_id = options.dataset_id.empty() ? key : options.dataset_id;
  for (const Outcome& o : outcomes) {
    if (o.entry) {
      manifest.episodes.push_back(*o.entry);
      ++manifest.task_counts[o.entry->task];
    }
    if (!o.result.success) manifest.failures.push_back(FailedEpisode{key, o.result.seed, o.result.failure_reason.value_or("failed")});
  }
  write_text_file(out_dir / "manifest.json", Json(manifest).dump(2) + "\n");
  return manifest;
}

std::vector<std::string> verify_manifest(const DatasetManifest& manifest, const std::filesystem::path& dir) {
  std::vector<std::string> problems;
  for (const ManifestEntry& e : manifest.episodes) {
    const std::filesystem::path path = dir / e.file;
    if (!std::filesystem::exists(path)) {
      problems.push_back("missing file: " + e.file);
      continue;
    }
    const std::string actual = sha256_file(path);
    if (actual != e.sha256) problems.push_back("hash mismatch: " + e.file + " (manifest " + e.sha256 + ", file " + actual + ")");
  }
  return problems;
}

void to_json(Json& j, const DatasetManifest& m) {
  Json episodes = Json::array();
  for (const ManifestEntry& e : m.episodes) {
    episodes.push_back(
        {{"file", e.file}, {"sha256", e.sha256}, {"task", e.task}, {"seed", e.seed}, {"success", e.success}, {"ticks", e.ticks}});
  }
  Json failures = Json::array();
  for (const FailedEpisode& f : m.failures) failures.push_back({{"task", f.task}, {"seed", f.seed}, {"reason", f.reason}});
  j = Json{{"dataset_id", m.dataset_id},
           {"generator_version", m.generator_version},
           {"episodes", episodes},
           {"task_counts", m.task_counts},
           {"failures", failures}};
}

void from_json(const Json& j, DatasetManifest& m) {
  try {
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.generator_version = j.at("generator_version").get<std::string>();
    m.episodes.clear();
    for (const Json& e : j.at("episodes")) {
      m.episodes.push_back({e.at("file").get<std::string>(), e.at("sha256").get<std::string>(),
                            e.at("task").get<std::string>(), e.at("seed").get<std::uint64_t>(),
                            e.at("success").get<bool>(), e.at("ticks").get<std::int64_t>()});
    }
    m.task_counts = j.at("task_counts").get<std::map<std::string, int>>();
    m.failures.clear();
    for (const Json& f : j.at("failures")) {
      m.failures.push_back(
          {f.at("task").get<std::string>(), f.at("seed").get<std::uint64_t>(), f.at("reason").get<std::string>()});
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("manifest: ") + e.what());
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path) { return read_json_file(path).get<DatasetManifest>(); }

}  // namespace labsim::traj
