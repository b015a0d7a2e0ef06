#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labsim/bench/episode.hpp"

namespace labsim::traj {

inline constexpr std::string_view kGeneratorVersion = "labsim-collect/1";

struct ManifestEntry {
  std::string file;  // relative to the manifest directory
  std::string sha256;
  std::string task;
  std::uint64_t seed = 0;
  bool success = false;
  std::int64_t ticks = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct FailedEpisode {
  std::string task;
  std::uint64_t seed = 0;
  std::string reason;

  friend bool operator==(const FailedEpisode&, const FailedEpisode&) = default;
};

struct DatasetManifest {
  std::string dataset_id;
  std::string generator_version{kGeneratorVersion};
  std::vector<ManifestEntry> episodes;
  std::map<std::string, int> task_counts;
  std::vector<FailedEpisode> failures;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct CollectOptions {
  int workers = 1;
  bool keep_failures = false;
  std::string dataset_id;  // defaults to the task key
  // Applied to each instance before the run; lets callers perturb scenes.
  std::function<void(bench::TaskInstance&)> prepare;
};

// Runs the scripted oracle once per seed, writes <out_dir>/<task>_s<seed>.ep.jsonl
// for kept episodes and <out_dir>/manifest.json. Throws InvalidArgument when
// `seeds` is empty, IoFailure when out_dir is unwritable.
DatasetManifest collect_batch(const bench::TaskSpec& task, std::span<const std::uint64_t> seeds,
                              const bench::BenchContext& context, const std::filesystem::path& out_dir,
                              const CollectOptions& options = {});

// Problems found re-hashing every listed file; empty when the dataset is intact.
std::vector<std::string> verify_manifest(const DatasetManifest& manifest, const std::filesystem::path& dir);

void to_json(Json& j, const DatasetManifest& m);
void from_json(const Json& j, DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace labsim::traj
