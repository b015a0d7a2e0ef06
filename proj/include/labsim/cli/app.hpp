#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "labsim/core/json.hpp"
#include "labsim/scene/layout.hpp"

namespace labsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitThreshold = 1;  // benchmark threshold missed or replay diverged
inline constexpr int kExitUsage = 2;      // usage, configuration or environment error

struct RunPaths {
  std::filesystem::path assets;
  std::filesystem::path substances;
  std::filesystem::path reactions;
  std::filesystem::path tasks;
  std::filesystem::path output_dir{"."};
};

struct RunConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  RunPaths paths;
  // Scene generation overrides.
  int candidates_per_asset = scene::LayoutConfig{}.candidates_per_asset;
  scene::ScoreWeights weights;
  std::optional<Vec2> room_size_m;
  // Benchmark overrides.
  std::optional<int> episodes;
  std::optional<double> hold_s;
  double threshold = 1.0;

  // Every path rooted at `data_dir`.
  static RunConfig with_data_dir(const std::filesystem::path& data_dir);
};

// Applies a JSON config document on top of `base`. Unknown keys and wrong value
// types raise SchemaError naming the offending key.
RunConfig apply_config(RunConfig base, const Json& doc);

// Throws IoFailure naming the first input path that does not exist.
void check_paths(const RunConfig& config);

// Data directory used when none is configured: $LABSIM_DATA_DIR, else the
// directory the binary was built against.
std::filesystem::path default_data_dir();

// Entry point behind the `labsim` binary. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace labsim::cli
