#pragma once

#include <span>
#include <string>
#include <vector>

#include "labsim/bench/episode.hpp"

namespace labsim::bench {

inline constexpr std::size_t kReportStageColumns = 7;

// Per-task counts. SP is the episode success rate; A_k the fraction of
// episodes whose stage k predicate was satisfied.
struct TaskRow {
  std::string key;
  int level = 0;
  std::string split;
  std::vector<std::string> stage_labels;
  int episodes = 0;
  int successes = 0;
  std::vector<int> stage_successes;

  double success_rate() const;
  double stage_rate(std::size_t k) const;
  friend bool operator==(const TaskRow&, const TaskRow&) = default;
};

struct BenchReport {
  std::vector<TaskRow> rows;  // sorted by key
  int episodes = 0;
  int successes = 0;

  double success_rate() const;
  const TaskRow* find(std::string_view key) const;
  friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

// Order-independent: any permutation of `results` gives the same report.
BenchReport aggregate(const std::vector<TaskSpec>& registry, std::span<const EpisodeResult> results);

std::string format_table(const BenchReport& report);
void to_json(Json& j, const TaskRow& row);
void to_json(Json& j, const BenchReport& report);

// True when every row reaches min_rate.
bool meets_threshold(const BenchReport& report, double min_rate);

}  // namespace labsim::bench
