#include "labsim/bench/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace labsim::bench {

namespace {
double ratio(int num, int den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }
}  // namespace

double TaskRow::success_rate() const { return ratio(successes, episodes); }

double TaskRow::stage_rate(std::size_t k) const {
  return k < stage_successes.size() ? ratio(stage_successes[k], episodes) : 0.0;
}

double BenchReport::success_rate() const { return ratio(successes, episodes); }

const TaskRow* BenchReport::find(std::string_view key) const {
  const auto it = std::find_if(rows.begin(), rows.end(), [&](const TaskRow& r) { return r.key == key; });
  return it == rows.end() ? nullptr : &*it;
}

BenchReport aggregate(const std::vector<TaskSpec>& registry, std::span<const EpisodeResult> results) {
  std::map<std::string, TaskRow> rows;
  for (const EpisodeResult& r : results) {
    auto [it, fresh] = rows.try_emplace(r.task_key);
    TaskRow& row = it->second;
    if (fresh) {
      row.key = r.task_key;
      const auto spec = std::find_if(registry.begin(), registry.end(),
                                     [&](const TaskSpec& t) { return t.key() == r.task_key; });
      if (spec != registry.end()) {
        row.level = spec->level;
        row.split = std::string(to_string(spec->split));
        row.stage_labels = spec->stage_labels;
      }
      row.stage_successes.assign(std::max(row.stage_labels.size(), r.stage_outcomes.size()), 0);
    }
    if (row.stage_successes.size() < r.stage_outcomes.size()) row.stage_successes.resize(r.stage_outcomes.size(), 0);
    ++row.episodes;
    if (r.success) ++row.successes;
    for (std::size_t k = 0; k < r.stage_outcomes.size(); ++k) {
      if (r.stage_outcomes[k]) ++row.stage_successes[k];
    }
  }
  BenchReport report;
  for (auto& [key, row] : rows) {
    report.episodes += row.episodes;
    report.successes += row.successes;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string format_table(const BenchReport& report) {
  std::size_t width = 4;
  for (const TaskRow& r : report.rows) width = std::max(width, r.key.size());
  std::string out;
  char buf[64];
  const auto cell = [&](const char* fmt, auto v) {
    std::snprintf(buf, sizeof buf, fmt, v);
    out += buf;
  };
  out += "task" + std::string(width - 4, ' ');
  out += "  lvl     n     SP";
  for (std::size_t k = 0; k < kReportStageColumns; ++k) cell("     A%zu", k + 1);
  out += '\n';
  for (const TaskRow& r : report.rows) {
    out += r.key + std::string(width - r.key.size(), ' ');
    cell("  %3d", r.level);
    cell("  %4d", r.episodes);
    cell("  %5.3f", r.success_rate());
    for (std::size_t k = 0; k < kReportStageColumns; ++k) {
      if (k < r.stage_successes.size()) {
        cell("  %5.3f", r.stage_rate(k));
      } else {
        out += "      -";
      }
    }
    out += '\n';
  }
  cell("overall %d episodes", report.episodes);
  cell(", SP %.3f\n", report.success_rate());
  return out;
}

void to_json(Json& j, const TaskRow& row) {
  Json stages = Json::array();
  for (std::size_t k = 0; k < row.stage_successes.size(); ++k) {
    stages.push_back({{"label", k < row.stage_labels.size() ? row.stage_labels[k] : ""},
                      {"successes", row.stage_successes[k]},
                      {"rate", row.stage_rate(k)}});
  }
  j = Json{{"task", row.key},         {"level", row.level},   {"split", row.split},
           {"episodes", row.episodes}, {"successes", row.successes}, {"sp", row.success_rate()},
           {"stages", stages}};
}

void to_json(Json& j, const BenchReport& report) {
  j = Json{{"episodes", report.episodes},
           {"successes", report.successes},
           {"sp", report.success_rate()},
           {"tasks", report.rows}};
}

bool meets_threshold(const BenchReport& report, double min_rate) {
  return std::all_of(report.rows.begin(), report.rows.end(),
                     [&](const TaskRow& r) { return r.success_rate() >= min_rate; });
}

}  // namespace labsim::bench
