#include <cstdlib>

#include "labsim/cli/app.hpp"
#include "labsim/core/error.hpp"

#ifndef LABSIM_DEFAULT_DATA_DIR
#define LABSIM_DEFAULT_DATA_DIR "data"
#endif

namespace labsim::cli {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& expected) {
  throw Error(ErrorCode::kSchemaError, "config key '" + key + "' must be " + expected);
}

void require_object(const Json& v, const std::string& key) {
  if (!v.is_object()) bad(key, "an object");
}

std::string get_string(const Json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "a string");
  return v.get<std::string>();
}

double get_number(const Json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "a number");
  return v.get<double>();
}

std::int64_t get_int(const Json& v, const std::string& key, std::int64_t min) {
  if (!v.is_number_integer()) bad(key, "an integer");
  const auto value = v.get<std::int64_t>();
  if (value < min) bad(key, "at least " + std::to_string(min));
  return value;
}

[[noreturn]] void unknown(const std::string& key) {
  throw Error(ErrorCode::kSchemaError, "unknown config key '" + key + "'");
}

void apply_paths(RunConfig& c, const Json& doc) {
  require_object(doc, "paths");
  for (const auto& [key, value] : doc.items()) {
    const std::string name = "paths." + key;
    if (key == "assets") {
      c.paths.assets = get_string(value, name);
    } else if (key == "substances") {
      c.paths.substances = get_string(value, name);
    } else if (key == "reactions") {
      c.paths.reactions = get_string(value, name);
    } else if (key == "tasks") {
      c.paths.tasks = get_string(value, name);
    } else if (key == "output_dir") {
      c.paths.output_dir = get_string(value, name);
    } else {
      unknown(name);
    }
  }
}

void apply_scene(RunConfig& c, const Json& doc) {
  require_object(doc, "scene");
  for (const auto& [key, value] : doc.items()) {
    const std::string name = "scene." + key;
    if (key == "k") {
      c.candidates_per_asset = static_cast<int>(get_int(value, name, 1));
    } else if (key == "weights") {
      require_object(value, name);
      for (const auto& [wkey, w] : value.items()) {
        const std::string wname = name + "." + wkey;
        if (wkey == "edge") {
          c.weights.edge = get_number(w, wname);
        } else if (wkey == "distance") {
          c.weights.distance = get_number(w, wname);
        } else if (wkey == "orientation") {
          c.weights.orientation = get_number(w, wname);
        } else {
          unknown(wname);
        }
      }
    } else if (key == "room") {
      if (!value.is_array() || value.size() != 2) bad(name, "an array [width, height]");
      const double w = get_number(value[0], name + "[0]");
      const double h = get_number(value[1], name + "[1]");
      if (w <= 0.0 || h <= 0.0) bad(name, "positive");
      c.room_size_m = Vec2{w, h};
    } else {
      unknown(name);
    }
  }
}

void apply_bench(RunConfig& c, const Json& doc) {
  require_object(doc, "bench");
  for (const auto& [key, value] : doc.items()) {
    const std::string name = "bench." + key;
    if (key == "episodes") {
      c.episodes = static_cast<int>(get_int(value, name, 1));
    } else if (key == "hold_s") {
      const double h = get_number(value, name);
      if (h <= 0.0) bad(name, "positive");
      c.hold_s = h;
    } else if (key == "threshold") {
      const double t = get_number(value, name);
      if (t < 0.0 || t > 1.0) bad(name, "within [0, 1]");
      c.threshold = t;
    } else {
      unknown(name);
    }
  }
}

}  // namespace

RunConfig RunConfig::with_data_dir(const std::filesystem::path& data_dir) {
  RunConfig c;
  c.paths.assets = data_dir / "assets.json";
  c.paths.substances = data_dir / "substances.json";
  c.paths.reactions = data_dir / "reactions.json";
  c.paths.tasks = data_dir / "tasks.json";
  return c;
}

RunConfig apply_config(RunConfig c, const Json& doc) {
  require_object(doc, "<root>");
  // data_dir re-roots the input paths before any explicit path overrides.
  if (const auto it = doc.find("data_dir"); it != doc.end()) {
    const RunConfig rooted = RunConfig::with_data_dir(get_string(*it, "data_dir"));
    c.paths.assets = rooted.paths.assets;
    c.paths.substances = rooted.paths.substances;
    c.paths.reactions = rooted.paths.reactions;
    c.paths.tasks = rooted.paths.tasks;
  }
  for (const auto& [key, value] : doc.items()) {
    if (key == "data_dir") continue;
    if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(get_int(value, key, 0));
    } else if (key == "workers") {
      c.workers = static_cast<int>(get_int(value, key, 1));
    } else if (key == "paths") {
      apply_paths(c, value);
    } else if (key == "scene") {
      apply_scene(c, value);
    } else if (key == "bench") {
      apply_bench(c, value);
    } else {
      unknown(key);
    }
  }
  return c;
}

void check_paths(const RunConfig& config) {
  for (const auto& [what, path] : {std::pair{"asset catalog", config.paths.assets},
                                   std::pair{"substance table", config.paths.substances},
                                   std::pair{"reaction table", config.paths.reactions},
                                   std::pair{"task registry", config.paths.tasks}}) {
    if (!std::filesystem::is_regular_file(path)) {
      throw Error(ErrorCode::kIoFailure, std::string(what) + " not found: " + path.string());
    }
  }
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("LABSIM_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return LABSIM_DEFAULT_DATA_DIR;
}

}  // namespace labsim::cli
