#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>
#include "labsim/core/math.hpp"

namespace labsim {

using Json = nlohmann::json;

void to_json(Json& j, const Vec2& v);
void from_json(const Json& j, Vec2& v);
void to_json(Json& j, const Vec3& v);
void from_json(const Json& j, Vec3& v);
void to_json(Json& j, const Quat& q);
void from_json(const Json& j, Quat& q);
void to_json(Json& j, const Pose& p);
void from_json(const Json& j, Pose& p);

// Reads and parses a JSON file; IoFailure when unreadable, SchemaError on parse errors.
Json read_json_file(const std::filesystem::path& path);
// Writes `text` atomically enough for our purposes; IoFailure when the target is unwritable.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace labsim
