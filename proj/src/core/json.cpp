#include "labsim/core/json.hpp"

#include <fstream>
#include <sstream>

#include "labsim/core/error.hpp"

namespace labsim {

void to_json(Json& j, const Vec2& v) { j = Json::array({v.x, v.y}); }
void from_json(const Json& j, Vec2& v) {
  v.x = j.at(0).get<double>();
  v.y = j.at(1).get<double>();
}

void to_json(Json& j, const Vec3& v) { j = Json::array({v.x, v.y, v.z}); }
void from_json(const Json& j, Vec3& v) {
  v.x = j.at(0).get<double>();
  v.y = j.at(1).get<double>();
  v.z = j.at(2).get<double>();
}

void to_json(Json& j, const Quat& q) { j = Json::array({q.w, q.x, q.y, q.z}); }
void from_json(const Json& j, Quat& q) {
  q.w = j.at(0).get<double>();
  q.x = j.at(1).get<double>();
  q.y = j.at(2).get<double>();
  q.z = j.at(3).get<double>();
}

void to_json(Json& j, const Pose& p) {
  j = Json{{"position", p.position}, {"orientation", p.orientation}};
}
void from_json(const Json& j, Pose& p) {
  p.position = j.at("position").get<Vec3>();
  p.orientation = j.at("orientation").get<Quat>();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kSchemaError, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path.string());
}

}  // namespace labsim
