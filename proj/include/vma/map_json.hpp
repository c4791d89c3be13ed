#ifndef VMA_MAP_JSON_HPP_
#define VMA_MAP_JSON_HPP_

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vma/map_types.hpp"

namespace vma {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Strict parsing rejects unknown fields; lenient parsing ignores them.
enum class ParseMode { Strict, Lenient };

namespace json_detail {

inline void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, ParseMode mode,
                       std::string_view what) {
  if (!obj.is_object()) throw Error(ErrorCode::Parse, std::string(what) + " must be a JSON object");
  if (mode == ParseMode::Lenient) return;
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw Error(ErrorCode::Parse, "unknown field '" + key + "' in " + std::string(what));
  }
}

inline const json& require(const json& obj, const char* key, std::string_view what) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::Parse, std::string(what) + " is missing '" + key + "'");
  return *it;
}

inline double number(const json& v, std::string_view what) {
  if (!v.is_number()) throw Error(ErrorCode::Parse, std::string(what) + " must be a number");
  return v.get<double>();
}

inline std::string string(const json& v, std::string_view what) {
  if (!v.is_string()) throw Error(ErrorCode::Parse, std::string(what) + " must be a string");
  return v.get<std::string>();
}

inline void check_schema_version(const json& obj) {
  if (auto it = obj.find("schema_version"); it != obj.end()) {
    if (!it->is_number_integer() || it->get<int>() != kSchemaVersion)
      throw Error(ErrorCode::Parse, "unsupported schema_version (expected 1)");
  }
}

}  // namespace json_detail

inline json points_to_json(PointSpan pts) {
  json arr = json::array();
  for (auto p : pts) arr.push_back(json::array({p.x, p.y}));
  return arr;
}

inline Polyline points_from_json(const json& arr) {
  if (!arr.is_array()) throw Error(ErrorCode::Parse, "points must be an array");
  Polyline pts;
  pts.reserve(arr.size());
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2) throw Error(ErrorCode::Parse, "each point must be [x, y]");
    pts.push_back({json_detail::number(p[0], "point x"), json_detail::number(p[1], "point y")});
  }
  return pts;
}

inline json element_to_json(const MapElement& e) {
  json j;
  j["id"] = e.id();
  j["kind"] = to_string(e.kind());
  j["semantic"] = e.semantic().name();
  j["points"] = points_to_json(e.points());
  j["attrs"] = json(e.attrs());
  j["confidence"] = e.confidence();
  if (e.source()) j["source"] = *e.source();
  return j;
}

inline MapElement element_from_json(const json& j, ParseMode mode = ParseMode::Strict) {
  using namespace json_detail;
  check_keys(j, {"id", "kind", "semantic", "points", "attrs", "confidence", "source", "status"}, mode, "element");
  const auto id = string(require(j, "id", "element"), "element id");
  const auto kind = parse_geom_kind(string(require(j, "kind", "element"), "element kind"));
  const auto semantic = Semantic::parse(string(require(j, "semantic", "element"), "element semantic"));
  auto pts = points_from_json(require(j, "points", "element"));
  AttributeSet attrs;
  if (auto it = j.find("attrs"); it != j.end()) {
    if (!it->is_object()) throw Error(ErrorCode::Parse, "attrs must be an object");
    for (const auto& [k, v] : it->items()) attrs[k] = string(v, "attribute tag");
  }
  double confidence = 1.0;
  if (auto it = j.find("confidence"); it != j.end()) confidence = number(*it, "confidence");
  std::optional<std::string> source;
  if (auto it = j.find("source"); it != j.end()) source = string(*it, "source");
  return MapElement(id, kind, semantic, std::move(pts), std::move(attrs), confidence, std::move(source));
}

inline json frame_to_json(const Frame& f) {
  json j;
  j["name"] = f.name();
  j["unit"] = to_string(f.unit());
  if (f.to_global()) j["transform"] = {{"theta", f.to_global()->theta}, {"tx", f.to_global()->tx}, {"ty", f.to_global()->ty}};
  return j;
}

inline Frame frame_from_json(const json& j, ParseMode mode = ParseMode::Strict) {
  using namespace json_detail;
  check_keys(j, {"name", "unit", "transform"}, mode, "frame");
  const auto name = string(require(j, "name", "frame"), "frame name");
  const auto unit_text = string(require(j, "unit", "frame"), "frame unit");
  FrameUnit unit;
  if (unit_text == "meter") unit = FrameUnit::Meter;
  else if (unit_text == "pixel") unit = FrameUnit::Pixel;
  else throw Error(ErrorCode::Parse, "frame unit must be 'meter' or 'pixel'");
  std::optional<RigidTransform> tf;
  if (auto it = j.find("transform"); it != j.end()) {
    check_keys(*it, {"theta", "tx", "ty"}, mode, "transform");
    tf = RigidTransform{number(require(*it, "theta", "transform"), "theta"), number(require(*it, "tx", "transform"), "tx"),
                        number(require(*it, "ty", "transform"), "ty")};
  }
  return Frame(name, unit, tf);
}

inline json map_to_json(const VectorizedMap& m) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["frame"] = frame_to_json(m.frame());
  json elements = json::array();
  for (const auto& e : m.elements()) elements.push_back(element_to_json(e));
  j["elements"] = std::move(elements);
  return j;
}

/// `extra_keys` names additional top-level blocks a caller understands
/// (e.g. the unit block of annotation units).
inline VectorizedMap map_from_json(const json& j, ParseMode mode = ParseMode::Strict,
                                   std::initializer_list<std::string_view> extra_keys = {}) {
  using namespace json_detail;
  if (!j.is_object()) throw Error(ErrorCode::Parse, "map must be a JSON object");
  if (mode == ParseMode::Strict) {
    for (const auto& [key, value] : j.items()) {
      bool known = key == "schema_version" || key == "frame" || key == "elements" || key == "provenance";
      for (auto k : extra_keys) known = known || key == k;
      if (!known) throw Error(ErrorCode::Parse, "unknown field '" + key + "' in map");
    }
  }
  check_schema_version(j);
  Frame frame = frame_from_json(require(j, "frame", "map"), mode);
  const auto& arr = require(j, "elements", "map");
  if (!arr.is_array()) throw Error(ErrorCode::Parse, "elements must be an array");
  std::vector<MapElement> elements;
  elements.reserve(arr.size());
  for (const auto& e : arr) elements.push_back(element_from_json(e, mode));
  return VectorizedMap(std::move(frame), std::move(elements));
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& ex) {
    throw Error(ErrorCode::Parse, "'" + path.string() + "': " + ex.what());
  }
}

/// Canonical serialization used for every artifact: two-space indent and a
/// trailing newline, so equal documents are byte-identical.
inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << dump_json(j);
}

inline VectorizedMap read_map(const std::filesystem::path& path, ParseMode mode = ParseMode::Strict) {
  return map_from_json(read_json_file(path), mode, {"unit"});
}

inline void write_map(const std::filesystem::path& path, const VectorizedMap& m) { write_json_file(path, map_to_json(m)); }

}  // namespace vma

#endif  // VMA_MAP_JSON_HPP_
