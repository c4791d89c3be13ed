#ifndef VMA_MAP_TYPES_HPP_
#define VMA_MAP_TYPES_HPP_

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vma/error.hpp"
#include "vma/geometry.hpp"

namespace vma {

enum class GeomKind { Line, Discrete, Area };

inline const char* to_string(GeomKind k) {
  switch (k) {
    case GeomKind::Line: return "line";
    case GeomKind::Discrete: return "discrete";
    case GeomKind::Area: return "area";
  }
  return "line";
}

inline GeomKind parse_geom_kind(std::string_view s) {
  if (s == "line") return GeomKind::Line;
  if (s == "discrete") return GeomKind::Discrete;
  if (s == "area") return GeomKind::Area;
  throw Error(ErrorCode::Parse, "unknown geometric kind '" + std::string(s) + "'");
}

enum class SemanticType {
  LaneDivider,
  Curb,
  StopLine,
  Arrow,
  SpeedBump,
  LaneSign,
  Marking,
  Crosswalk,
  Diversion,
  Extension,
};

/// A semantic type; known types carry a fixed geometric kind, anything else
/// is an extension identified by its tag and compatible with any kind.
class Semantic {
 public:
  Semantic() = default;
  Semantic(SemanticType type) : type_(type) {  // NOLINT(google-explicit-constructor)
    if (type == SemanticType::Extension) throw Error(ErrorCode::InvalidArgument, "extension semantic needs a tag");
  }

  static Semantic parse(std::string_view name) {
    for (const auto& [type, text] : names())
      if (text == name) return Semantic(type);
    if (name.empty()) throw Error(ErrorCode::Parse, "empty semantic type");
    Semantic s;
    s.type_ = SemanticType::Extension;
    s.tag_ = std::string(name);
    return s;
  }

  SemanticType type() const { return type_; }
  bool is_extension() const { return type_ == SemanticType::Extension; }

  std::string name() const {
    if (is_extension()) return tag_;
    for (const auto& [type, text] : names())
      if (type == type_) return std::string(text);
    return tag_;
  }

  /// The geometric kind a known semantic type requires.
  std::optional<GeomKind> required_kind() const {
    switch (type_) {
      case SemanticType::LaneDivider:
      case SemanticType::Curb:
      case SemanticType::StopLine: return GeomKind::Line;
      case SemanticType::Arrow:
      case SemanticType::SpeedBump:
      case SemanticType::LaneSign:
      case SemanticType::Marking: return GeomKind::Discrete;
      case SemanticType::Crosswalk:
      case SemanticType::Diversion: return GeomKind::Area;
      case SemanticType::Extension: return std::nullopt;
    }
    return std::nullopt;
  }

  friend bool operator==(const Semantic& a, const Semantic& b) { return a.type_ == b.type_ && a.tag_ == b.tag_; }
  friend bool operator<(const Semantic& a, const Semantic& b) { return a.name() < b.name(); }

 private:
  static const std::vector<std::pair<SemanticType, std::string_view>>& names() {
    static const std::vector<std::pair<SemanticType, std::string_view>> kNames = {
        {SemanticType::LaneDivider, "lane_divider"}, {SemanticType::Curb, "curb"},
        {SemanticType::StopLine, "stop_line"},       {SemanticType::Arrow, "arrow"},
        {SemanticType::SpeedBump, "speed_bump"},     {SemanticType::LaneSign, "lane_sign"},
        {SemanticType::Marking, "marking"},          {SemanticType::Crosswalk, "crosswalk"},
        {SemanticType::Diversion, "diversion"},
    };
    return kNames;
  }

  SemanticType type_ = SemanticType::LaneDivider;
  std::string tag_;
};

using AttributeSet = std::map<std::string, std::string>;

/// Legal attribute names and tags per known semantic type.
class AttributeSchema {
 public:
  using Tags = std::vector<std::string>;

  static const std::map<std::string, Tags>& for_semantic(const Semantic& s) {
    static const std::map<std::string, Tags> kEmpty;
    const auto& reg = registry();
    auto it = reg.find(s.type());
    return it == reg.end() ? kEmpty : it->second;
  }

  /// Empty string when valid, otherwise the reason.
  static std::string check(const Semantic& s, const AttributeSet& attrs) {
    if (s.is_extension()) return {};
    const auto& schema = for_semantic(s);
    for (const auto& [name, tag] : attrs) {
      auto it = schema.find(name);
      if (it == schema.end()) return "attribute '" + name + "' is not defined for " + s.name();
      if (std::find(it->second.begin(), it->second.end(), tag) == it->second.end())
        return "tag '" + tag + "' is not legal for attribute '" + name + "'";
    }
    return {};
  }

 private:
  static const std::map<SemanticType, std::map<std::string, Tags>>& registry() {
    static const std::map<SemanticType, std::map<std::string, Tags>> kRegistry = {
        {SemanticType::LaneDivider,
         {{"direction", {"unidirectional", "bidirectional"}},
          {"lane_type", {"solid", "dotted", "fishbone"}},
          {"lane_property", {"general", "stay", "tide", "bus", "three_color"}},
          {"lane_flag", {"single", "double", "triple"}},
          {"lane_width", {"normal", "wide"}}}},
        {SemanticType::Curb, {{"curb_type", {"ground_side", "road_side", "guardrail"}}}},
        {SemanticType::StopLine, {}},
        {SemanticType::Arrow,
         {{"arrow_type",
           {"straight", "turn_off", "merge_right", "no_turn_left", "turn_left", "turn_right", "straight_left",
            "straight_right", "u_turn", "merge_left"}}}},
        {SemanticType::SpeedBump, {}},
        {SemanticType::LaneSign, {{"lane_sign_type", {"bike_lane", "bus_lane"}}}},
        {SemanticType::Marking, {{"marking_type", {"diamond_marking", "inverted_triangle_marking"}}}},
        {SemanticType::Crosswalk, {}},
        {SemanticType::Diversion, {}},
    };
    return kRegistry;
  }
};

/// One vectorized map element. Validated on construction and immutable
/// afterwards; the `with_*` helpers return validated copies.
class MapElement {
 public:
  MapElement(std::string id, GeomKind kind, Semantic semantic, Polyline points, AttributeSet attrs = {},
             double confidence = 1.0, std::optional<std::string> source = std::nullopt)
      : id_(std::move(id)),
        kind_(kind),
        semantic_(std::move(semantic)),
        points_(std::move(points)),
        attrs_(std::move(attrs)),
        confidence_(confidence),
        source_(std::move(source)) {
    validate();
  }

  const std::string& id() const { return id_; }
  GeomKind kind() const { return kind_; }
  const Semantic& semantic() const { return semantic_; }
  const Polyline& points() const { return points_; }
  const AttributeSet& attrs() const { return attrs_; }
  double confidence() const { return confidence_; }
  /// Id of the element this one was cut from (diagnostics only).
  const std::optional<std::string>& source() const { return source_; }

  MapElement with_id(std::string id) const {
    MapElement e = *this;
    e.id_ = std::move(id);
    e.validate();
    return e;
  }
  MapElement with_points(Polyline pts) const {
    return MapElement(id_, kind_, semantic_, std::move(pts), attrs_, confidence_, source_);
  }
  MapElement with_attrs(AttributeSet attrs) const {
    return MapElement(id_, kind_, semantic_, points_, std::move(attrs), confidence_, source_);
  }
  MapElement with_confidence(double c) const {
    return MapElement(id_, kind_, semantic_, points_, attrs_, c, source_);
  }
  MapElement with_source(std::optional<std::string> source) const {
    MapElement e = *this;
    e.source_ = std::move(source);
    return e;
  }

  friend bool operator==(const MapElement&, const MapElement&) = default;

 private:
  void validate() const {
    auto fail = [this](const std::string& why) {
      throw Error(ErrorCode::InvalidGeometry, "element '" + id_ + "': " + why);
    };
    if (id_.empty()) fail("empty id");
    if (!(confidence_ >= 0.0 && confidence_ <= 1.0)) fail("confidence outside [0,1]");
    for (auto p : points_)
      if (!is_finite(p)) fail("non-finite coordinate");
    if (auto req = semantic_.required_kind(); req && *req != kind_)
      fail(semantic_.name() + " must be a " + to_string(*req) + " element");
    if (auto why = AttributeSchema::check(semantic_, attrs_); !why.empty()) fail(why);
    switch (kind_) {
      case GeomKind::Line:
        if (points_.size() < 2) fail("line needs at least 2 points");
        for (std::size_t i = 1; i < points_.size(); ++i)
          if (points_[i] == points_[i - 1]) fail("consecutive duplicate points");
        break;
      case GeomKind::Discrete:
        if (points_.size() != 4) fail("discrete element needs exactly 4 corners");
        if (!is_simple_polygon(points_)) fail("corner quadrilateral is not simple");
        // front-left, front-right, back-right, back-left runs clockwise.
        if (signed_area(points_) >= 0.0) fail("corners must be ordered clockwise from front-left");
        break;
      case GeomKind::Area:
        if (points_.size() < 3) fail("area needs at least 3 points");
        if (points_.front() == points_.back()) fail("polygon must not repeat its first vertex");
        if (!is_simple_polygon(points_)) fail("polygon is not simple");
        break;
    }
  }

  std::string id_;
  GeomKind kind_;
  Semantic semantic_;
  Polyline points_;
  AttributeSet attrs_;
  double confidence_;
  std::optional<std::string> source_;
};

enum class FrameUnit { Meter, Pixel };

inline const char* to_string(FrameUnit u) { return u == FrameUnit::Meter ? "meter" : "pixel"; }

/// Coordinate frame of a map: "global", or "unit:<id>" with a rigid transform
/// into the global frame.
class Frame {
 public:
  Frame() = default;
  Frame(std::string name, FrameUnit unit, std::optional<RigidTransform> to_global = std::nullopt)
      : name_(std::move(name)), unit_(unit), to_global_(to_global) {
    const bool global = name_ == "global";
    if (global == to_global_.has_value())
      throw Error(ErrorCode::InvalidArgument, "frame '" + name_ + "': transform required iff frame is not global");
    if (to_global_ && !(std::isfinite(to_global_->theta) && std::isfinite(to_global_->tx) &&
                        std::isfinite(to_global_->ty)))
      throw Error(ErrorCode::InvalidArgument, "non-finite frame transform");
  }

  static Frame global(FrameUnit unit = FrameUnit::Meter) { return Frame("global", unit); }

  const std::string& name() const { return name_; }
  FrameUnit unit() const { return unit_; }
  bool is_global() const { return !to_global_.has_value(); }
  const std::optional<RigidTransform>& to_global() const { return to_global_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::string name_ = "global";
  FrameUnit unit_ = FrameUnit::Meter;
  std::optional<RigidTransform> to_global_;
};

/// A set of elements in one frame; ids are unique.
class VectorizedMap {
 public:
  VectorizedMap() = default;
  VectorizedMap(Frame frame, std::vector<MapElement> elements) : frame_(std::move(frame)), elements_(std::move(elements)) {
    std::set<std::string> seen;
    for (const auto& e : elements_)
      if (!seen.insert(e.id()).second) throw Error(ErrorCode::InvalidArgument, "duplicate element id '" + e.id() + "'");
  }

  const Frame& frame() const { return frame_; }
  const std::vector<MapElement>& elements() const { return elements_; }
  bool empty() const { return elements_.empty(); }
  std::size_t size() const { return elements_.size(); }

  const MapElement* find(std::string_view id) const {
    for (const auto& e : elements_)
      if (e.id() == id) return &e;
    return nullptr;
  }

  template <typename Pred>
  VectorizedMap filtered(Pred pred) const {
    std::vector<MapElement> kept;
    for (const auto& e : elements_)
      if (pred(e)) kept.push_back(e);
    return VectorizedMap(frame_, std::move(kept));
  }

  friend bool operator==(const VectorizedMap&, const VectorizedMap&) = default;

 private:
  Frame frame_;
  std::vector<MapElement> elements_;
};

/// Re-expresses a unit-frame map in the global frame.
inline VectorizedMap to_global(const VectorizedMap& local) {
  if (local.frame().is_global()) return local;
  const auto& tf = *local.frame().to_global();
  std::vector<MapElement> out;
  out.reserve(local.size());
  for (const auto& e : local.elements()) out.push_back(e.with_points(tf.apply(e.points())));
  return VectorizedMap(Frame::global(local.frame().unit()), std::move(out));
}

/// Re-expresses a global map in the given local frame.
inline VectorizedMap to_local(const VectorizedMap& global, const Frame& local_frame) {
  if (!global.frame().is_global()) throw Error(ErrorCode::FrameMismatch, "to_local expects a global map");
  if (local_frame.is_global()) return global;
  const auto& tf = *local_frame.to_global();
  std::vector<MapElement> out;
  out.reserve(global.size());
  for (const auto& e : global.elements()) out.push_back(e.with_points(tf.apply_inverse(e.points())));
  return VectorizedMap(local_frame, std::move(out));
}

}  // namespace vma

#endif  // VMA_MAP_TYPES_HPP_
