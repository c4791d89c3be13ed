#ifndef VMA_SYNTHGEN_HPP_
#define VMA_SYNTHGEN_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vma/log.hpp"
#include "vma/map_json.hpp"
#include "vma/scene_split.hpp"

namespace vma {

enum class CurvatureProfile { Straight, Arc, SCurve };

inline const char* to_string(CurvatureProfile p) {
  switch (p) {
    case CurvatureProfile::Straight: return "straight";
    case CurvatureProfile::Arc: return "arc";
    case CurvatureProfile::SCurve: return "s-curve";
  }
  return "?";
}

struct FurnitureCounts {
  std::size_t arrows = 0;
  std::size_t stop_lines = 0;
  std::size_t crosswalks = 0;
  std::size_t speed_bumps = 0;
  std::size_t diversions = 0;
  std::size_t markings = 0;
  std::size_t lane_signs = 0;
};

struct SceneSpec {
  double road_length = 300.0;
  CurvatureProfile profile = CurvatureProfile::Straight;
  double radius = 150.0;  // arc and s-curve profiles
  std::size_t num_lanes = 3;
  double lane_width = 3.5;
  FurnitureCounts furniture;
  std::uint64_t rng_seed = 1;

  double road_width() const { return static_cast<double>(num_lanes) * lane_width; }

  void validate() const {
    if (!(road_length > 0.0 && lane_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "scene dimensions must be positive");
    if (num_lanes < 1) throw Error(ErrorCode::InvalidArgument, "num_lanes must be >= 1");
    if (profile != CurvatureProfile::Straight && !(radius > road_width() / 2.0))
      throw Error(ErrorCode::InvalidArgument, "radius must exceed half the road width");
  }
};

/// Full furniture set used by the golden scenes.
inline FurnitureCounts full_furniture() { return {4, 2, 2, 2, 1, 2, 2}; }

struct Scene {
  VectorizedMap map;
  Trajectory trajectory;
};

namespace synth_detail {

struct CenterPose {
  Point2D p;
  double heading = 0.0;
  Point2D tangent() const { return {std::cos(heading), std::sin(heading)}; }
  Point2D left() const { return {-std::sin(heading), std::cos(heading)}; }
};

/// Analytic centerline: straight, a left arc, or a left-then-right s-curve.
inline CenterPose centerline(const SceneSpec& spec, double s) {
  const double r = spec.radius;
  switch (spec.profile) {
    case CurvatureProfile::Straight: return {{s, 0.0}, 0.0};
    case CurvatureProfile::Arc: return {{r * std::sin(s / r), r * (1.0 - std::cos(s / r))}, s / r};
    case CurvatureProfile::SCurve: {
      const double mid = spec.road_length / 2.0;
      if (s <= mid) return {{r * std::sin(s / r), r * (1.0 - std::cos(s / r))}, s / r};
      const double hm = mid / r;
      const Point2D pm{r * std::sin(hm), r * (1.0 - std::cos(hm))};
      const Point2D center = pm + Point2D{std::sin(hm), -std::cos(hm)} * r;
      const double h = hm - (s - mid) / r;
      return {center + Point2D{-std::sin(h), std::cos(h)} * r, h};
    }
  }
  return {};
}

inline Point2D at(const SceneSpec& spec, double s, double lateral) {
  const auto c = centerline(spec, s);
  return c.p + c.left() * lateral;
}

/// Stations every metre from 0 to the road length, end included.
inline std::vector<double> stations(double length) {
  std::vector<double> out;
  for (double s = 0.0; s < length - 1e-9; s += 1.0) out.push_back(s);
  out.push_back(length);
  return out;
}

inline Polyline offset_line(const SceneSpec& spec, double lateral) {
  Polyline pts;
  for (double s : stations(spec.road_length)) pts.push_back(at(spec, s, lateral));
  return pts;
}

/// Heading-aligned box: corners front-left, front-right, back-right, back-left.
inline Polyline box(const SceneSpec& spec, double s, double lateral, double length, double width) {
  const auto c = centerline(spec, s);
  const Point2D center = c.p + c.left() * lateral;
  const Point2D f = c.tangent() * (length / 2.0), l = c.left() * (width / 2.0);
  return {center + f + l, center + f - l, center - f - l, center - f + l};
}

struct Occupancy {
  double lo, hi;
  std::optional<std::size_t> lane;  // nullopt: the whole road
};

}  // namespace synth_detail

/// Ground-truth map and ego trajectory for a synthetic road.
inline Scene generate_scene(const SceneSpec& spec) {
  using namespace synth_detail;
  spec.validate();
  const double w = spec.road_width(), lw = spec.lane_width;
  const std::size_t lanes = spec.num_lanes;
  std::vector<MapElement> elements;

  const char* curb_types[2] = {"road_side", "ground_side"};
  for (std::size_t k = 0; k < 2; ++k)
    elements.emplace_back("curb_" + std::to_string(k), GeomKind::Line, Semantic(SemanticType::Curb),
                          offset_line(spec, k == 0 ? -w / 2.0 : w / 2.0), AttributeSet{{"curb_type", curb_types[k]}});
  for (std::size_t k = 1; k < lanes; ++k)
    elements.emplace_back("divider_" + std::to_string(k - 1), GeomKind::Line, Semantic(SemanticType::LaneDivider),
                          offset_line(spec, -w / 2.0 + static_cast<double>(k) * lw),
                          AttributeSet{{"direction", "unidirectional"}, {"lane_type", (k - 1) % 2 == 0 ? "solid" : "dotted"}});

  // Furniture at random stations, kept 2 m apart from anything on the same lane.
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> station(10.0, std::max(10.0, spec.road_length - 10.0));
  std::uniform_int_distribution<std::size_t> lane_pick(0, lanes - 1);
  std::vector<Occupancy> taken;
  auto lane_center = [&](std::size_t k) { return -w / 2.0 + (static_cast<double>(k) + 0.5) * lw; };
  auto place = [&](double along, bool road_wide) -> std::optional<std::pair<double, std::size_t>> {
    for (int attempt = 0; attempt < 50; ++attempt) {
      const double s = station(rng);
      const std::size_t lane = lane_pick(rng);
      const double lo = s - along / 2.0 - 2.0, hi = s + along / 2.0 + 2.0;
      if (lo < 0.0 || hi > spec.road_length) continue;
      bool clash = false;
      for (const auto& o : taken)
        clash = clash || (lo < o.hi && o.lo < hi && (road_wide || !o.lane || *o.lane == lane));
      if (clash) continue;
      taken.push_back({s - along / 2.0, s + along / 2.0, road_wide ? std::nullopt : std::optional(lane)});
      return std::pair{s, lane};
    }
    return std::nullopt;
  };
  auto place_all = [&](std::size_t count, const char* what, double along, bool road_wide, auto&& make) {
    std::size_t placed = 0;
    for (std::size_t i = 0; i < count; ++i) {
      auto slot = place(along, road_wide);
      if (!slot) continue;
      make(placed++, slot->first, slot->second);
    }
    if (placed < count) log::warn("synthgen: placed ", placed, " of ", count, " ", what, " (no free space)");
  };

  const char* arrow_by_lane = lanes == 1 ? "straight" : nullptr;
  place_all(spec.furniture.crosswalks, "crosswalks", 4.0, true, [&](std::size_t i, double s, std::size_t) {
    elements.emplace_back("crosswalk_" + std::to_string(i), GeomKind::Area, Semantic(SemanticType::Crosswalk),
                          Polyline{at(spec, s - 2.0, -w / 2.0), at(spec, s + 2.0, -w / 2.0), at(spec, s + 2.0, w / 2.0),
                                   at(spec, s - 2.0, w / 2.0)});
  });
  place_all(spec.furniture.stop_lines, "stop lines", 0.5, true, [&](std::size_t i, double s, std::size_t) {
    elements.emplace_back("stop_line_" + std::to_string(i), GeomKind::Line, Semantic(SemanticType::StopLine),
                          Polyline{at(spec, s, -w / 2.0), at(spec, s, w / 2.0)});
  });
  place_all(spec.furniture.diversions, "diversions", 20.0, false, [&](std::size_t i, double s, std::size_t lane) {
    // Chevron taper: apex at the lane centre, widening to the full lane over 20 m.
    const double s0 = s - 10.0, right = lane_center(lane) - lw / 2.0, mid = lane_center(lane);
    Polyline ring{at(spec, s0, mid)};
    for (double u = 2.0; u <= 20.0 + 1e-9; u += 2.0) ring.push_back(at(spec, s0 + u, mid - (mid - right) * u / 20.0));
    for (double u = 20.0; u >= 2.0 - 1e-9; u -= 2.0) ring.push_back(at(spec, s0 + u, mid + (mid - right) * u / 20.0));
    elements.emplace_back("diversion_" + std::to_string(i), GeomKind::Area, Semantic(SemanticType::Diversion),
                          std::move(ring));
  });
  place_all(spec.furniture.arrows, "arrows", 3.0, false, [&](std::size_t i, double s, std::size_t lane) {
    const char* type = arrow_by_lane ? arrow_by_lane : lane == 0 ? "turn_right" : lane + 1 == lanes ? "turn_left" : "straight";
    elements.emplace_back("arrow_" + std::to_string(i), GeomKind::Discrete, Semantic(SemanticType::Arrow),
                          box(spec, s, lane_center(lane), 3.0, 1.0), AttributeSet{{"arrow_type", type}});
  });
  place_all(spec.furniture.speed_bumps, "speed bumps", 0.6, false, [&](std::size_t i, double s, std::size_t lane) {
    elements.emplace_back("speed_bump_" + std::to_string(i), GeomKind::Discrete, Semantic(SemanticType::SpeedBump),
                          box(spec, s, lane_center(lane), 0.6, lw - 0.6));
  });
  place_all(spec.furniture.lane_signs, "lane signs", 2.5, false, [&](std::size_t i, double s, std::size_t lane) {
    elements.emplace_back("lane_sign_" + std::to_string(i), GeomKind::Discrete, Semantic(SemanticType::LaneSign),
                          box(spec, s, lane_center(lane), 2.5, 1.5),
                          AttributeSet{{"lane_sign_type", lane % 2 == 0 ? "bus_lane" : "bike_lane"}});
  });
  place_all(spec.furniture.markings, "markings", 4.0, false, [&](std::size_t i, double s, std::size_t lane) {
    elements.emplace_back("marking_" + std::to_string(i), GeomKind::Discrete, Semantic(SemanticType::Marking),
                          box(spec, s, lane_center(lane), 4.0, 1.5),
                          AttributeSet{{"marking_type", lane % 2 == 0 ? "diamond_marking" : "inverted_triangle_marking"}});
  });

  std::vector<Pose2D> poses;
  for (double s : stations(spec.road_length)) {
    const auto c = centerline(spec, s);
    poses.push_back({s / 10.0, c.p.x, c.p.y, c.heading});
  }
  return {VectorizedMap(Frame::global(), std::move(elements)), Trajectory(std::move(poses))};
}

// ---- JSON ----------------------------------------------------------------

inline json scene_spec_to_json(const SceneSpec& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["road_length"] = s.road_length;
  j["curvature"] = {{"profile", to_string(s.profile)}};
  if (s.profile != CurvatureProfile::Straight) j["curvature"]["radius"] = s.radius;
  j["num_lanes"] = s.num_lanes;
  j["lane_width"] = s.lane_width;
  const auto& f = s.furniture;
  j["furniture"] = {{"arrows", f.arrows},         {"stop_lines", f.stop_lines}, {"crosswalks", f.crosswalks},
                    {"speed_bumps", f.speed_bumps}, {"diversions", f.diversions}, {"markings", f.markings},
                    {"lane_signs", f.lane_signs}};
  j["rng_seed"] = s.rng_seed;
  return j;
}

inline SceneSpec scene_spec_from_json(const json& j, ParseMode mode = ParseMode::Strict) {
  using namespace json_detail;
  check_keys(j, {"schema_version", "road_length", "curvature", "num_lanes", "lane_width", "furniture", "rng_seed"}, mode,
             "scene spec");
  check_schema_version(j);
  SceneSpec s;
  auto count = [](const json& v, const char* what) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw Error(ErrorCode::Parse, std::string(what) + " must be a non-negative integer");
    return v.get<std::size_t>();
  };
  if (auto it = j.find("road_length"); it != j.end()) s.road_length = number(*it, "road_length");
  if (auto it = j.find("curvature"); it != j.end()) {
    check_keys(*it, {"profile", "radius"}, mode, "curvature");
    const auto name = string(require(*it, "profile", "curvature"), "profile");
    if (name == "straight") s.profile = CurvatureProfile::Straight;
    else if (name == "arc") s.profile = CurvatureProfile::Arc;
    else if (name == "s-curve") s.profile = CurvatureProfile::SCurve;
    else throw Error(ErrorCode::Parse, "unknown curvature profile '" + name + "'");
    if (auto r = it->find("radius"); r != it->end()) s.radius = number(*r, "radius");
  }
  if (auto it = j.find("num_lanes"); it != j.end()) s.num_lanes = count(*it, "num_lanes");
  if (auto it = j.find("lane_width"); it != j.end()) s.lane_width = number(*it, "lane_width");
  if (auto it = j.find("furniture"); it != j.end()) {
    check_keys(*it, {"arrows", "stop_lines", "crosswalks", "speed_bumps", "diversions", "markings", "lane_signs"}, mode,
               "furniture");
    auto& f = s.furniture;
    std::pair<const char*, std::size_t*> fields[] = {{"arrows", &f.arrows},         {"stop_lines", &f.stop_lines},
                                                     {"crosswalks", &f.crosswalks}, {"speed_bumps", &f.speed_bumps},
                                                     {"diversions", &f.diversions}, {"markings", &f.markings},
                                                     {"lane_signs", &f.lane_signs}};
    for (auto& [key, dst] : fields)
      if (auto v = it->find(key); v != it->end()) *dst = count(*v, key);
  }
  if (auto it = j.find("rng_seed"); it != j.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0))
      throw Error(ErrorCode::Parse, "rng_seed must be a non-negative integer");
    s.rng_seed = it->get<std::uint64_t>();
  }
  s.validate();
  return s;
}

}  // namespace vma

#endif  // VMA_SYNTHGEN_HPP_
