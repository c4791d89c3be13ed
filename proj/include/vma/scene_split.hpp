#ifndef VMA_SCENE_SPLIT_HPP_
#define VMA_SCENE_SPLIT_HPP_

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "vma/log.hpp"
#include "vma/map_json.hpp"
#include "vma/map_types.hpp"
#include "vma/polygon_ops.hpp"

namespace vma {

struct Pose2D {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;  // (-pi, pi]

  Point2D position() const { return {x, y}; }
  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

/// Timestamped ego poses with strictly increasing time.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<Pose2D> poses) : poses_(std::move(poses)) {
    for (std::size_t i = 0; i < poses_.size(); ++i) {
      auto& p = poses_[i];
      if (!(std::isfinite(p.t) && std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.yaw)))
        throw Error(ErrorCode::InvalidArgument, "trajectory pose has non-finite values");
      p.yaw = normalize_angle(p.yaw);
      if (i > 0 && !(p.t > poses_[i - 1].t))
        throw Error(ErrorCode::InvalidArgument, "trajectory timestamps must be strictly increasing");
    }
  }

  const std::vector<Pose2D>& poses() const { return poses_; }
  bool empty() const { return poses_.empty(); }

 private:
  std::vector<Pose2D> poses_;
};

/// One square crop of the scene, expressed in its own heading-aligned frame.
struct AnnotationUnit {
  std::string id;
  Pose2D center;
  double extent = 50.0;
  VectorizedMap local;  // frame "unit:<id>", transform = center pose

  const Frame& frame() const { return local.frame(); }
  const std::vector<MapElement>& elements() const { return local.elements(); }
};

inline std::string unit_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%04zu", index);
  return buf;
}

inline Frame unit_frame(const std::string& id, const Pose2D& center, FrameUnit unit, bool axis_aligned = false) {
  return Frame("unit:" + id, unit, RigidTransform{axis_aligned ? 0.0 : center.yaw, center.x, center.y});
}

/// Ego positions every `stride` metres of travelled distance, plus the first
/// and last poses. Positions and time are interpolated linearly, yaw along
/// the shortest angular path.
inline std::vector<Pose2D> sample_positions(const Trajectory& traj, double stride) {
  if (traj.empty()) throw Error(ErrorCode::EmptyTrajectory, "cannot sample an empty trajectory");
  if (!(stride > 0.0)) throw Error(ErrorCode::InvalidArgument, "stride must be positive");
  const auto& poses = traj.poses();
  std::vector<Pose2D> out{poses.front()};
  double travelled = 0.0;
  double next = stride;
  double last_sample = 0.0;
  for (std::size_t i = 0; i + 1 < poses.size(); ++i) {
    const Pose2D& a = poses[i];
    const Pose2D& b = poses[i + 1];
    const double len = distance(a.position(), b.position());
    if (len == 0.0) continue;
    const double end = travelled + len;
    while (next <= end + 1e-9 * std::max(1.0, end)) {
      const double u = std::clamp((next - travelled) / len, 0.0, 1.0);
      Pose2D p;
      p.t = a.t + (b.t - a.t) * u;
      const Point2D pos = u == 1.0 ? b.position() : lerp(a.position(), b.position(), u);
      p.x = pos.x;
      p.y = pos.y;
      p.yaw = normalize_angle(a.yaw + normalize_angle(b.yaw - a.yaw) * u);
      out.push_back(p);
      last_sample = next;
      next += stride;
    }
    travelled = end;
  }
  if (poses.size() > 1 && travelled - last_sample > 1e-9 * std::max(1.0, travelled)) out.push_back(poses.back());
  return out;
}

namespace split_detail {

/// Liang-Barsky clip of segment ab against [-h,h]^2; returns the parameter range.
inline std::optional<std::pair<double, double>> clip_segment(Point2D a, Point2D b, double h) {
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x + h, h - a.x, a.y + h, h - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) t0 = std::max(t0, r);
    else t1 = std::min(t1, r);
    if (t0 > t1) return std::nullopt;
  }
  return std::pair{t0, t1};
}

/// Connected pieces of a polyline inside [-h,h]^2.
inline std::vector<Polyline> clip_polyline_to_square(PointSpan pts, double h) {
  std::vector<Polyline> pieces;
  Polyline current;
  bool continues = false;  // previous segment ended inside the square
  auto flush = [&] {
    Polyline cleaned;
    for (auto p : current)
      if (cleaned.empty() || !(cleaned.back() == p)) cleaned.push_back(p);
    if (cleaned.size() >= 2 && polyline_length(cleaned) > 1e-9) pieces.push_back(std::move(cleaned));
    current.clear();
  };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Point2D a = pts[i], b = pts[i + 1];
    auto range = clip_segment(a, b, h);
    if (!range || range->second - range->first <= 1e-12) {
      flush();
      continues = false;
      continue;
    }
    const auto [t0, t1] = *range;
    const Point2D pa = t0 == 0.0 ? a : lerp(a, b, t0);
    const Point2D pb = t1 == 1.0 ? b : lerp(a, b, t1);
    if (continues && t0 == 0.0 && !current.empty()) {
      current.push_back(pb);
    } else {
      flush();
      current = {pa, pb};
    }
    continues = t1 == 1.0;
  }
  flush();
  return pieces;
}

}  // namespace split_detail

/// Crops the global map into one annotation unit centred at `center`.
/// Lines and areas are clipped to the square (one fragment per connected
/// piece, ids suffixed ":k"); discrete elements are kept whole iff their
/// centroid is inside.
inline AnnotationUnit crop_unit(const VectorizedMap& map, const Pose2D& center, double extent,
                                const std::string& id = "u0000", bool axis_aligned = false) {
  if (!map.frame().is_global()) throw Error(ErrorCode::FrameMismatch, "crop_unit expects a global map");
  if (!(extent > 0.0)) throw Error(ErrorCode::InvalidArgument, "extent must be positive");
  const Frame frame = unit_frame(id, center, map.frame().unit(), axis_aligned);
  const auto& tf = *frame.to_global();
  const double h = extent / 2.0;
  auto inside = [h](Point2D p) { return std::abs(p.x) <= h && std::abs(p.y) <= h; };

  std::vector<MapElement> out;
  for (const auto& e : map.elements()) {
    const auto local = tf.apply_inverse(e.points());
    const Box box = bounding_box(local);
    if (box.min_x > h || box.max_x < -h || box.min_y > h || box.max_y < -h) continue;
    switch (e.kind()) {
      case GeomKind::Line: {
        auto pieces = split_detail::clip_polyline_to_square(local, h);
        for (std::size_t k = 0; k < pieces.size(); ++k)
          out.emplace_back(e.id() + ":" + std::to_string(k), e.kind(), e.semantic(), std::move(pieces[k]), e.attrs(),
                           e.confidence(), e.id());
        break;
      }
      case GeomKind::Area: {
        std::vector<Polyline> pieces;
        if (box.min_x >= -h && box.max_x <= h && box.min_y >= -h && box.max_y <= h) pieces.push_back(local);
        else pieces = clip_polygon_to_square(local, h);
        std::size_t k = 0;
        for (auto& piece : pieces) {
          try {
            out.emplace_back(e.id() + ":" + std::to_string(k), e.kind(), e.semantic(), std::move(piece), e.attrs(),
                             e.confidence(), e.id());
            ++k;
          } catch (const Error& ex) {
            log::warn("unit ", id, ": dropping degenerate piece of ", e.id(), " (", ex.what(), ")");
          }
        }
        break;
      }
      case GeomKind::Discrete:
        if (inside(tf.apply_inverse(polygon_centroid(e.points()))))
          out.emplace_back(e.id(), e.kind(), e.semantic(), local, e.attrs(), e.confidence(), e.id());
        break;
    }
  }
  return AnnotationUnit{id, center, extent, VectorizedMap(frame, std::move(out))};
}

/// Crops one unit per sampled ego position, ordered along the trajectory.
inline std::vector<AnnotationUnit> split_scene(const VectorizedMap& map, const Trajectory& traj, double extent,
                                               double stride, bool axis_aligned = false) {
  if (stride >= extent)
    log::warn("stride ", stride, " >= extent ", extent, ": adjacent units will not overlap");
  const auto centers = sample_positions(traj, stride);
  std::vector<AnnotationUnit> units;
  units.reserve(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i)
    units.push_back(crop_unit(map, centers[i], extent, unit_id(i), axis_aligned));
  return units;
}

// ---- JSON ----------------------------------------------------------------

inline json pose_to_json(const Pose2D& p) { return {{"t", p.t}, {"x", p.x}, {"y", p.y}, {"yaw", p.yaw}}; }

inline Pose2D pose_from_json(const json& j, ParseMode mode = ParseMode::Strict) {
  using namespace json_detail;
  check_keys(j, {"t", "x", "y", "yaw"}, mode, "pose");
  return {number(require(j, "t", "pose"), "t"), number(require(j, "x", "pose"), "x"), number(require(j, "y", "pose"), "y"),
          number(require(j, "yaw", "pose"), "yaw")};
}

/// Trajectories are a bare array of poses.
inline json trajectory_to_json(const Trajectory& traj) {
  json arr = json::array();
  for (const auto& p : traj.poses()) arr.push_back(pose_to_json(p));
  return arr;
}

inline Trajectory trajectory_from_json(const json& j, ParseMode mode = ParseMode::Strict) {
  if (!j.is_array()) throw Error(ErrorCode::Parse, "trajectory must be a JSON array of poses");
  std::vector<Pose2D> poses;
  for (const auto& p : j) poses.push_back(pose_from_json(p, mode));
  return Trajectory(std::move(poses));
}

/// Unit documents are map documents in the unit frame plus a "unit" block.
inline json unit_to_json(const AnnotationUnit& u) {
  json j = map_to_json(u.local);
  j["unit"] = {{"id", u.id}, {"extent", u.extent}, {"center", pose_to_json(u.center)}};
  return j;
}

inline AnnotationUnit unit_from_json(const json& j, ParseMode mode = ParseMode::Strict) {
  using namespace json_detail;
  VectorizedMap local = map_from_json(j, mode, {"unit"});
  const auto& block = require(j, "unit", "unit document");
  check_keys(block, {"id", "extent", "center"}, mode, "unit block");
  AnnotationUnit u{string(require(block, "id", "unit block"), "unit id"), pose_from_json(require(block, "center", "unit block"), mode),
                   number(require(block, "extent", "unit block"), "extent"), std::move(local)};
  if (u.local.frame().is_global()) throw Error(ErrorCode::FrameMismatch, "unit document must use a unit frame");
  return u;
}

}  // namespace vma

#endif  // VMA_SCENE_SPLIT_HPP_
