#ifndef VMA_SPATIAL_HPP_
#define VMA_SPATIAL_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vma/geometry.hpp"

namespace vma {

/// Uniform-grid index over the segments of a set of polylines, answering
/// nearest-segment queries. Every segment is registered in each cell it
/// passes through, so a ring search over cells is exact.
class SegmentIndex {
 public:
  struct Hit {
    std::size_t polyline = 0;
    std::size_t segment = 0;
    double t = 0.0;
    Point2D foot;
    double distance = std::numeric_limits<double>::infinity();
  };

  explicit SegmentIndex(double cell_size = 2.0) : cell_(cell_size) {
    if (!(cell_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell size must be positive");
  }

  /// Registers a polyline (or closed ring); returns its index.
  std::size_t add(PointSpan pts, bool closed = false) {
    const std::size_t id = lines_.size();
    lines_.emplace_back(pts.begin(), pts.end());
    closed_.push_back(closed);
    const auto& line = lines_.back();
    const std::size_t segs = segment_count(id);
    for (std::size_t s = 0; s < segs; ++s) insert_segment(id, s, line[s], line[(s + 1) % line.size()]);
    for (auto p : line) bounds_.expand(p);
    if (line.size() == 1) insert_segment(id, 0, line[0], line[0]);
    return id;
  }

  std::size_t size() const { return lines_.size(); }
  const Polyline& polyline(std::size_t i) const { return lines_[i]; }

  /// Nearest segment over all polylines, or over one polyline when `only` is set.
  std::optional<Hit> nearest(Point2D p, double max_radius = std::numeric_limits<double>::infinity(),
                             std::optional<std::size_t> only = std::nullopt) const {
    if (lines_.empty() || bounds_.empty()) return std::nullopt;
    const auto [cx, cy] = cell_of(p);
    const double dx = std::max({bounds_.min_x - p.x, 0.0, p.x - bounds_.max_x});
    const double dy = std::max({bounds_.min_y - p.y, 0.0, p.y - bounds_.max_y});
    const double reach = std::hypot(dx, dy) + std::hypot(bounds_.max_x - bounds_.min_x, bounds_.max_y - bounds_.min_y);
    const double limit = std::min(max_radius, reach) + cell_;
    Hit best;
    bool found = false;
    for (std::int64_t k = 0;; ++k) {
      // Cells not yet scanned lie at least (k-1) cells away from p.
      const double ring_clearance = static_cast<double>(k - 1) * cell_;
      if (found && best.distance <= ring_clearance) break;
      if (ring_clearance > limit) break;
      for (std::int64_t ix = cx - k; ix <= cx + k; ++ix) {
        for (std::int64_t iy = cy - k; iy <= cy + k; ++iy) {
          if (std::max(std::abs(ix - cx), std::abs(iy - cy)) != k) continue;
          auto it = grid_.find(key(ix, iy));
          if (it == grid_.end()) continue;
          for (const auto& [line_id, seg] : it->second) {
            if (only && *only != line_id) continue;
            const auto& line = lines_[line_id];
            const Point2D a = line[seg], b = line[(seg + 1) % line.size()];
            const auto proj = project_onto_segment(p, a, b);
            if (proj.distance < best.distance ||
                (proj.distance == best.distance &&
                 std::pair(line_id, seg) < std::pair(best.polyline, best.segment))) {
              best = {line_id, seg, proj.t, proj.foot, proj.distance};
              found = true;
            }
          }
        }
      }
    }
    if (!found || best.distance > max_radius) return std::nullopt;
    return best;
  }

  double distance_to(Point2D p, std::size_t line_id) const {
    auto hit = nearest(p, std::numeric_limits<double>::infinity(), line_id);
    return hit ? hit->distance : std::numeric_limits<double>::infinity();
  }

 private:
  std::size_t segment_count(std::size_t id) const {
    const auto n = lines_[id].size();
    if (n < 2) return 0;
    return closed_[id] ? n : n - 1;
  }

  std::pair<std::int64_t, std::int64_t> cell_of(Point2D p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / cell_)), static_cast<std::int64_t>(std::floor(p.y / cell_))};
  }

  static std::uint64_t key(std::int64_t ix, std::int64_t iy) {
    return (static_cast<std::uint64_t>(ix) << 32) ^ (static_cast<std::uint64_t>(iy) & 0xffffffffULL);
  }

  void insert_segment(std::size_t id, std::size_t seg, Point2D a, Point2D b) {
    // Sample at a quarter cell and register the 3x3 neighbourhood: a
    // conservative supercover of the segment.
    const double len = distance(a, b);
    const auto steps = static_cast<std::size_t>(std::ceil(len / (0.25 * cell_))) + 1;
    std::vector<std::uint64_t> keys;
    for (std::size_t i = 0; i <= steps; ++i) {
      const auto [cx, cy] = cell_of(lerp(a, b, static_cast<double>(i) / static_cast<double>(steps)));
      for (std::int64_t ox = -1; ox <= 1; ++ox)
        for (std::int64_t oy = -1; oy <= 1; ++oy) keys.push_back(key(cx + ox, cy + oy));
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (auto k : keys) grid_[k].emplace_back(id, seg);
  }

  double cell_;
  std::vector<Polyline> lines_;
  std::vector<bool> closed_;
  Box bounds_;
  std::unordered_map<std::uint64_t, std::vector<std::pair<std::size_t, std::size_t>>> grid_;
};

}  // namespace vma

#endif  // VMA_SPATIAL_HPP_
