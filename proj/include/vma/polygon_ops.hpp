#ifndef VMA_POLYGON_OPS_HPP_
#define VMA_POLYGON_OPS_HPP_

// Polygon boolean operations backed by Boost.Geometry.

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>

#include "vma/geometry.hpp"
#include "vma/log.hpp"

namespace vma {

namespace bg_detail {

namespace bg = boost::geometry;
using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, false, false>;  // counter-clockwise, open
using BMultiPolygon = bg::model::multi_polygon<BPolygon>;

inline BPolygon to_boost(PointSpan ring) {
  BPolygon poly;
  for (auto p : ring) poly.outer().emplace_back(p.x, p.y);
  bg::correct(poly);
  return poly;
}

inline Polyline from_boost(const BPolygon::ring_type& ring) {
  Polyline out;
  out.reserve(ring.size());
  for (const auto& p : ring) out.push_back({p.x(), p.y()});
  return out;
}

template <typename Op>
auto guarded(Op&& op) {
  try {
    return op();
  } catch (const boost::geometry::exception& ex) {
    throw Error(ErrorCode::InternalGeometryError, std::string("polygon boolean operation failed: ") + ex.what());
  }
}

}  // namespace bg_detail

inline double polygon_area(PointSpan ring) { return std::abs(signed_area(ring)); }

/// Removes repeated vertices, a repeated closing vertex, spikes and
/// collinear vertices left behind by boolean operations.
inline Polyline clean_ring(Polyline ring, double tol = 1e-9) {
  bool changed = true;
  while (changed && ring.size() >= 3) {
    changed = false;
    Polyline next;
    next.reserve(ring.size());
    for (auto p : ring)
      if (next.empty() || distance(next.back(), p) > tol) next.push_back(p);
    while (next.size() > 1 && distance(next.front(), next.back()) <= tol) next.pop_back();
    if (next.size() != ring.size()) changed = true;
    ring = std::move(next);
    if (ring.size() < 3) break;
    for (std::size_t i = 0; i < ring.size() && ring.size() >= 3; ++i) {
      const std::size_t n = ring.size();
      const Point2D u = ring[(i + n - 1) % n], v = ring[i], w = ring[(i + 1) % n];
      // Drop v when it lies (within tol) on the chord u-w or forms a spike.
      const double chord = distance(u, w);
      const double offset = chord > 0.0 ? std::abs(cross(w - u, v - u)) / chord : distance(u, v);
      if (offset <= tol) {
        ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return ring;
}

/// Area of the intersection of two simple polygons.
inline double intersection_area(PointSpan p, PointSpan q) {
  using namespace bg_detail;
  return guarded([&] {
    BMultiPolygon out;
    bg::intersection(to_boost(p), to_boost(q), out);
    return bg::area(out);
  });
}

/// Intersection over union of two simple polygons.
inline double polygon_iou(PointSpan p, PointSpan q) {
  if (!is_simple_polygon(p) || !is_simple_polygon(q))
    throw Error(ErrorCode::InvalidGeometry, "polygon_iou needs simple polygons");
  const double inter = intersection_area(p, q);
  const double uni = polygon_area(p) + polygon_area(q) - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Intersection area relative to the smaller polygon; 1 when one contains the other.
inline double polygon_containment(PointSpan p, PointSpan q) {
  if (!is_simple_polygon(p) || !is_simple_polygon(q))
    throw Error(ErrorCode::InvalidGeometry, "polygon_containment needs simple polygons");
  const double smaller = std::min(polygon_area(p), polygon_area(q));
  if (!(smaller > 0.0)) return 0.0;
  return std::clamp(intersection_area(p, q) / smaller, 0.0, 1.0);
}

struct UnionResult {
  std::vector<Polyline> outers;  // counter-clockwise outer rings, largest first
  std::size_t holes_dropped = 0;
};

inline UnionResult polygon_union(PointSpan p, PointSpan q) {
  using namespace bg_detail;
  BMultiPolygon out = guarded([&] {
    BMultiPolygon mp;
    bg::union_(to_boost(p), to_boost(q), mp);
    return mp;
  });
  UnionResult result;
  for (const auto& poly : out) {
    result.holes_dropped += poly.inners().size();
    auto ring = clean_ring(from_boost(poly.outer()));
    if (ring.size() >= 3) result.outers.push_back(std::move(ring));
  }
  std::stable_sort(result.outers.begin(), result.outers.end(),
                   [](const Polyline& a, const Polyline& b) { return polygon_area(a) > polygon_area(b); });
  return result;
}

/// Pieces of a polygon inside the axis-aligned square [-h, h]^2.
inline std::vector<Polyline> clip_polygon_to_square(PointSpan ring, double half_extent) {
  using namespace bg_detail;
  BPolygon square;
  square.outer() = {{-half_extent, -half_extent}, {half_extent, -half_extent}, {half_extent, half_extent},
                    {-half_extent, half_extent}};
  BMultiPolygon out = guarded([&] {
    BMultiPolygon mp;
    bg::intersection(to_boost(ring), square, mp);
    return mp;
  });
  std::vector<Polyline> pieces;
  for (const auto& poly : out) {
    if (!poly.inners().empty()) log::warn("clipped polygon piece has holes; keeping the outer ring");
    auto cleaned = clean_ring(from_boost(poly.outer()));
    if (cleaned.size() >= 3 && polygon_area(cleaned) > 1e-9) pieces.push_back(std::move(cleaned));
  }
  return pieces;
}

}  // namespace vma

#endif  // VMA_POLYGON_OPS_HPP_
