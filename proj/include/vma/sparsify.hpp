#ifndef VMA_SPARSIFY_HPP_
#define VMA_SPARSIFY_HPP_

#include <algorithm>
#include <utility>
#include <vector>

#include "vma/log.hpp"
#include "vma/map_types.hpp"

namespace vma {

struct SparsifyConfig {
  double epsilon = 0.1;

  void validate() const {
    if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be >= 0");
  }
};

namespace sparsify_detail {

/// Marks the vertices of pts[first..last] that Douglas-Peucker keeps.
/// Iterative, so deep recursions on long polylines cannot overflow the stack.
inline void mark_kept(PointSpan pts, std::size_t first, std::size_t last, double epsilon, std::vector<bool>& keep) {
  keep[first] = keep[last] = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{first, last}};
  while (!stack.empty()) {
    const auto [i, j] = stack.back();
    stack.pop_back();
    double dmax = -1.0;
    std::size_t index = i;
    for (std::size_t k = i + 1; k < j; ++k) {
      const double d = point_segment_distance(pts[k], pts[i], pts[j]);
      if (d > dmax) {
        dmax = d;
        index = k;
      }
    }
    if (index != i && dmax > epsilon) {
      keep[index] = true;
      stack.emplace_back(index, j);
      stack.emplace_back(i, index);
    }
  }
}

}  // namespace sparsify_detail

/// Douglas-Peucker simplification of an open polyline. The result is a
/// subsequence of the input that keeps both endpoints; every removed point
/// lies within `epsilon` of the segment that replaced it.
inline Polyline douglas_peucker(PointSpan pts, double epsilon) {
  if (pts.size() < 2) throw Error(ErrorCode::InvalidGeometry, "douglas_peucker needs at least 2 points");
  std::vector<bool> keep(pts.size(), false);
  sparsify_detail::mark_kept(pts, 0, pts.size() - 1, epsilon, keep);
  Polyline out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (keep[i]) out.push_back(pts[i]);
  return out;
}

/// Closed-ring Douglas-Peucker: anchored at the two mutually farthest
/// vertices, each half simplified separately. Vertices keep their input order.
inline Polyline douglas_peucker_ring(PointSpan ring, double epsilon) {
  const std::size_t n = ring.size();
  if (n < 3) throw Error(ErrorCode::InvalidGeometry, "ring needs at least 3 points");
  std::size_t ai = 0, aj = 1;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (const double d = distance(ring[i], ring[j]); d > best) {
        best = d;
        ai = i;
        aj = j;
      }
  std::vector<bool> keep(n, false);
  sparsify_detail::mark_kept(ring, ai, aj, epsilon, keep);
  // Second half walks aj .. n-1, 0 .. ai; unroll it into a contiguous copy.
  Polyline half;
  for (std::size_t k = aj; k < n; ++k) half.push_back(ring[k]);
  for (std::size_t k = 0; k <= ai; ++k) half.push_back(ring[k]);
  std::vector<bool> keep_half(half.size(), false);
  sparsify_detail::mark_kept(half, 0, half.size() - 1, epsilon, keep_half);
  for (std::size_t k = 0; k < half.size(); ++k)
    if (keep_half[k]) keep[(aj + k) % n] = true;
  Polyline out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(ring[i]);
  return out;
}

/// Lines and areas are simplified; discrete boxes already have 4 corners.
/// A polygon that loses simplicity is retried at half epsilon, up to 4 times.
inline MapElement sparsify_element(const MapElement& e, const SparsifyConfig& cfg) {
  cfg.validate();
  switch (e.kind()) {
    case GeomKind::Discrete: return e;
    case GeomKind::Line: return e.with_points(douglas_peucker(e.points(), cfg.epsilon));
    case GeomKind::Area: {
      double eps = cfg.epsilon;
      for (int attempt = 0; attempt <= 4; ++attempt, eps /= 2.0) {
        Polyline ring = douglas_peucker_ring(e.points(), eps);
        if (ring.size() >= 3 && is_simple_polygon(ring)) return e.with_points(std::move(ring));
      }
      log::warn("sparsify: '", e.id(), "' stays dense; simplification broke polygon simplicity");
      return e;
    }
  }
  return e;
}

inline VectorizedMap sparsify_map(const VectorizedMap& map, const SparsifyConfig& cfg) {
  std::vector<MapElement> out;
  out.reserve(map.size());
  for (const auto& e : map.elements()) out.push_back(sparsify_element(e, cfg));
  return VectorizedMap(map.frame(), std::move(out));
}

}  // namespace vma

#endif  // VMA_SPARSIFY_HPP_
