#ifndef VMA_GEOMETRY_HPP_
#define VMA_GEOMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "vma/error.hpp"

namespace vma {

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2D&, const Point2D&) = default;
};

using Polyline = std::vector<Point2D>;
using PointSpan = std::span<const Point2D>;

inline Point2D operator+(Point2D a, Point2D b) { return {a.x + b.x, a.y + b.y}; }
inline Point2D operator-(Point2D a, Point2D b) { return {a.x - b.x, a.y - b.y}; }
inline Point2D operator*(Point2D a, double s) { return {a.x * s, a.y * s}; }
inline Point2D operator*(double s, Point2D a) { return {a.x * s, a.y * s}; }
inline double dot(Point2D a, Point2D b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2D a, Point2D b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2D a) { return std::hypot(a.x, a.y); }
inline double distance(Point2D a, Point2D b) { return norm(a - b); }
inline Point2D lerp(Point2D a, Point2D b, double t) { return a + (b - a) * t; }
inline bool is_finite(Point2D p) { return std::isfinite(p.x) && std::isfinite(p.y); }
inline bool lexicographic_less(Point2D a, Point2D b) {
  return a.x < b.x || (a.x == b.x && a.y < b.y);
}

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::fmod(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

/// Rotation by `theta` followed by translation; maps a local frame into its parent.
struct RigidTransform {
  double theta = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  Point2D apply(Point2D p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * p.x - s * p.y + tx, s * p.x + c * p.y + ty};
  }
  Point2D apply_inverse(Point2D p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double dx = p.x - tx, dy = p.y - ty;
    return {c * dx + s * dy, -s * dx + c * dy};
  }
  Polyline apply(PointSpan pts) const {
    Polyline out;
    out.reserve(pts.size());
    for (auto p : pts) out.push_back(apply(p));
    return out;
  }
  Polyline apply_inverse(PointSpan pts) const {
    Polyline out;
    out.reserve(pts.size());
    for (auto p : pts) out.push_back(apply_inverse(p));
    return out;
  }

  friend bool operator==(const RigidTransform&, const RigidTransform&) = default;
};

inline double polyline_length(PointSpan pts) {
  if (pts.size() < 2) throw Error(ErrorCode::InvalidGeometry, "polyline needs at least 2 points");
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += distance(pts[i - 1], pts[i]);
  return total;
}

/// Arc length at every vertex; front() == 0.
inline std::vector<double> cumulative_lengths(PointSpan pts) {
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + distance(pts[i - 1], pts[i]);
  return cum;
}

inline double ring_perimeter(PointSpan ring) {
  double total = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) total += distance(ring[i], ring[(i + 1) % ring.size()]);
  return total;
}

/// Point at arc length `s` along the polyline (clamped to the ends).
inline Point2D point_at_arc(PointSpan pts, std::span<const double> cum, double s) {
  if (s <= 0.0) return pts.front();
  if (s >= cum.back()) return pts.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), s);
  std::size_t i = static_cast<std::size_t>(it - cum.begin());
  const double seg = cum[i] - cum[i - 1];
  const double t = seg > 0.0 ? (s - cum[i - 1]) / seg : 0.0;
  return lerp(pts[i - 1], pts[i], t);
}

/// `n` points at equal arc-length spacing along the polyline. The first and
/// last input points are reproduced exactly.
inline Polyline resample_uniform(PointSpan pts, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "resample_uniform needs n >= 2");
  if (pts.size() < 2) throw Error(ErrorCode::InvalidGeometry, "polyline needs at least 2 points");
  const auto cum = cumulative_lengths(pts);
  const double total = cum.back();
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidGeometry, "zero-length polyline cannot be resampled");
  Polyline out;
  out.reserve(n);
  out.push_back(pts.front());
  std::size_t seg = 1;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(n - 1);
    while (seg + 1 < pts.size() && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0.0 ? std::clamp((s - cum[seg - 1]) / len, 0.0, 1.0) : 0.0;
    out.push_back(lerp(pts[seg - 1], pts[seg], t));
  }
  out.push_back(pts.back());
  return out;
}

/// Index of the lexicographically smallest vertex; the start of ring resampling.
inline std::size_t canonical_ring_start(PointSpan ring) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < ring.size(); ++i)
    if (lexicographic_less(ring[i], ring[best])) best = i;
  return best;
}

/// `n` points at equal spacing along a closed ring (closure implicit), starting
/// at the canonical vertex so the result does not depend on the ring's
/// starting index.
inline Polyline resample_ring(PointSpan ring, std::size_t n) {
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "resample_ring needs n >= 3");
  if (ring.size() < 3) throw Error(ErrorCode::InvalidGeometry, "ring needs at least 3 points");
  const std::size_t start = canonical_ring_start(ring);
  Polyline closed;
  closed.reserve(ring.size() + 1);
  for (std::size_t i = 0; i <= ring.size(); ++i) closed.push_back(ring[(start + i) % ring.size()]);
  const auto cum = cumulative_lengths(closed);
  const double perimeter = cum.back();
  if (!(perimeter > 0.0)) throw Error(ErrorCode::InvalidGeometry, "zero-perimeter ring");
  Polyline out;
  out.reserve(n);
  out.push_back(closed.front());
  for (std::size_t k = 1; k < n; ++k)
    out.push_back(point_at_arc(closed, cum, perimeter * static_cast<double>(k) / static_cast<double>(n)));
  return out;
}

struct SegmentProjection {
  double t = 0.0;  // parameter along ab in [0,1]
  Point2D foot;
  double distance = 0.0;
};

inline SegmentProjection project_onto_segment(Point2D p, Point2D a, Point2D b) {
  const Point2D ab = b - a;
  const double len2 = dot(ab, ab);
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  const Point2D foot = lerp(a, b, t);
  return {t, foot, distance(p, foot)};
}

inline double point_segment_distance(Point2D p, Point2D a, Point2D b) {
  return project_onto_segment(p, a, b).distance;
}

/// Distance from p to the unbounded line through a and b.
inline double point_line_distance(Point2D p, Point2D a, Point2D b) {
  const double len = distance(a, b);
  if (len == 0.0) return distance(p, a);
  return std::abs(cross(b - a, p - a)) / len;
}

struct PolylineProjection {
  std::size_t segment = 0;
  double t = 0.0;
  double arc = 0.0;  // arc length of the foot point from the polyline start
  Point2D foot;
  double distance = std::numeric_limits<double>::infinity();
};

inline PolylineProjection project_onto_polyline(Point2D p, PointSpan pts, std::span<const double> cum) {
  PolylineProjection best;
  if (pts.size() == 1) {
    best.foot = pts[0];
    best.distance = distance(p, pts[0]);
    return best;
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto proj = project_onto_segment(p, pts[i], pts[i + 1]);
    if (proj.distance < best.distance) {
      best.segment = i;
      best.t = proj.t;
      best.foot = proj.foot;
      best.distance = proj.distance;
      best.arc = cum[i] + proj.t * (cum[i + 1] - cum[i]);
    }
  }
  return best;
}

inline double point_polyline_distance(Point2D p, PointSpan pts) {
  if (pts.size() == 1) return distance(p, pts[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    best = std::min(best, point_segment_distance(p, pts[i], pts[i + 1]));
  return best;
}

/// Symmetric chamfer distance: the mean nearest-neighbour distance from A to
/// B and from B to A, averaged.
inline double chamfer_distance(PointSpan a, PointSpan b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidGeometry, "chamfer distance of an empty point set");
  auto directed = [](PointSpan from, PointSpan to) {
    double sum = 0.0;
    for (auto p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (auto q : to) best = std::min(best, distance(p, q));
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

/// Shoelace area; positive for counter-clockwise rings.
inline double signed_area(PointSpan ring) {
  double acc = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) acc += cross(ring[i], ring[(i + 1) % ring.size()]);
  return 0.5 * acc;
}

inline Point2D polygon_centroid(PointSpan ring) {
  const double area = signed_area(ring);
  Point2D mean{};
  for (auto p : ring) mean = mean + p;
  mean = mean * (1.0 / static_cast<double>(ring.size()));
  if (std::abs(area) < 1e-15) return mean;
  // Shift to the vertex mean first for numerical stability far from the origin.
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Point2D p = ring[i] - mean, q = ring[(i + 1) % ring.size()] - mean;
    const double w = cross(p, q);
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
  }
  return {mean.x + cx / (6.0 * area), mean.y + cy / (6.0 * area)};
}

namespace detail {

inline double orientation(Point2D a, Point2D b, Point2D c) {
  const Point2D ab = b - a, ac = c - a;
  const double v = cross(ab, ac);
  const double scale = norm(ab) * norm(ac);
  return std::abs(v) <= 1e-12 * scale ? 0.0 : v;
}

inline bool on_segment(Point2D p, Point2D a, Point2D b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

}  // namespace detail

/// True if the closed segments ab and cd share at least one point.
inline bool segments_intersect(Point2D a, Point2D b, Point2D c, Point2D d) {
  if (std::max(a.x, b.x) < std::min(c.x, d.x) || std::max(c.x, d.x) < std::min(a.x, b.x) ||
      std::max(a.y, b.y) < std::min(c.y, d.y) || std::max(c.y, d.y) < std::min(a.y, b.y))
    return false;
  const double o1 = detail::orientation(a, b, c), o2 = detail::orientation(a, b, d);
  const double o3 = detail::orientation(c, d, a), o4 = detail::orientation(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) return true;
  if (o1 == 0 && detail::on_segment(c, a, b)) return true;
  if (o2 == 0 && detail::on_segment(d, a, b)) return true;
  if (o3 == 0 && detail::on_segment(a, c, d)) return true;
  if (o4 == 0 && detail::on_segment(b, c, d)) return true;
  return false;
}

/// Simple polygon test for an implicitly closed ring: at least three
/// vertices, non-zero area, no zero-length edges, no spikes and no crossing
/// or touching between non-adjacent edges.
inline bool is_simple_polygon(PointSpan ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (auto p : ring)
    if (!is_finite(p)) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (ring[i] == ring[(i + 1) % n]) return false;
  double extent = 0.0;
  for (auto p : ring) extent = std::max({extent, std::abs(p.x - ring[0].x), std::abs(p.y - ring[0].y)});
  if (std::abs(signed_area(ring)) <= 1e-12 * extent * extent) return false;
  for (std::size_t i = 0; i < n; ++i) {
    // Adjacent edges (i-1,i) and (i,i+1) must not fold back onto each other.
    const Point2D v = ring[i], u = ring[(i + n - 1) % n], w = ring[(i + 1) % n];
    if (detail::orientation(v, u, w) == 0.0 && dot(u - v, w - v) > 0.0) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Point2D a = ring[i], b = ring[(i + 1) % n];
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
      if (segments_intersect(a, b, ring[j], ring[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// Points spaced at most `step` apart along the polyline, vertices included.
/// With `closed`, the closing edge back to the first vertex is densified too.
inline Polyline densify(PointSpan pts, double step, bool closed = false) {
  Polyline out;
  if (pts.empty()) return out;
  const std::size_t edges = closed ? pts.size() : pts.size() - 1;
  out.push_back(pts.front());
  for (std::size_t i = 0; i < edges; ++i) {
    const Point2D a = pts[i], b = pts[(i + 1) % pts.size()];
    const double len = distance(a, b);
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(len / step)));
    for (std::size_t j = 1; j <= k; ++j) out.push_back(lerp(a, b, static_cast<double>(j) / static_cast<double>(k)));
  }
  return out;
}

struct Box {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void expand(Point2D p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  Box inflated(double r) const { return {min_x - r, min_y - r, max_x + r, max_y + r}; }
  bool intersects(const Box& o) const {
    return !(o.min_x > max_x || o.max_x < min_x || o.min_y > max_y || o.max_y < min_y);
  }
  bool empty() const { return min_x > max_x; }
};

inline Box bounding_box(PointSpan pts) {
  Box b;
  for (auto p : pts) b.expand(p);
  return b;
}

}  // namespace vma

#endif  // VMA_GEOMETRY_HPP_
