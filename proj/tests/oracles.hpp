// Brute-force reference implementations used to check the library. They
// share no code with the optimised versions beyond basic point arithmetic.
#ifndef VMA_TESTS_ORACLES_HPP_
#define VMA_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "vma/vma.hpp"

namespace oracle {

using vma::Point2D;
using vma::Polyline;

inline double seg_dist(Point2D p, Point2D a, Point2D b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

inline double poly_dist(Point2D p, const Polyline& line) {
  if (line.size() == 1) return std::hypot(p.x - line[0].x, p.y - line[0].y);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) best = std::min(best, seg_dist(p, line[i], line[i + 1]));
  return best;
}

/// Points every `step` along each segment, including all vertices.
inline Polyline sample(const Polyline& line, double step) {
  Polyline out{line.front()};
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const double len = std::hypot(line[i + 1].x - line[i].x, line[i + 1].y - line[i].y);
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int k = 1; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      out.push_back({line[i].x + t * (line[i + 1].x - line[i].x), line[i].y + t * (line[i + 1].y - line[i].y)});
    }
  }
  return out;
}

inline double length(const Polyline& line) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) s += std::hypot(line[i + 1].x - line[i].x, line[i + 1].y - line[i].y);
  return s;
}

/// Squared distance from every query pixel to the nearest target pixel, all pairs.
inline std::vector<double> nearest_sq(const std::vector<vma::Pixel>& query, const std::vector<vma::Pixel>& target) {
  std::vector<double> out;
  for (const auto& q : query) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (const auto& t : target) {
      const std::int64_t dx = q.x - t.x, dy = q.y - t.y;
      best = std::min(best, dx * dx + dy * dy);
    }
    out.push_back(static_cast<double>(best));
  }
  return out;
}

struct Prf {
  double precision, recall, f1;
};

/// Eq. 2 evaluated by all-pairs pixel distances.
inline Prf prf(const std::vector<vma::Pixel>& pred, const std::vector<vma::Pixel>& gt, double tau, double px) {
  auto frac = [&](const std::vector<vma::Pixel>& a, const std::vector<vma::Pixel>& b) {
    if (a.empty() || b.empty()) return 0.0;
    std::size_t hits = 0;
    for (double sq : nearest_sq(a, b))
      if (std::sqrt(sq) * px < tau) ++hits;
    return static_cast<double>(hits) / static_cast<double>(a.size());
  };
  const double p = frac(pred, gt), r = frac(gt, pred);
  return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
}

inline double hausdorff(const Polyline& a, const Polyline& b, double step) {
  double h = 0.0;
  for (auto p : sample(a, step)) h = std::max(h, poly_dist(p, b));
  for (auto p : sample(b, step)) h = std::max(h, poly_dist(p, a));
  return h;
}

/// Naive connectivity straight from its definition.
inline double naive_connectivity(const std::vector<Polyline>& pred, const std::vector<Polyline>& gt, double step) {
  std::vector<int> m(gt.size(), 0);
  for (const auto& p : pred) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < gt.size(); ++i)
      if (hausdorff(p, gt[i], step) < hausdorff(p, gt[arg], step)) arg = i;
    ++m[arg];
  }
  double c = 0.0;
  for (int k : m) c += k > 0 ? 1.0 / k : 0.0;
  return c / static_cast<double>(gt.size());
}

/// ECM for predictions that run monotonically along their gt: pixel votes by
/// all-segment search, completion from the projections of the prediction's
/// vertices, entropy of length shares.
inline double ecm(const std::vector<Polyline>& pred, const std::vector<Polyline>& gt, double px) {
  std::vector<std::vector<std::size_t>> members(gt.size());
  for (std::size_t j = 0; j < pred.size(); ++j) {
    std::vector<std::pair<std::int64_t, std::int64_t>> pix;
    for (auto p : sample(pred[j], 0.5 * px)) pix.emplace_back(std::llround(p.x / px), std::llround(p.y / px));
    std::sort(pix.begin(), pix.end());
    pix.erase(std::unique(pix.begin(), pix.end()), pix.end());
    std::vector<int> votes(gt.size(), 0);
    for (auto [x, y] : pix) {
      const Point2D c{x * px, y * px};
      std::size_t arg = 0;
      for (std::size_t i = 1; i < gt.size(); ++i)
        if (poly_dist(c, gt[i]) < poly_dist(c, gt[arg])) arg = i;
      ++votes[arg];
    }
    members[static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin())].push_back(j);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (members[i].empty()) continue;
    double len_sum = 0.0;
    for (auto j : members[i]) len_sum += length(pred[j]);
    double c = 0.0;
    for (auto j : members[i]) {
      const double p = length(pred[j]) / len_sum;
      c -= p * std::log(p);
    }
    // Arc position of a point's foot on gt i.
    auto arc = [&](Point2D p) {
      const auto& g = gt[i];
      double best = std::numeric_limits<double>::infinity(), s_best = 0.0, s = 0.0;
      for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        const double len = std::hypot(g[k + 1].x - g[k].x, g[k + 1].y - g[k].y);
        const double t = std::clamp(((p.x - g[k].x) * (g[k + 1].x - g[k].x) + (p.y - g[k].y) * (g[k + 1].y - g[k].y)) /
                                        (len * len),
                                    0.0, 1.0);
        const double d = seg_dist(p, g[k], g[k + 1]);
        if (d < best) {
          best = d;
          s_best = s + t * len;
        }
        s += len;
      }
      return s_best;
    };
    std::vector<std::pair<double, double>> iv;
    for (auto j : members[i]) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (auto p : pred[j]) {
        lo = std::min(lo, arc(p));
        hi = std::max(hi, arc(p));
      }
      iv.emplace_back(lo, hi);
    }
    std::sort(iv.begin(), iv.end());
    double covered = 0.0, a = iv[0].first, b = iv[0].second;
    for (std::size_t k = 1; k < iv.size(); ++k) {
      if (iv[k].first > b) {
        covered += b - a;
        a = iv[k].first;
        b = iv[k].second;
      } else {
        b = std::max(b, iv[k].second);
      }
    }
    covered += b - a;
    total += std::clamp(covered / length(gt[i]), 0.0, 1.0) * std::exp(-c);
  }
  return total / static_cast<double>(gt.size());
}

/// Dense all-pairs shortest paths (Floyd-Warshall).
struct Graph {
  std::vector<Point2D> nodes;
  std::vector<std::vector<double>> d;

  std::size_t add(Point2D p) {
    nodes.push_back(p);
    for (auto& row : d) row.push_back(std::numeric_limits<double>::infinity());
    d.emplace_back(nodes.size(), std::numeric_limits<double>::infinity());
    d.back().back() = 0.0;
    return nodes.size() - 1;
  }
  void edge(std::size_t a, std::size_t b) {
    const double w = std::hypot(nodes[a].x - nodes[b].x, nodes[a].y - nodes[b].y);
    d[a][b] = d[b][a] = std::min(d[a][b], w);
  }
  void close() {
    const std::size_t n = nodes.size();
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  }
};

/// Exhaustive APLS over every gt node pair with a finite, positive path.
/// The predicted graph gets one extra node per snapped gt node, inserted on
/// the predicted segment nearest to it.
inline double apls(const std::vector<Polyline>& pred, const std::vector<Polyline>& gt, double snap_radius,
                   double junction_radius) {
  auto build = [junction_radius](const std::vector<Polyline>& lines, Graph& g,
                                 std::vector<std::vector<std::size_t>>& ids) {
    std::vector<std::size_t> ends;
    for (const auto& l : lines) {
      ids.emplace_back();
      for (auto p : l) ids.back().push_back(g.add(p));
      for (std::size_t i = 0; i + 1 < l.size(); ++i) g.edge(ids.back()[i], ids.back()[i + 1]);
      ends.push_back(ids.back().front());
      ends.push_back(ids.back().back());
    }
    for (std::size_t a = 0; a < ends.size(); ++a)
      for (std::size_t b = a + 1; b < ends.size(); ++b)
        if (ends[a] != ends[b] &&
            std::hypot(g.nodes[ends[a]].x - g.nodes[ends[b]].x, g.nodes[ends[a]].y - g.nodes[ends[b]].y) <=
                junction_radius)
          g.edge(ends[a], ends[b]);
  };
  Graph g, p;
  std::vector<std::vector<std::size_t>> gid, pid;
  build(gt, g, gid);
  build(pred, p, pid);
  g.close();

  // Snap: nearest predicted segment (ties to the earliest), new node wired to its ends.
  std::vector<std::optional<std::size_t>> snap(g.nodes.size());
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bl = 0, bs = 0;
    for (std::size_t l = 0; l < pred.size(); ++l)
      for (std::size_t s = 0; s + 1 < pred[l].size(); ++s)
        if (const double d = seg_dist(g.nodes[n], pred[l][s], pred[l][s + 1]); d < best) {
          best = d;
          bl = l;
          bs = s;
        }
    if (!(best <= snap_radius)) continue;
    const Point2D a = pred[bl][bs], b = pred[bl][bs + 1];
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double t = std::clamp(((g.nodes[n].x - a.x) * vx + (g.nodes[n].y - a.y) * vy) / (vx * vx + vy * vy), 0.0, 1.0);
    const auto id = p.add({a.x + t * vx, a.y + t * vy});
    const auto ia = pid[bl][bs], ib = pid[bl][bs + 1];
    p.d[id][ia] = p.d[ia][id] = t * std::hypot(vx, vy);
    p.d[id][ib] = p.d[ib][id] = (1 - t) * std::hypot(vx, vy);
    snap[n] = id;
  }
  // Two snaps on one segment are joined directly along it; Floyd-Warshall
  // cannot see that shortcut through the segment's end nodes.
  for (std::size_t a = 0; a < g.nodes.size(); ++a)
    for (std::size_t b = a + 1; b < g.nodes.size(); ++b)
      if (snap[a] && snap[b]) {
        const auto x = *snap[a], y = *snap[b];
        for (const auto& ids : pid)
          for (std::size_t s = 0; s + 1 < ids.size(); ++s) {
            const auto u = ids[s], v = ids[s + 1];
            const double seg = p.d[u][v];
            if (std::abs(p.d[x][u] + p.d[x][v] - seg) < 1e-12 && std::abs(p.d[y][u] + p.d[y][v] - seg) < 1e-12)
              p.d[x][y] = p.d[y][x] = std::min(p.d[x][y], std::abs(p.d[x][u] - p.d[y][u]));
          }
      }
  p.close();

  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < g.nodes.size(); ++a)
    for (std::size_t b = a + 1; b < g.nodes.size(); ++b) {
      const double l = g.d[a][b];
      if (!(l > 0.0) || !std::isfinite(l)) continue;
      double s = 1.0;
      if (snap[a] && snap[b] && std::isfinite(p.d[*snap[a]][*snap[b]]))
        s = std::min(1.0, std::abs(l - p.d[*snap[a]][*snap[b]]) / l);
      sum += s;
      ++count;
    }
  return 1.0 - sum / static_cast<double>(count);
}

/// Minimum-cost one-to-one assignment by enumerating permutations (rows <= cols).
inline std::pair<double, std::vector<int>> best_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size(), m = cost.empty() ? 0 : cost[0].size();
  std::vector<int> cols(m);
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> arg;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cost[i][static_cast<std::size_t>(cols[i])];
    if (s < best - 1e-12) {
      best = s;
      arg.assign(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(n));
    }
  } while (std::next_permutation(cols.begin(), cols.end()));
  return {best, arg};
}

/// Area of the intersection of two axis-aligned rectangles {x0, y0, x1, y1}.
inline double rect_overlap(const double a[4], const double b[4]) {
  const double w = std::max(0.0, std::min(a[2], b[2]) - std::max(a[0], b[0]));
  const double h = std::max(0.0, std::min(a[3], b[3]) - std::max(a[1], b[1]));
  return w * h;
}

}  // namespace oracle

#endif  // VMA_TESTS_ORACLES_HPP_
