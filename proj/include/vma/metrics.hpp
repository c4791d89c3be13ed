#ifndef VMA_METRICS_HPP_
#define VMA_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "vma/annotator.hpp"
#include "vma/map_json.hpp"
#include "vma/spatial.hpp"

namespace vma {

// ---- Rasterization -------------------------------------------------------

struct RasterConfig {
  double resolution = 0.1;         // metres per pixel; ignored for pixel frames
  std::vector<double> thresholds;  // empty: 0.30/0.75/1.50 m or 2/5/10 px by frame unit

  static std::vector<double> default_thresholds(FrameUnit unit) {
    return unit == FrameUnit::Meter ? std::vector<double>{0.30, 0.75, 1.50} : std::vector<double>{2.0, 5.0, 10.0};
  }
  double pixel_size(FrameUnit unit) const { return unit == FrameUnit::Meter ? resolution : 1.0; }
  std::vector<double> taus(FrameUnit unit) const { return thresholds.empty() ? default_thresholds(unit) : thresholds; }

  void validate() const {
    if (!(resolution > 0.0)) throw Error(ErrorCode::InvalidArgument, "resolution must be positive");
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      if (!(thresholds[i] > 0.0) || (i > 0 && !(thresholds[i] > thresholds[i - 1])))
        throw Error(ErrorCode::InvalidArgument, "thresholds must be positive and ascending");
  }
};

struct Pixel {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Densified pixel set: every element outline sampled at a 0.5 px step and
/// rounded to the pixel grid. Sorted and unique.
inline std::vector<Pixel> rasterize(const std::vector<const MapElement*>& elements, double pixel_size) {
  std::vector<Pixel> out;
  for (const MapElement* e : elements) {
    const bool closed = e->kind() != GeomKind::Line;
    for (auto p : densify(e->points(), 0.5 * pixel_size, closed))
      out.push_back({std::llround(p.x / pixel_size), std::llround(p.y / pixel_size)});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace raster_detail {

constexpr double kFar = std::numeric_limits<double>::infinity();

/// One-dimensional squared distance transform (Felzenszwalb-Huttenlocher).
inline void edt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<std::size_t>& v, std::vector<double>& z) {
  const std::size_t n = f.size();
  d.assign(n, kFar);
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  std::size_t k = 0;
  bool any = false;
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q] == kFar) continue;
    if (!any) {
      v[0] = q;
      z[0] = -kFar;
      z[1] = kFar;
      any = true;
      continue;
    }
    const auto qd = static_cast<double>(q);
    double s;
    while (true) {
      const auto vk = static_cast<double>(v[k]);
      s = ((f[q] + qd * qd) - (f[v[k]] + vk * vk)) / (2.0 * (qd - vk));
      if (s <= z[k] && k > 0) --k;
      else break;
    }
    if (s <= z[k]) {  // k == 0 and the new parabola dominates everywhere
      v[0] = q;
      z[0] = -kFar;
      z[1] = kFar;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kFar;
  }
  if (!any) return;
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const auto qd = static_cast<double>(q);
    while (z[k + 1] < qd) ++k;
    const double diff = qd - static_cast<double>(v[k]);
    d[q] = diff * diff + f[v[k]];
  }
}

}  // namespace raster_detail

/// Squared pixel distance from each query pixel to the nearest target pixel.
/// Exact Euclidean distance transform evaluated in blocks around the query
/// pixels; distances beyond `reach` pixels are reported as infinity.
inline std::vector<double> nearest_sq_distances(const std::vector<Pixel>& query, const std::vector<Pixel>& target,
                                                std::int64_t reach) {
  using raster_detail::kFar;
  constexpr std::int64_t kBlock = 64;
  auto block_of = [](std::int64_t c) { return c >= 0 ? c / kBlock : -((-c + kBlock - 1) / kBlock); };
  auto bkey = [](std::int64_t bx, std::int64_t by) {
    return (static_cast<std::uint64_t>(bx) << 32) ^ (static_cast<std::uint64_t>(by) & 0xffffffffULL);
  };
  std::unordered_map<std::uint64_t, std::vector<Pixel>> target_blocks;
  for (const auto& p : target) target_blocks[bkey(block_of(p.x), block_of(p.y))].push_back(p);
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> query_blocks;
  for (std::size_t i = 0; i < query.size(); ++i) query_blocks[{block_of(query[i].x), block_of(query[i].y)}].push_back(i);

  std::vector<double> out(query.size(), kFar);
  const std::int64_t span = (reach + kBlock - 1) / kBlock;
  const std::int64_t w = kBlock + 2 * reach;
  std::vector<double> grid(static_cast<std::size_t>(w * w));
  std::vector<double> f, d, z;
  std::vector<std::size_t> v;
  for (const auto& [block, members] : query_blocks) {
    const std::int64_t x0 = block.first * kBlock - reach, y0 = block.second * kBlock - reach;
    std::fill(grid.begin(), grid.end(), kFar);
    bool any = false;
    for (std::int64_t bx = block.first - span; bx <= block.first + span; ++bx)
      for (std::int64_t by = block.second - span; by <= block.second + span; ++by) {
        auto it = target_blocks.find(bkey(bx, by));
        if (it == target_blocks.end()) continue;
        for (const auto& p : it->second) {
          const std::int64_t gx = p.x - x0, gy = p.y - y0;
          if (gx < 0 || gy < 0 || gx >= w || gy >= w) continue;
          grid[static_cast<std::size_t>(gy * w + gx)] = 0.0;
          any = true;
        }
      }
    if (!any) continue;
    const auto n = static_cast<std::size_t>(w);
    f.resize(n);
    for (std::size_t x = 0; x < n; ++x) {  // columns
      for (std::size_t y = 0; y < n; ++y) f[y] = grid[y * n + x];
      raster_detail::edt_1d(f, d, v, z);
      for (std::size_t y = 0; y < n; ++y) grid[y * n + x] = d[y];
    }
    for (std::size_t y = 0; y < n; ++y) {  // rows
      std::copy_n(grid.begin() + static_cast<std::ptrdiff_t>(y * n), n, f.begin());
      raster_detail::edt_1d(f, d, v, z);
      std::copy_n(d.begin(), n, grid.begin() + static_cast<std::ptrdiff_t>(y * n));
    }
    const auto reach2 = static_cast<double>(reach * reach);
    for (std::size_t i : members) {
      const double sq = grid[static_cast<std::size_t>((query[i].y - y0) * w + (query[i].x - x0))];
      out[i] = sq <= reach2 ? sq : kFar;
    }
  }
  return out;
}

struct PRF {
  double tau = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PrfResult {
  std::vector<PRF> values;
  std::vector<std::string> flags;  // "both_empty", "empty_prediction", "empty_ground_truth"
};

inline double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

/// Fraction of `query` pixels within tau (frame units) of `target`, per tau.
inline std::vector<double> fraction_within(const std::vector<Pixel>& query, const std::vector<Pixel>& target,
                                           const std::vector<double>& taus, double pixel_size) {
  std::vector<double> out(taus.size(), 0.0);
  if (query.empty() || target.empty()) return out;
  const auto reach = static_cast<std::int64_t>(std::ceil(taus.back() / pixel_size)) + 1;
  const auto sq = nearest_sq_distances(query, target, reach);
  for (std::size_t t = 0; t < taus.size(); ++t) {
    std::size_t hits = 0;
    for (double s : sq)
      if (std::sqrt(s) * pixel_size < taus[t]) ++hits;
    out[t] = static_cast<double>(hits) / static_cast<double>(query.size());
  }
  return out;
}

/// Pixel-level precision/recall/F1 between two element sets in one frame.
inline PrfResult pixel_prf(const std::vector<const MapElement*>& pred, const std::vector<const MapElement*>& gt,
                           FrameUnit unit, const RasterConfig& cfg) {
  cfg.validate();
  const double px = cfg.pixel_size(unit);
  const auto taus = cfg.taus(unit);
  const auto pp = rasterize(pred, px);
  const auto pg = rasterize(gt, px);
  PrfResult res;
  if (pp.empty() && pg.empty()) {
    res.flags.push_back("both_empty");
    for (double t : taus) res.values.push_back({t, 1.0, 1.0, 1.0});
    return res;
  }
  if (pp.empty()) res.flags.push_back("empty_prediction");
  if (pg.empty()) res.flags.push_back("empty_ground_truth");
  const auto precision = fraction_within(pp, pg, taus, px);
  const auto recall = fraction_within(pg, pp, taus, px);
  for (std::size_t t = 0; t < taus.size(); ++t)
    res.values.push_back({taus[t], precision[t], recall[t], f1_score(precision[t], recall[t])});
  return res;
}

inline PrfResult pixel_prf(const VectorizedMap& pred, const VectorizedMap& gt, const RasterConfig& cfg) {
  if (pred.frame().name() != gt.frame().name()) throw Error(ErrorCode::FrameMismatch, "pixel_prf across frames");
  std::vector<const MapElement*> p, g;
  for (const auto& e : pred.elements()) p.push_back(&e);
  for (const auto& e : gt.elements()) g.push_back(&e);
  return pixel_prf(p, g, gt.frame().unit(), cfg);
}

// ---- Instance-level connectivity -----------------------------------------

/// Hausdorff distance between two polylines: vertices and `step` samples of
/// each polyline against the exact segment distance to the other. The inner
/// scan stops as soon as a sample cannot raise the running maximum.
inline double hausdorff_distance(PointSpan a, PointSpan b, double step) {
  auto directed = [step](PointSpan from, PointSpan to) {
    double worst = 0.0;
    for (auto p : densify(from, step)) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i + 1 < to.size() && best > worst; ++i)
        best = std::min(best, point_segment_distance(p, to[i], to[i + 1]));
      if (to.size() == 1) best = distance(p, to[0]);
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

/// Mean over gt instances of 1(M_i > 0) / M_i, where each prediction goes
/// to the gt instance at the smallest Hausdorff distance.
inline double naive_connectivity(const std::vector<const MapElement*>& pred, const std::vector<const MapElement*>& gt,
                                 double step) {
  if (gt.empty()) throw Error(ErrorCode::EmptyGroundTruth, "naive connectivity needs ground-truth instances");
  std::vector<std::size_t> assigned(gt.size(), 0);
  for (const MapElement* p : pred) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const double d = hausdorff_distance(p->points(), gt[i]->points(), step);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    ++assigned[best];
  }
  double sum = 0.0;
  for (auto m : assigned) sum += m > 0 ? 1.0 / static_cast<double>(m) : 0.0;
  return sum / static_cast<double>(gt.size());
}

/// Entropy-based connectivity: pixel-vote assignment of predictions to gt
/// instances, completion alpha_i from projection coverage, and the length
/// entropy C_i of the assigned predictions. Normalised by the gt count.
inline double ecm(const std::vector<const MapElement*>& pred, const std::vector<const MapElement*>& gt,
                  double pixel_size) {
  if (gt.empty()) throw Error(ErrorCode::EmptyGroundTruth, "ECM needs ground-truth instances");
  const double step = 0.5 * pixel_size;
  SegmentIndex index(std::max(1.0, 20.0 * pixel_size));
  for (const MapElement* g : gt) index.add(g->points());

  std::vector<std::vector<std::size_t>> members(gt.size());
  for (std::size_t j = 0; j < pred.size(); ++j) {
    std::vector<Pixel> pixels;
    for (auto p : densify(pred[j]->points(), step)) pixels.push_back({std::llround(p.x / pixel_size), std::llround(p.y / pixel_size)});
    std::sort(pixels.begin(), pixels.end());
    pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
    std::vector<std::size_t> votes(gt.size(), 0);
    for (const auto& px : pixels) {
      const Point2D c{static_cast<double>(px.x) * pixel_size, static_cast<double>(px.y) * pixel_size};
      ++votes[index.nearest(c)->polyline];
    }
    const auto winner = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    members[winner].push_back(j);
  }

  double total = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (members[i].empty()) continue;
    const auto& g = gt[i]->points();
    const auto cum = cumulative_lengths(g);
    const double gt_len = cum.back();
    double len_sum = 0.0;
    for (auto j : members[i]) len_sum += polyline_length(pred[j]->points());
    double entropy = 0.0;
    for (auto j : members[i]) {
      const double p = polyline_length(pred[j]->points()) / len_sum;
      if (p > 0.0) entropy -= p * std::log(p);
    }
    // Union of the arc intervals swept by each prediction's projection.
    std::vector<std::pair<double, double>> intervals;
    for (auto j : members[i]) {
      std::optional<double> prev;
      double lo = 0.0, hi = 0.0;
      for (auto p : densify(pred[j]->points(), step)) {
        const auto hit = index.nearest(p, std::numeric_limits<double>::infinity(), i);
        const double s = cum[hit->segment] + hit->t * (cum[hit->segment + 1] - cum[hit->segment]);
        if (prev && std::abs(s - *prev) <= 4.0 * step) {
          lo = std::min(lo, s);
          hi = std::max(hi, s);
        } else {
          if (prev) intervals.emplace_back(lo, hi);
          lo = hi = s;
        }
        prev = s;
      }
      if (prev) intervals.emplace_back(lo, hi);
    }
    std::sort(intervals.begin(), intervals.end());
    double covered = 0.0, cur_lo = 0.0, cur_hi = -1.0;
    for (const auto& [lo, hi] : intervals) {
      if (lo > cur_hi) {
        if (cur_hi >= cur_lo) covered += cur_hi - cur_lo;
        cur_lo = lo;
        cur_hi = hi;
      } else {
        cur_hi = std::max(cur_hi, hi);
      }
    }
    if (cur_hi >= cur_lo) covered += cur_hi - cur_lo;
    const double alpha = gt_len > 0.0 ? std::clamp(covered / gt_len, 0.0, 1.0) : 0.0;
    total += alpha * std::exp(-entropy);
  }
  return total / static_cast<double>(gt.size());
}

// ---- APLS ----------------------------------------------------------------

/// Undirected graph over polyline vertices. Polyline endpoints closer than
/// the junction radius are linked by an edge of their true distance.
class PathGraph {
 public:
  struct Segment {
    std::size_t u = 0, v = 0;
    double length = 0.0;
  };

  PathGraph(const std::vector<const MapElement*>& lines, double junction_radius) {
    std::vector<std::size_t> ends;
    for (const MapElement* e : lines) {
      const auto& pts = e->points();
      const std::size_t base = nodes_.size();
      nodes_.insert(nodes_.end(), pts.begin(), pts.end());
      adj_.resize(nodes_.size());
      std::vector<std::size_t> seg_ids;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        seg_ids.push_back(segments_.size());
        link(base + i, base + i + 1);
      }
      polyline_segments_.push_back(std::move(seg_ids));
      ends.push_back(base);
      ends.push_back(base + pts.size() - 1);
    }
    for (std::size_t a = 0; a < ends.size(); ++a)
      for (std::size_t b = a + 1; b < ends.size(); ++b)
        if (ends[a] != ends[b] && distance(nodes_[ends[a]], nodes_[ends[b]]) <= junction_radius)
          link(ends[a], ends[b]);
    // Components by flood fill.
    component_.assign(nodes_.size(), SIZE_MAX);
    std::size_t c = 0;
    for (std::size_t s = 0; s < nodes_.size(); ++s) {
      if (component_[s] != SIZE_MAX) continue;
      std::vector<std::size_t> stack{s};
      component_[s] = c;
      while (!stack.empty()) {
        const auto n = stack.back();
        stack.pop_back();
        for (const auto& [m, w] : adj_[n])
          if (component_[m] == SIZE_MAX) {
            component_[m] = c;
            stack.push_back(m);
          }
      }
      ++c;
    }
    components_ = c;
  }

  const std::vector<Point2D>& nodes() const { return nodes_; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t component(std::size_t n) const { return component_[n]; }
  std::size_t component_count() const { return components_; }
  /// Segment ids of the i-th input polyline, in order.
  const std::vector<std::size_t>& polyline_segments(std::size_t i) const { return polyline_segments_[i]; }

  /// Single-source shortest path lengths, cached per source.
  const std::vector<double>& distances_from(std::size_t src) const {
    auto it = cache_.find(src);
    if (it != cache_.end()) return it->second;
    std::vector<double> dist(nodes_.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[src] = 0.0;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      const auto [d, n] = heap.top();
      heap.pop();
      if (d > dist[n]) continue;
      for (const auto& [m, w] : adj_[n])
        if (d + w < dist[m]) {
          dist[m] = d + w;
          heap.emplace(dist[m], m);
        }
    }
    return cache_.emplace(src, std::move(dist)).first->second;
  }

 private:
  void link(std::size_t a, std::size_t b) {
    const double w = distance(nodes_[a], nodes_[b]);
    segments_.push_back({a, b, w});
    adj_[a].emplace_back(b, w);
    adj_[b].emplace_back(a, w);
  }

  std::vector<Point2D> nodes_;
  std::vector<std::vector<std::pair<std::size_t, double>>> adj_;
  std::vector<Segment> segments_;
  std::vector<std::vector<std::size_t>> polyline_segments_;
  std::vector<std::size_t> component_;
  std::size_t components_ = 0;
  mutable std::unordered_map<std::size_t, std::vector<double>> cache_;
};

struct AplsConfig {
  std::size_t num_pairs = 200;
  double snap_radius = 4.0;
  double junction_radius = 1.0;
  std::uint64_t seed = 7;
};

/// Average path length similarity. Ground-truth node pairs with a finite
/// path are scored min(1, |L_gt - L_pred| / L_gt); gt nodes snap to the
/// nearest point on a predicted edge within the snap radius, and failed
/// snaps or missing predicted paths score 1. APLS = 1 - mean score.
/// Every eligible pair is scored when num_pairs covers them all; otherwise
/// num_pairs pairs are drawn uniformly with replacement.
inline double apls(const std::vector<const MapElement*>& pred, const std::vector<const MapElement*>& gt,
                   const AplsConfig& cfg) {
  PathGraph g(gt, cfg.junction_radius);
  if (g.nodes().empty()) throw Error(ErrorCode::EmptyGroundTruth, "APLS needs a ground-truth graph");
  PathGraph p(pred, cfg.junction_radius);

  // Snap every gt node onto the predicted polylines.
  struct Snap {
    std::size_t segment = 0;
    double t = 0.0;
  };
  std::vector<std::optional<Snap>> snaps(g.nodes().size());
  if (!pred.empty()) {
    SegmentIndex index(std::max(1.0, cfg.snap_radius));
    for (const MapElement* e : pred) index.add(e->points());
    for (std::size_t n = 0; n < g.nodes().size(); ++n)
      if (auto hit = index.nearest(g.nodes()[n], cfg.snap_radius))
        snaps[n] = Snap{p.polyline_segments(hit->polyline)[hit->segment], hit->t};
  }
  auto pred_length = [&](const Snap& a, const Snap& b) {
    const auto& sa = p.segments()[a.segment];
    const auto& sb = p.segments()[b.segment];
    double best = std::numeric_limits<double>::infinity();
    if (a.segment == b.segment) best = std::abs(a.t - b.t) * sa.length;
    const std::pair<std::size_t, double> from[2] = {{sa.u, a.t * sa.length}, {sa.v, (1.0 - a.t) * sa.length}};
    const std::pair<std::size_t, double> to[2] = {{sb.u, b.t * sb.length}, {sb.v, (1.0 - b.t) * sb.length}};
    for (const auto& [x, dx] : from) {
      const auto& dist = p.distances_from(x);
      for (const auto& [y, dy] : to) best = std::min(best, dx + dist[y] + dy);
    }
    return best;
  };
  auto score = [&](std::size_t a, std::size_t b, double l_gt) {
    if (!snaps[a] || !snaps[b]) return 1.0;
    const double l_pred = pred_length(*snaps[a], *snaps[b]);
    if (!std::isfinite(l_pred)) return 1.0;
    return std::min(1.0, std::abs(l_gt - l_pred) / l_gt);
  };

  // Eligible pairs: distinct nodes of one component with positive path length.
  std::vector<std::vector<std::size_t>> comp_nodes(g.component_count());
  for (std::size_t n = 0; n < g.nodes().size(); ++n) comp_nodes[g.component(n)].push_back(n);
  std::vector<double> weights;
  double total_pairs = 0.0;
  for (const auto& c : comp_nodes) {
    const auto k = static_cast<double>(c.size());
    weights.push_back(k * (k - 1.0) / 2.0);
    total_pairs += weights.back();
  }
  if (total_pairs == 0.0) throw Error(ErrorCode::EmptyGroundTruth, "APLS ground truth has no node pairs");

  double sum = 0.0;
  std::size_t count = 0;
  if (static_cast<double>(cfg.num_pairs) >= total_pairs) {
    for (const auto& c : comp_nodes)
      for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& dist = g.distances_from(c[i]);
        for (std::size_t j = i + 1; j < c.size(); ++j) {
          const double l_gt = dist[c[j]];
          if (!(l_gt > 0.0) || !std::isfinite(l_gt)) continue;
          sum += score(c[i], c[j], l_gt);
          ++count;
        }
      }
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::discrete_distribution<std::size_t> pick_comp(weights.begin(), weights.end());
    std::size_t attempts = 0;
    while (count < cfg.num_pairs && attempts < 100 * cfg.num_pairs) {
      ++attempts;
      const auto& c = comp_nodes[pick_comp(rng)];
      std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);
      std::size_t a = pick(rng), b = pick(rng);
      if (a == b) continue;
      if (b < a) std::swap(a, b);
      const double l_gt = g.distances_from(c[a])[c[b]];
      if (!(l_gt > 0.0) || !std::isfinite(l_gt)) continue;
      sum += score(c[a], c[b], l_gt);
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptyGroundTruth, "APLS ground truth has no node pairs");
  return 1.0 - sum / static_cast<double>(count);
}

// ---- Attributes ----------------------------------------------------------

/// Per attribute name: fraction of matched pairs whose predicted tag equals
/// the gt tag. Attributes absent from every matched gt element are omitted.
inline std::map<std::string, double> attribute_accuracy(const VectorizedMap& pred, const VectorizedMap& gt,
                                                        const AssignmentResult& assignment) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // correct, total
  for (const auto& pair : assignment.pairs) {
    const MapElement* p = pred.find(pair.pred_id);
    const MapElement* g = gt.find(pair.gt_id);
    if (p == nullptr || g == nullptr) throw Error(ErrorCode::InvalidArgument, "assignment refers to unknown ids");
    for (const auto& [name, tag] : g->attrs()) {
      auto& [ok, total] = tally[name];
      ++total;
      auto it = p->attrs().find(name);
      if (it != p->attrs().end() && it->second == tag) ++ok;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [name, t] : tally) out[name] = static_cast<double>(t.first) / static_cast<double>(t.second);
  return out;
}

// ---- Report --------------------------------------------------------------

struct EvalConfig {
  RasterConfig raster;
  AplsConfig apls;
  std::size_t match_points = 50;
};

/// Lines and areas resampled to `n` uniformly spaced points; discrete boxes unchanged.
/// An area whose resampled ring would self-intersect keeps its own vertices.
inline VectorizedMap uniform_representation(const VectorizedMap& map, std::size_t n) {
  std::vector<MapElement> out;
  out.reserve(map.size());
  for (const auto& e : map.elements()) {
    switch (e.kind()) {
      case GeomKind::Line: out.push_back(e.with_points(resample_uniform(e.points(), n))); break;
      case GeomKind::Area: {
        auto ring = resample_ring(e.points(), n);
        out.push_back(is_simple_polygon(ring) ? e.with_points(std::move(ring)) : e);
        break;
      }
      case GeomKind::Discrete: out.push_back(e); break;
    }
  }
  return VectorizedMap(map.frame(), std::move(out));
}

struct SemanticReport {
  std::string semantic;
  GeomKind kind = GeomKind::Line;
  std::size_t pred_count = 0;
  std::size_t gt_count = 0;
  std::vector<PRF> prf;
  std::optional<double> naive_connectivity;
  std::optional<double> apls;
  std::optional<double> ecm;
  std::vector<std::string> flags;
};

struct EvalReport {
  FrameUnit unit = FrameUnit::Meter;
  double resolution = 0.1;
  std::vector<double> thresholds;
  std::vector<SemanticReport> semantics;  // sorted by name
  std::map<std::string, double> attribute_accuracy;
  std::map<std::string, double> aggregate;
  std::size_t matched = 0;
  std::size_t unmatched_pred = 0;
  std::size_t unmatched_gt = 0;
  double mean_p2p = 0.0;
  double mean_p2l = 0.0;

  const SemanticReport* find(const std::string& semantic) const {
    for (const auto& s : semantics)
      if (s.semantic == semantic) return &s;
    return nullptr;
  }
};

inline std::string tau_label(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", tau);
  return buf;
}

/// Full evaluation of `pred` against `gt`, per semantic type and aggregate.
inline EvalReport evaluate(const VectorizedMap& pred, const VectorizedMap& gt, const EvalConfig& cfg = {}) {
  if (pred.frame().name() != gt.frame().name())
    throw Error(ErrorCode::FrameMismatch,
                "cannot evaluate frame '" + pred.frame().name() + "' against '" + gt.frame().name() + "'");
  cfg.raster.validate();
  EvalReport report;
  report.unit = gt.frame().unit();
  report.resolution = cfg.raster.pixel_size(report.unit);
  report.thresholds = cfg.raster.taus(report.unit);

  std::map<std::string, std::pair<std::vector<const MapElement*>, std::vector<const MapElement*>>> groups;
  std::map<std::string, GeomKind> kinds;
  for (const auto& e : pred.elements()) {
    groups[e.semantic().name()].first.push_back(&e);
    kinds.emplace(e.semantic().name(), e.kind());
  }
  for (const auto& e : gt.elements()) {
    groups[e.semantic().name()].second.push_back(&e);
    kinds[e.semantic().name()] = e.kind();
  }
  const double px = report.resolution;
  for (const auto& [name, sets] : groups) {
    const auto& [p, g] = sets;
    SemanticReport s;
    s.semantic = name;
    s.kind = kinds[name];
    s.pred_count = p.size();
    s.gt_count = g.size();
    auto prf = pixel_prf(p, g, report.unit, cfg.raster);
    s.prf = std::move(prf.values);
    s.flags = std::move(prf.flags);
    if (s.kind == GeomKind::Line && !g.empty()) {
      std::vector<const MapElement*> lines;
      for (auto* e : p)
        if (e->kind() == GeomKind::Line) lines.push_back(e);
      s.naive_connectivity = naive_connectivity(lines, g, 0.5 * px);
      s.ecm = ecm(lines, g, px);
      s.apls = apls(lines, g, cfg.apls);
    }
    report.semantics.push_back(std::move(s));
  }

  // Matching runs on the uniform point-sequence representation of both sides,
  // so sparsified predictions pair point-by-point with the ground truth.
  const auto assignment = hierarchical_assign(uniform_representation(pred, cfg.match_points),
                                              uniform_representation(gt, cfg.match_points));
  report.attribute_accuracy = attribute_accuracy(pred, gt, assignment);
  report.matched = assignment.pairs.size();
  report.unmatched_pred = assignment.unmatched_pred.size();
  report.unmatched_gt = assignment.unmatched_gt.size();
  for (const auto& pair : assignment.pairs) {
    report.mean_p2p += p2p_loss(pair.pairing);
    report.mean_p2l += p2l_loss(pair.pairing);
  }
  if (report.matched > 0) {
    report.mean_p2p /= static_cast<double>(report.matched);
    report.mean_p2l /= static_cast<double>(report.matched);
  }

  // Aggregates: plain means over the semantics that report each value.
  std::map<std::string, std::pair<double, std::size_t>> acc;
  auto add = [&acc](const std::string& key, double v) {
    acc[key].first += v;
    ++acc[key].second;
  };
  for (const auto& s : report.semantics) {
    for (const auto& v : s.prf) {
      add("precision@" + tau_label(v.tau), v.precision);
      add("recall@" + tau_label(v.tau), v.recall);
      add("f1@" + tau_label(v.tau), v.f1);
    }
    if (s.naive_connectivity) add("naive_connectivity", *s.naive_connectivity);
    if (s.apls) add("apls", *s.apls);
    if (s.ecm) add("ecm", *s.ecm);
  }
  for (const auto& [name, value] : report.attribute_accuracy) add("attribute_accuracy", value);
  for (const auto& [key, v] : acc) report.aggregate[key] = v.first / static_cast<double>(v.second);
  return report;
}

inline json report_to_json(const EvalReport& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["unit"] = to_string(r.unit);
  j["resolution"] = r.resolution;
  j["thresholds"] = r.thresholds;
  json sems = json::object();
  for (const auto& s : r.semantics) {
    json o;
    o["kind"] = to_string(s.kind);
    o["pred_count"] = s.pred_count;
    o["gt_count"] = s.gt_count;
    json prf = json::array();
    for (const auto& v : s.prf)
      prf.push_back({{"tau", v.tau}, {"precision", v.precision}, {"recall", v.recall}, {"f1", v.f1}});
    o["prf"] = std::move(prf);
    if (s.naive_connectivity) o["naive_connectivity"] = *s.naive_connectivity;
    if (s.apls) o["apls"] = *s.apls;
    if (s.ecm) o["ecm"] = *s.ecm;
    o["flags"] = s.flags;
    sems[s.semantic] = std::move(o);
  }
  j["semantics"] = std::move(sems);
  j["attribute_accuracy"] = r.attribute_accuracy;
  j["aggregate"] = r.aggregate;
  j["matching"] = {{"matched", r.matched},
                   {"unmatched_pred", r.unmatched_pred},
                   {"unmatched_gt", r.unmatched_gt},
                   {"mean_p2p", r.mean_p2p},
                   {"mean_p2l", r.mean_p2l}};
  return j;
}

/// Plain-text table: one row per semantic, P/R/F1 at each threshold plus
/// the connectivity metrics.
inline std::string report_table(const EvalReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %5s %5s", "semantic", "pred", "gt");
  out += buf;
  const char* unit = r.unit == FrameUnit::Meter ? "m" : "px";
  for (double t : r.thresholds) {
    std::snprintf(buf, sizeof buf, "  P@%s%s R@%s%s F1@%s%s", tau_label(t).c_str(), unit, tau_label(t).c_str(), unit,
                  tau_label(t).c_str(), unit);
    out += buf;
  }
  out += "    NC   APLS    ECM\n";
  auto opt = [](const std::optional<double>& v) {
    char b[16];
    if (v) std::snprintf(b, sizeof b, "%6.3f", *v);
    else std::snprintf(b, sizeof b, "%6s", "-");
    return std::string(b);
  };
  for (const auto& s : r.semantics) {
    std::snprintf(buf, sizeof buf, "%-14s %5zu %5zu", s.semantic.c_str(), s.pred_count, s.gt_count);
    out += buf;
    for (const auto& v : s.prf) {
      const int w = static_cast<int>(tau_label(v.tau).size() + std::char_traits<char>::length(unit)) + 3;
      std::snprintf(buf, sizeof buf, "  %*.3f %*.3f %*.3f", w, v.precision, w, v.recall, w + 1, v.f1);
      out += buf;
    }
    out += " " + opt(s.naive_connectivity) + " " + opt(s.apls) + " " + opt(s.ecm) + "\n";
  }
  for (const auto& [name, acc] : r.attribute_accuracy) {
    std::snprintf(buf, sizeof buf, "attr %-24s %.3f\n", name.c_str(), acc);
    out += buf;
  }
  return out;
}

}  // namespace vma

#endif  // VMA_METRICS_HPP_
