#ifndef VMA_MERGE_HPP_
#define VMA_MERGE_HPP_

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vma/log.hpp"
#include "vma/map_types.hpp"
#include "vma/polygon_ops.hpp"

namespace vma {

struct MergeConfig {
  double theta_line = 3.0;         // minimum overlap length (m)
  double eps_lateral = 0.5;        // tube half-width defining overlap and endpoint closeness (m)
  double delta_discrete = 1.0;     // chamfer association threshold (m)
  double delta_area = 0.3;         // IoU association threshold
  double delta_containment = 0.8;  // intersection / smaller area association threshold

  void validate() const {
    if (!(theta_line > 0.0 && eps_lateral > 0.0 && delta_discrete > 0.0))
      throw Error(ErrorCode::InvalidArgument, "merge thresholds must be positive");
    if (!(delta_area > 0.0 && delta_area < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta_area must be in (0,1)");
    if (!(delta_containment > 0.0 && delta_containment <= 1.0))
      throw Error(ErrorCode::InvalidArgument, "delta_containment must be in (0,1]");
  }
};

/// attribute name -> tag -> count
using VoteRecord = std::map<std::string, std::map<std::string, std::size_t>>;

/// Majority tag per attribute; ties go to the lexicographically smallest tag.
inline AttributeSet vote_attributes(const VoteRecord& record) {
  AttributeSet out;
  for (const auto& [name, tags] : record) {
    std::size_t best = 0;
    for (const auto& [tag, count] : tags)
      if (count > best) {
        best = count;
        out[name] = tag;
      }
  }
  return out;
}

/// Vote records of the elements of a map under construction, keyed by id.
class VoteBook {
 public:
  void seed(const MapElement& e) {
    if (records_.contains(e.id())) return;
    auto& rec = records_[e.id()];
    for (const auto& [name, tag] : e.attrs()) ++rec[name][tag];
  }

  /// Moves every vote of `absorbed` onto `survivor`.
  void absorb(const std::string& survivor, const std::string& absorbed) {
    if (survivor == absorbed) return;
    auto it = records_.find(absorbed);
    if (it == records_.end()) return;
    auto& rec = records_[survivor];
    for (const auto& [name, tags] : it->second)
      for (const auto& [tag, count] : tags) rec[name][tag] += count;
    records_.erase(it);
  }

  void erase(const std::string& id) { records_.erase(id); }
  const VoteRecord* find(const std::string& id) const {
    auto it = records_.find(id);
    return it == records_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::string, VoteRecord> records_;
};

namespace merge_detail {

struct TubeProfile {
  double overlap = 0.0;  // arc length of the longest in-tube run of a
  double tangent_dot = 0.0;
};

/// Samples `a` every eps/5 and measures the longest run of samples within
/// eps of `b`, along with the summed tangent agreement inside the tube.
inline TubeProfile tube_profile(PointSpan a, PointSpan b, double eps) {
  TubeProfile out;
  const Box bbox = bounding_box(b).inflated(eps);
  const auto cum_b = cumulative_lengths(b);
  const double step = eps / 5.0;
  double run_start = 0.0, run_end = 0.0;
  bool in_run = false;
  auto visit = [&](Point2D p, double s, Point2D tangent) {
    bool inside = false;
    if (p.x >= bbox.min_x && p.x <= bbox.max_x && p.y >= bbox.min_y && p.y <= bbox.max_y) {
      const auto proj = project_onto_polyline(p, b, cum_b);
      if (proj.distance <= eps) {
        inside = true;
        const Point2D tb = b[proj.segment + 1] - b[proj.segment];
        out.tangent_dot += dot(tangent, tb * (1.0 / norm(tb)));
      }
    }
    if (inside) {
      if (!in_run) run_start = s;
      run_end = s;
      in_run = true;
      out.overlap = std::max(out.overlap, run_end - run_start);
    } else {
      in_run = false;
    }
  };
  double s0 = 0.0;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    const Point2D p = a[i], q = a[i + 1];
    const double len = distance(p, q);
    const Point2D tangent = (q - p) * (1.0 / len);
    Box seg;
    seg.expand(p);
    seg.expand(q);
    const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(len / step)));
    if (!seg.intersects(bbox)) {
      if (in_run) in_run = false;
    } else {
      for (std::size_t k = 0; k < m; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(m);
        visit(lerp(p, q, u), s0 + u * len, tangent);
      }
    }
    s0 += len;
    if (i + 2 == a.size()) visit(q, s0, tangent);
  }
  return out;
}

inline bool within_tube(PointSpan pts, PointSpan of, double eps) {
  for (auto p : pts)
    if (point_polyline_distance(p, of) > eps) return false;
  return true;
}

}  // namespace merge_detail

/// Line association: the overlap (longest stretch of `a` inside the eps tube
/// of `b`) reaches theta_line and each line has an endpoint near the other.
/// A line lying wholly inside the other's tube is also associated, since its
/// endpoints cannot reach the longer line's ends.
inline bool associate_lines(PointSpan a, PointSpan b, const MergeConfig& cfg) {
  const double eps = cfg.eps_lateral;
  if (!bounding_box(a).inflated(eps).intersects(bounding_box(b))) return false;
  const bool a_end_near = point_polyline_distance(a.front(), b) <= eps || point_polyline_distance(a.back(), b) <= eps;
  const bool b_end_near = point_polyline_distance(b.front(), a) <= eps || point_polyline_distance(b.back(), a) <= eps;
  if (!a_end_near && !b_end_near) return false;
  if (a_end_near && b_end_near && merge_detail::tube_profile(a, b, eps).overlap >= cfg.theta_line) return true;
  const bool a_shorter = polyline_length(a) <= polyline_length(b);
  return a_shorter ? merge_detail::within_tube(a, b, eps) : merge_detail::within_tube(b, a, eps);
}

/// Fuses two associated lines. `a` (the earlier observation) is kept whole;
/// `b` contributes only the parts that extend past a's endpoints.
inline Polyline fuse_lines(PointSpan a_in, PointSpan b_in, const MergeConfig& cfg) {
  const double eps = cfg.eps_lateral;
  Polyline a(a_in.begin(), a_in.end());
  Polyline b(b_in.begin(), b_in.end());
  if (merge_detail::tube_profile(a, b, eps).tangent_dot < 0.0) std::reverse(b.begin(), b.end());
  const auto cum_b = cumulative_lengths(b);

  Polyline out;
  auto push = [&out](Point2D p) {
    if (out.empty() || !(out.back() == p)) out.push_back(p);
  };
  // b extends before a's start when a.front lies on b but b.front does not lie on a.
  const auto front = project_onto_polyline(a.front(), b, cum_b);
  if (front.distance <= eps && point_polyline_distance(b.front(), a) > eps)
    for (std::size_t i = 0; i < b.size() && cum_b[i] < front.arc; ++i) push(b[i]);
  for (auto p : a) push(p);
  const auto back = project_onto_polyline(a.back(), b, cum_b);
  if (back.distance <= eps && point_polyline_distance(b.back(), a) > eps)
    for (std::size_t i = 0; i < b.size(); ++i)
      if (cum_b[i] > back.arc) push(b[i]);
  return out;
}

namespace merge_detail {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  // The smaller index stays the root so groups are named by their earliest member.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

template <typename Assoc>
std::vector<std::vector<std::size_t>> closure_groups(std::size_t n, Assoc&& assoc) {
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (uf.find(i) != uf.find(j) && assoc(i, j)) uf.unite(i, j);
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

}  // namespace merge_detail

/// Non-maximum suppression over an associated group of discrete elements:
/// the most confident element survives (ties to the smaller id).
inline const MapElement& merge_discrete(std::span<const MapElement* const> group) {
  if (group.empty()) throw Error(ErrorCode::InvalidArgument, "merge_discrete of an empty group");
  const MapElement* best = group.front();
  for (const MapElement* e : group)
    if (e->confidence() > best->confidence() || (e->confidence() == best->confidence() && e->id() < best->id()))
      best = e;
  return *best;
}

/// Union of an associated group of polygons, folded in group order.
inline Polyline merge_area(std::span<const Polyline* const> group) {
  if (group.empty()) throw Error(ErrorCode::InvalidArgument, "merge_area of an empty group");
  Polyline acc = *group.front();
  std::size_t holes = 0;
  for (std::size_t k = 1; k < group.size(); ++k) {
    auto u = polygon_union(acc, *group[k]);
    holes += u.holes_dropped;
    if (u.outers.empty()) throw Error(ErrorCode::InternalGeometryError, "polygon union is empty");
    if (u.outers.size() > 1 && polygon_area(u.outers[1]) > 1e-6 * polygon_area(u.outers[0]))
      throw Error(ErrorCode::InternalGeometryError, "union of associated polygons is disconnected");
    acc = std::move(u.outers.front());
  }
  if (holes > 0) log::warn("polygon union produced ", holes, " hole(s); holes are discarded");
  if (!is_simple_polygon(acc)) {
    log::warn("polygon union is not simple; keeping the largest input");
    const Polyline* largest = group.front();
    for (const Polyline* p : group)
      if (polygon_area(*p) > polygon_area(*largest)) largest = p;
    return *largest;
  }
  return acc;
}

/// Polygon association: IoU above delta_area, or one polygon lying mostly
/// inside the other (fragments cut at unit borders).
inline bool associate_areas(PointSpan p, PointSpan q, const MergeConfig& cfg) {
  if (!bounding_box(p).intersects(bounding_box(q))) return false;
  return polygon_iou(p, q) > cfg.delta_area || polygon_containment(p, q) > cfg.delta_containment;
}

namespace merge_detail {

inline std::string fresh_id(const std::string& id, const std::set<std::string>& taken) {
  if (!taken.contains(id)) return id;
  for (std::size_t k = 1;; ++k) {
    std::string candidate = id + "#" + std::to_string(k);
    if (!taken.contains(candidate)) return candidate;
  }
}

}  // namespace merge_detail

/// One incremental merge step M_acc (+) M_unit. Both maps must share a frame.
/// `votes`, when given, accumulates attribute votes across steps.
inline VectorizedMap merge_maps(const VectorizedMap& acc, const VectorizedMap& unit, const MergeConfig& cfg,
                                VoteBook* votes = nullptr) {
  cfg.validate();
  if (acc.frame().name() != unit.frame().name())
    throw Error(ErrorCode::FrameMismatch,
                "cannot merge frame '" + unit.frame().name() + "' into '" + acc.frame().name() + "'");
  VoteBook local_votes;
  VoteBook& book = votes != nullptr ? *votes : local_votes;

  // Working list: accumulated elements first, then unit elements (colliding ids renamed).
  std::vector<MapElement> work;
  std::vector<bool> alive;
  std::set<std::string> taken;
  for (const auto& e : acc.elements()) {
    taken.insert(e.id());
    work.push_back(e);
  }
  const std::size_t first_new = work.size();
  for (const auto& e : unit.elements()) {
    const std::string id = merge_detail::fresh_id(e.id(), taken);
    taken.insert(id);
    work.push_back(id == e.id() ? e : e.with_id(id));
  }
  alive.assign(work.size(), true);
  for (const auto& e : work) book.seed(e);

  auto absorb = [&](std::size_t survivor, std::size_t gone) {
    book.absorb(work[survivor].id(), work[gone].id());
    alive[gone] = false;
  };

  // Lines: worklist fixpoint. A fused element is re-examined against every
  // other line of its semantic until nothing associates any more.
  std::deque<std::size_t> dirty;
  for (std::size_t i = first_new; i < work.size(); ++i)
    if (work[i].kind() == GeomKind::Line) dirty.push_back(i);
  while (!dirty.empty()) {
    std::size_t d = dirty.front();
    dirty.pop_front();
    if (!alive[d]) continue;
    for (std::size_t k = 0; k < work.size() && alive[d]; ++k) {
      if (k == d || !alive[k] || work[k].kind() != GeomKind::Line || !(work[k].semantic() == work[d].semantic()))
        continue;
      const std::size_t a = std::min(d, k), b = std::max(d, k);
      if (!associate_lines(work[a].points(), work[b].points(), cfg)) continue;
      Polyline fused = fuse_lines(work[a].points(), work[b].points(), cfg);
      const double conf = std::max(work[a].confidence(), work[b].confidence());
      work[a] = MapElement(work[a].id(), GeomKind::Line, work[a].semantic(), std::move(fused), work[a].attrs(), conf,
                           work[a].source());
      absorb(a, b);
      dirty.push_back(a);
      if (a != d) break;  // d was absorbed
      k = static_cast<std::size_t>(-1);  // rescan with the grown geometry
    }
  }

  // Discrete and area elements: transitive closure per semantic.
  std::map<std::pair<GeomKind, std::string>, std::vector<std::size_t>> by_semantic;
  for (std::size_t i = 0; i < work.size(); ++i)
    if (work[i].kind() != GeomKind::Line) by_semantic[{work[i].kind(), work[i].semantic().name()}].push_back(i);
  for (const auto& [key, members] : by_semantic) {
    const bool discrete = key.first == GeomKind::Discrete;
    auto groups = merge_detail::closure_groups(members.size(), [&](std::size_t i, std::size_t j) {
      const auto& p = work[members[i]].points();
      const auto& q = work[members[j]].points();
      return discrete ? chamfer_distance(p, q) < cfg.delta_discrete : associate_areas(p, q, cfg);
    });
    for (const auto& group : groups) {
      if (group.size() < 2) continue;
      const std::size_t first = members[group.front()];
      if (discrete) {
        std::vector<const MapElement*> elems;
        for (auto g : group) elems.push_back(&work[members[g]]);
        const MapElement survivor = merge_discrete(elems);
        for (std::size_t g = 1; g < group.size(); ++g) absorb(first, members[group[g]]);
        book.absorb(survivor.id(), work[first].id());
        work[first] = survivor;
      } else {
        std::vector<const Polyline*> rings;
        double conf = 0.0;
        for (auto g : group) {
          rings.push_back(&work[members[g]].points());
          conf = std::max(conf, work[members[g]].confidence());
        }
        Polyline merged = merge_area(rings);
        for (std::size_t g = 1; g < group.size(); ++g) absorb(first, members[group[g]]);
        const auto& f = work[first];
        work[first] = MapElement(f.id(), f.kind(), f.semantic(), std::move(merged), f.attrs(), conf, f.source());
      }
    }
  }

  std::vector<MapElement> out;
  for (std::size_t i = 0; i < work.size(); ++i)
    if (alive[i]) out.push_back(std::move(work[i]));
  return VectorizedMap(acc.frame(), std::move(out));
}

/// Replaces every element's attributes with its majority vote.
inline VectorizedMap apply_votes(const VectorizedMap& map, const VoteBook& book) {
  std::vector<MapElement> out;
  out.reserve(map.size());
  for (const auto& e : map.elements()) {
    const VoteRecord* rec = book.find(e.id());
    out.push_back(rec != nullptr ? e.with_attrs(vote_attributes(*rec)) : e);
  }
  return VectorizedMap(map.frame(), std::move(out));
}

/// Left fold of merge_maps over the global-frame unit maps, followed by the
/// attribute vote.
inline VectorizedMap merge_all(std::span<const VectorizedMap> units, const MergeConfig& cfg) {
  if (units.empty()) return VectorizedMap(Frame::global(), {});
  VoteBook book;
  VectorizedMap acc(units.front().frame(), {});
  for (const auto& u : units) acc = merge_maps(acc, u, cfg, &book);
  return apply_votes(acc, book);
}

}  // namespace vma

#endif  // VMA_MERGE_HPP_
