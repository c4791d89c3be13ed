#ifndef VMA_ANNOTATOR_HPP_
#define VMA_ANNOTATOR_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <unistd.h>

#include "vma/assignment.hpp"
#include "vma/log.hpp"
#include "vma/map_json.hpp"
#include "vma/scene_split.hpp"

namespace vma {

// ---- Supervision geometry --------------------------------------------------

/// How a predicted sequence lines up with its ground truth.
struct Alignment {
  bool reversed = false;
  std::size_t shift = 0;   // cyclic shift (areas) or corner rotation (discrete)
  bool resampled = false;  // ground truth was resampled to the predicted count

  std::string describe(GeomKind kind) const {
    if (kind == GeomKind::Line) return reversed ? "reversed" : "forward";
    if (shift == 0 && !reversed) return "forward";
    std::string s = "cyclic-shift " + std::to_string(shift);
    return reversed ? s + " reversed" : s;
  }
};

/// Point-by-point pairing: pred[i] is paired with gt[i]. `gt` is the aligned
/// ground-truth sequence, so its neighbours are the adjacent edges of gt[i].
struct PointPairing {
  GeomKind kind = GeomKind::Line;
  Polyline pred;
  Polyline gt;
  std::vector<std::size_t> gt_index;  // index into the (possibly resampled) gt sequence
};

struct AssignedPair {
  std::string pred_id;
  std::string gt_id;
  double cost = 0.0;
  Alignment alignment;
  PointPairing pairing;
};

struct AssignmentResult {
  std::vector<AssignedPair> pairs;
  std::vector<std::string> unmatched_pred;
  std::vector<std::string> unmatched_gt;
};

namespace assign_detail {

struct Candidate {
  double cost = std::numeric_limits<double>::infinity();
  Alignment alignment;
  PointPairing pairing;
};

inline Candidate align(const MapElement& pred, const MapElement& gt) {
  const auto& p = pred.points();
  const std::size_t n = p.size();
  std::vector<std::pair<Polyline, bool>> sequences;  // (gt sequence, resampled?)
  if (gt.points().size() == n) sequences.emplace_back(gt.points(), false);
  if (pred.kind() == GeomKind::Line) sequences.emplace_back(resample_uniform(gt.points(), n), true);
  else if (pred.kind() == GeomKind::Area) sequences.emplace_back(resample_ring(gt.points(), n), true);

  Candidate best;
  auto consider = [&](const Polyline& seq, bool resampled, bool reversed, std::size_t shift, bool cyclic) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j;
      if (!cyclic) j = reversed ? n - 1 - i : i;
      else j = reversed ? (shift + n - (i % n)) % n : (shift + i) % n;
      sum += distance(p[i], seq[j]);
    }
    const double cost = sum / static_cast<double>(n);
    if (cost < best.cost) {
      best.cost = cost;
      best.alignment = {reversed, shift, resampled};
      best.pairing.kind = pred.kind();
      best.pairing.pred = p;
      best.pairing.gt.assign(n, Point2D{});
      best.pairing.gt_index.assign(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t j;
        if (!cyclic) j = reversed ? n - 1 - i : i;
        else j = reversed ? (shift + n - (i % n)) % n : (shift + i) % n;
        best.pairing.gt[i] = seq[j];
        best.pairing.gt_index[i] = j;
      }
    }
  };
  for (const auto& [seq, resampled] : sequences) {
    switch (pred.kind()) {
      case GeomKind::Line:
        consider(seq, resampled, false, 0, false);
        consider(seq, resampled, true, 0, false);
        break;
      case GeomKind::Area:
        for (std::size_t k = 0; k < n; ++k) {
          consider(seq, resampled, false, k, true);
          consider(seq, resampled, true, k, true);
        }
        break;
      case GeomKind::Discrete:
        for (std::size_t k = 0; k < 4; ++k) consider(seq, resampled, false, k, true);
        break;
    }
  }
  return best;
}

}  // namespace assign_detail

/// One-to-one matching between predicted and ground-truth elements of the
/// same (kind, semantic). Pair cost is the mean point-to-point distance
/// under the best alignment mode; the element-level matching minimises the
/// total cost. Pairs costing more than `max_cost` are reported unmatched.
inline AssignmentResult hierarchical_assign(const VectorizedMap& pred, const VectorizedMap& gt,
                                            double max_cost = std::numeric_limits<double>::infinity()) {
  if (pred.frame().name() != gt.frame().name())
    throw Error(ErrorCode::FrameMismatch,
                "cannot assign across frames '" + pred.frame().name() + "' and '" + gt.frame().name() + "'");
  using Key = std::pair<GeomKind, std::string>;
  std::map<Key, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto& e = pred.elements()[i];
    groups[{e.kind(), e.semantic().name()}].first.push_back(i);
  }
  for (std::size_t j = 0; j < gt.size(); ++j) {
    const auto& e = gt.elements()[j];
    groups[{e.kind(), e.semantic().name()}].second.push_back(j);
  }

  AssignmentResult result;
  std::vector<bool> pred_matched(pred.size(), false), gt_matched(gt.size(), false);
  for (const auto& [key, members] : groups) {
    const auto& [pi, gi] = members;
    if (pi.empty() || gi.empty()) continue;
    std::vector<std::vector<assign_detail::Candidate>> cand(pi.size(), std::vector<assign_detail::Candidate>(gi.size()));
    std::vector<std::vector<double>> cost(pi.size(), std::vector<double>(gi.size()));
    for (std::size_t a = 0; a < pi.size(); ++a)
      for (std::size_t b = 0; b < gi.size(); ++b) {
        cand[a][b] = assign_detail::align(pred.elements()[pi[a]], gt.elements()[gi[b]]);
        cost[a][b] = cand[a][b].cost;
      }
    const auto match = solve_assignment(cost);
    for (std::size_t a = 0; a < pi.size(); ++a) {
      if (match[a] < 0) continue;
      auto& c = cand[a][static_cast<std::size_t>(match[a])];
      if (c.cost > max_cost) continue;
      const std::size_t g = gi[static_cast<std::size_t>(match[a])];
      pred_matched[pi[a]] = gt_matched[g] = true;
      result.pairs.push_back(
          {pred.elements()[pi[a]].id(), gt.elements()[g].id(), c.cost, c.alignment, std::move(c.pairing)});
    }
  }
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (!pred_matched[i]) result.unmatched_pred.push_back(pred.elements()[i].id());
  for (std::size_t j = 0; j < gt.size(); ++j)
    if (!gt_matched[j]) result.unmatched_gt.push_back(gt.elements()[j].id());
  return result;
}

/// Mean L2 distance over key points: line endpoints and discrete corners.
inline double p2p_loss(const PointPairing& pairing) {
  const auto& p = pairing.pred;
  const auto& q = pairing.gt;
  if (p.size() != q.size()) throw Error(ErrorCode::InvalidArgument, "pairing sequences differ in length");
  if (p.empty()) return 0.0;
  switch (pairing.kind) {
    case GeomKind::Line:
      return 0.5 * (distance(p.front(), q.front()) + distance(p.back(), q.back()));
    case GeomKind::Discrete: {
      double sum = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) sum += distance(p[i], q[i]);
      return sum / static_cast<double>(p.size());
    }
    case GeomKind::Area: return 0.0;
  }
  return 0.0;
}

/// Point-to-line term for one predicted point P paired with Q: the sum of
/// the distances from P to the lines through Q's adjacent edges. With a
/// single usable edge that distance counts twice.
inline double p2l_point(Point2D p, Point2D q, std::optional<Point2D> prev, std::optional<Point2D> next) {
  if (prev && *prev == q) prev.reset();
  if (next && *next == q) next.reset();
  if (prev && next) return point_line_distance(p, *prev, q) + point_line_distance(p, q, *next);
  if (prev) return 2.0 * point_line_distance(p, *prev, q);
  if (next) return 2.0 * point_line_distance(p, q, *next);
  return 2.0 * distance(p, q);
}

/// Mean point-to-line distance over non-key points (line interiors and all
/// area vertices).
inline double p2l_loss(const PointPairing& pairing) {
  const auto& p = pairing.pred;
  const auto& q = pairing.gt;
  if (p.size() != q.size()) throw Error(ErrorCode::InvalidArgument, "pairing sequences differ in length");
  const std::size_t n = p.size();
  double sum = 0.0;
  std::size_t count = 0;
  switch (pairing.kind) {
    case GeomKind::Line:
      for (std::size_t i = 1; i + 1 < n; ++i, ++count) sum += p2l_point(p[i], q[i], q[i - 1], q[i + 1]);
      break;
    case GeomKind::Area:
      for (std::size_t i = 0; i < n; ++i, ++count) sum += p2l_point(p[i], q[i], q[(i + n - 1) % n], q[(i + 1) % n]);
      break;
    case GeomKind::Discrete: break;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

// ---- Annotators ------------------------------------------------------------

enum class ConfidenceModel { Constant, NoiseCoupled };

/// Noise model of the oracle annotator.
struct AnnotatorConfig {
  double jitter_sigma = 0.0;
  double drop_prob = 0.0;
  double spurious_rate = 0.0;
  ConfidenceModel confidence_model = ConfidenceModel::NoiseCoupled;
  double constant_confidence = 1.0;
  double attr_flip_prob = 0.0;
  std::uint64_t rng_seed = 0;
  std::size_t num_points = 50;

  void validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!(jitter_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "jitter_sigma must be >= 0");
    if (!prob(drop_prob) || !prob(attr_flip_prob)) throw Error(ErrorCode::InvalidArgument, "probabilities must be in [0,1]");
    if (!(spurious_rate >= 0.0)) throw Error(ErrorCode::InvalidArgument, "spurious_rate must be >= 0");
    if (!prob(constant_confidence)) throw Error(ErrorCode::InvalidArgument, "constant confidence must be in [0,1]");
    if (num_points < 4) throw Error(ErrorCode::InvalidArgument, "num_points must be >= 4");
  }
};

/// Turns one annotation unit into a local vectorized map.
class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual VectorizedMap annotate(const AnnotationUnit& unit) const = 0;
  virtual std::vector<VectorizedMap> annotate_all(std::span<const AnnotationUnit> units) const {
    std::vector<VectorizedMap> out;
    out.reserve(units.size());
    for (const auto& u : units) out.push_back(annotate(u));
    return out;
  }
};

namespace oracle_detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Repeatedly reverses the chain between two crossing edges until the ring
/// is simple; each reversal shortens the perimeter.
inline bool uncross_ring(Polyline& ring) {
  const std::size_t n = ring.size();
  for (std::size_t iter = 0; iter < 10 * n * n; ++iter) {
    bool crossed = false;
    for (std::size_t i = 0; i < n && !crossed; ++i) {
      for (std::size_t j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;
        if (segments_intersect(ring[i], ring[i + 1], ring[j], ring[(j + 1) % n])) {
          std::reverse(ring.begin() + static_cast<std::ptrdiff_t>(i + 1), ring.begin() + static_cast<std::ptrdiff_t>(j + 1));
          crossed = true;
          break;
        }
      }
    }
    if (!crossed) return is_simple_polygon(ring);
  }
  return is_simple_polygon(ring);
}

}  // namespace oracle_detail

/// Seed of the unit-level random stream; depends only on the run seed and
/// the unit id, so processing order never changes the output.
inline std::uint64_t unit_seed(std::uint64_t rng_seed, std::string_view unit_id) {
  return oracle_detail::splitmix64(rng_seed ^ oracle_detail::fnv1a(unit_id));
}

/// Ground truth degraded by a configurable noise model.
class OracleAnnotator : public Annotator {
 public:
  explicit OracleAnnotator(AnnotatorConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const AnnotatorConfig& config() const { return cfg_; }

  /// Units are independent (each has its own RNG stream), so they are
  /// annotated concurrently; output order follows input order.
  std::vector<VectorizedMap> annotate_all(std::span<const AnnotationUnit> units) const override {
    std::vector<std::optional<VectorizedMap>> slots(units.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < units.size();) {
        try {
          slots[i] = annotate(units[i]);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    const std::size_t n_threads =
        std::min<std::size_t>(units.size(), std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    std::vector<VectorizedMap> out;
    out.reserve(units.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
  }

  VectorizedMap annotate(const AnnotationUnit& unit) const override {
    std::mt19937_64 rng(unit_seed(cfg_.rng_seed, unit.id));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, cfg_.jitter_sigma > 0.0 ? cfg_.jitter_sigma : 1.0);
    std::vector<MapElement> out;
    std::size_t next_id = 0;
    auto fresh_id = [&] { return unit.id + "/" + std::to_string(next_id++); };

    for (const auto& e : unit.elements()) {
      if (uniform(rng) < cfg_.drop_prob) continue;
      Polyline pts;
      switch (e.kind()) {
        case GeomKind::Line: pts = resample_uniform(e.points(), cfg_.num_points); break;
        case GeomKind::Area: pts = resample_ring(e.points(), cfg_.num_points); break;
        case GeomKind::Discrete: pts = e.points(); break;
      }
      double mean_jitter = 0.0;
      if (cfg_.jitter_sigma > 0.0) {
        for (auto& p : pts) {
          const Point2D n{gauss(rng), gauss(rng)};
          mean_jitter += norm(n);
          p = p + n;
        }
        mean_jitter /= static_cast<double>(pts.size());
      }
      AttributeSet attrs = e.attrs();
      if (cfg_.attr_flip_prob > 0.0) flip_attributes(e.semantic(), attrs, rng);
      double conf = cfg_.constant_confidence;
      if (cfg_.confidence_model == ConfidenceModel::NoiseCoupled)
        conf = cfg_.jitter_sigma > 0.0 ? std::clamp(std::exp(-mean_jitter / cfg_.jitter_sigma), 0.0, 1.0) : 1.0;
      if (!repair(e.kind(), pts)) {
        log::debug("unit ", unit.id, ": jittered ", e.id(), " could not be repaired; omitted");
        continue;
      }
      try {
        out.emplace_back(fresh_id(), e.kind(), e.semantic(), std::move(pts), std::move(attrs), conf);
      } catch (const Error& ex) {
        log::debug("unit ", unit.id, ": omitting ", e.id(), " (", ex.what(), ")");
        --next_id;
      }
    }

    if (cfg_.spurious_rate > 0.0) {
      std::poisson_distribution<int> count_dist(cfg_.spurious_rate);
      const int count = count_dist(rng);
      const double h = unit.extent / 2.0;
      for (int k = 0; k < count; ++k) {
        const Point2D at{(2.0 * uniform(rng) - 1.0) * h, (2.0 * uniform(rng) - 1.0) * h};
        const double heading = (2.0 * uniform(rng) - 1.0) * std::numbers::pi;
        const Point2D f{std::cos(heading), std::sin(heading)}, l{-f.y, f.x};
        const double conf = cfg_.confidence_model == ConfidenceModel::Constant ? cfg_.constant_confidence
                                                                               : 0.5 * uniform(rng);
        if (uniform(rng) < 0.5) {
          const double len = 5.0 + 10.0 * uniform(rng);
          Polyline seg{at, at + f * len};
          out.emplace_back(fresh_id(), GeomKind::Line, Semantic(SemanticType::LaneDivider),
                           resample_uniform(seg, cfg_.num_points), AttributeSet{}, conf);
        } else {
          Polyline box{at + f * 1.5 + l * 0.5, at + f * 1.5 - l * 0.5, at - f * 1.5 - l * 0.5, at - f * 1.5 + l * 0.5};
          out.emplace_back(fresh_id(), GeomKind::Discrete, Semantic(SemanticType::Arrow), std::move(box), AttributeSet{},
                           conf);
        }
      }
    }
    return VectorizedMap(unit.frame(), std::move(out));
  }

 private:
  void flip_attributes(const Semantic& semantic, AttributeSet& attrs, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const auto& schema = AttributeSchema::for_semantic(semantic);
    for (auto& [name, tag] : attrs) {
      if (uniform(rng) >= cfg_.attr_flip_prob) continue;
      auto it = schema.find(name);
      if (it == schema.end() || it->second.size() < 2) continue;
      std::vector<std::string> others;
      for (const auto& t : it->second)
        if (t != tag) others.push_back(t);
      tag = others[static_cast<std::size_t>(uniform(rng) * static_cast<double>(others.size())) % others.size()];
    }
  }

  /// Restores the geometric invariants that jitter may break.
  static bool repair(GeomKind kind, Polyline& pts) {
    switch (kind) {
      case GeomKind::Line: {
        Polyline dedup;
        for (auto p : pts)
          if (dedup.empty() || !(dedup.back() == p)) dedup.push_back(p);
        pts = std::move(dedup);
        return pts.size() >= 2;
      }
      case GeomKind::Area:
        return is_simple_polygon(pts) || oracle_detail::uncross_ring(pts);
      case GeomKind::Discrete:
        if (!is_simple_polygon(pts) && !oracle_detail::uncross_ring(pts)) return false;
        if (signed_area(pts) > 0.0) pts = {pts[0], pts[3], pts[2], pts[1]};
        return true;
    }
    return false;
  }

  AnnotatorConfig cfg_;
};

inline VectorizedMap annotate(const AnnotationUnit& unit, const AnnotatorConfig& cfg) {
  return OracleAnnotator(cfg).annotate(unit);
}

/// External annotator run as a subprocess: one unit document per line on
/// stdin, one local map document per line on stdout.
class SubprocessAnnotator : public Annotator {
 public:
  explicit SubprocessAnnotator(std::string command, ParseMode mode = ParseMode::Lenient)
      : command_(std::move(command)), mode_(mode) {}

  VectorizedMap annotate(const AnnotationUnit& unit) const override {
    return annotate_all(std::span<const AnnotationUnit>(&unit, 1)).front();
  }

  std::vector<VectorizedMap> annotate_all(std::span<const AnnotationUnit> units) const override {
    static int counter = 0;
    const auto input = std::filesystem::temp_directory_path() /
                       ("vma-units-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + ".jsonl");
    {
      std::ofstream out(input, std::ios::binary);
      if (!out) throw Error(ErrorCode::Io, "cannot write subprocess input");
      for (const auto& u : units) out << unit_to_json(u).dump() << '\n';
    }
    const std::string cmd = command_ + " < '" + input.string() + "'";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
      std::filesystem::remove(input);
      throw Error(ErrorCode::Io, "cannot start annotator command '" + command_ + "'");
    }
    std::string buffer;
    char chunk[65536];
    std::size_t got;
    while ((got = std::fread(chunk, 1, sizeof chunk, pipe)) > 0) buffer.append(chunk, got);
    const int status = ::pclose(pipe);
    std::filesystem::remove(input);
    if (status != 0) throw Error(ErrorCode::Io, "annotator command exited with status " + std::to_string(status));

    std::vector<VectorizedMap> maps;
    std::size_t start = 0;
    while (start < buffer.size()) {
      std::size_t end = buffer.find('\n', start);
      if (end == std::string::npos) end = buffer.size();
      std::string_view line(buffer.data() + start, end - start);
      start = end + 1;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& ex) {
        throw Error(ErrorCode::Parse, std::string("annotator output: ") + ex.what());
      }
      maps.push_back(map_from_json(j, mode_, {"unit"}));
    }
    if (maps.size() != units.size())
      throw Error(ErrorCode::Io, "annotator returned " + std::to_string(maps.size()) + " maps for " +
                                     std::to_string(units.size()) + " units");
    for (std::size_t i = 0; i < units.size(); ++i)
      if (!(maps[i].frame() == units[i].frame()))
        throw Error(ErrorCode::FrameMismatch, "annotator output for " + units[i].id + " is not in the unit frame");
    return maps;
  }

 private:
  std::string command_;
  ParseMode mode_;
};

}  // namespace vma

#endif  // VMA_ANNOTATOR_HPP_
