#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace vma;
using th::line;

namespace {

RasterConfig raster(std::vector<double> taus) {
  RasterConfig cfg;
  cfg.thresholds = std::move(taus);
  return cfg;
}

AplsConfig exhaustive(double snap = 4.0) {
  AplsConfig cfg;
  cfg.num_pairs = std::numeric_limits<std::size_t>::max();
  cfg.snap_radius = snap;
  return cfg;
}

}  // namespace

// ---- rasterization and distance transform -----------------------------------------

TEST(Raster, DistanceTransformMatchesBruteForce) {
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<std::int64_t> coord(-150, 150);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Pixel> q, t;
    for (int i = 0; i < 200; ++i) q.push_back({coord(rng), coord(rng)});
    for (int i = 0; i < 1 + trial * 5; ++i) t.push_back({coord(rng), coord(rng)});
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    const auto got = nearest_sq_distances(q, t, 1000);
    EXPECT_EQ(got, oracle::nearest_sq(q, t));
  }
}

TEST(Raster, ReachCutsOffAsInfinity) {
  const std::vector<Pixel> q{{0, 0}, {100, 0}}, t{{3, 4}};
  const auto got = nearest_sq_distances(q, t, 10);
  EXPECT_EQ(got[0], 25.0);
  EXPECT_TRUE(std::isinf(got[1]));
}

TEST(Raster, DensifiedPixelsAreConnected) {
  const auto m = th::global({line("a", {{0, 0}, {3, 1.7}, {-2, 4}})});
  const auto px = rasterize(th::ptrs(m), 0.1);
  for (std::size_t i = 0; i < px.size(); ++i) {
    bool has_neighbour = px.size() == 1;
    for (std::size_t j = 0; j < px.size() && !has_neighbour; ++j)
      has_neighbour = j != i && std::abs(px[i].x - px[j].x) <= 1 && std::abs(px[i].y - px[j].y) <= 1;
    EXPECT_TRUE(has_neighbour);
  }
}

// ---- pixel PRF ---------------------------------------------------------------------

TEST(PixelPrf, IdenticalMapsScoreOne) {
  const auto m = th::global({line("a", {{0, 0}, {10, 3}}), th::box("b", 4, 4, 2, 1)});
  const auto r = pixel_prf(m, m, RasterConfig{});
  ASSERT_EQ(r.values.size(), 3u);
  for (const auto& v : r.values) {
    EXPECT_EQ(v.precision, 1.0);
    EXPECT_EQ(v.recall, 1.0);
    EXPECT_EQ(v.f1, 1.0);
  }
}

TEST(PixelPrf, ParallelOffsetHalfMetre) {
  const auto gt = th::global({line("g", {{0, 0}, {10, 0}})});
  const auto pred = th::global({line("p", {{0, 0.5}, {10, 0.5}})});
  const auto r = pixel_prf(pred, gt, raster({0.30, 0.75}));
  EXPECT_EQ(r.values[0].precision, 0.0);
  EXPECT_EQ(r.values[0].recall, 0.0);
  EXPECT_EQ(r.values[0].f1, 0.0);
  EXPECT_EQ(r.values[1].precision, 1.0);
  EXPECT_EQ(r.values[1].recall, 1.0);
}

TEST(PixelPrf, HalfCoverageMatchesPixelCount) {
  const auto gt = th::global({line("g", {{0, 0}, {10, 0}})});
  const auto pred = th::global({line("p", {{0, 0}, {5, 0}})});
  const auto r = pixel_prf(pred, gt, raster({0.30}));
  const auto o = oracle::prf(rasterize(th::ptrs(pred), 0.1), rasterize(th::ptrs(gt), 0.1), 0.30, 0.1);
  EXPECT_EQ(r.values[0].precision, 1.0);
  EXPECT_NEAR(r.values[0].recall, o.recall, 1e-12);
  EXPECT_NEAR(r.values[0].f1, o.f1, 1e-12);
  // 51 covered pixels plus two within tau beyond the end, out of 101.
  EXPECT_NEAR(r.values[0].recall, 53.0 / 101.0, 1e-12);
  EXPECT_NEAR(r.values[0].f1, 2.0 / 3.0, 0.03);
}

TEST(PixelPrf, MatchesOracleOnRandomMaps) {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> noise(0, 0.3);
  const std::vector<double> taus{0.3, 0.75, 1.5};
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = th::random_walk(rng, 8, 3.0);
    Polyline p = g;
    for (auto& q : p) q = q + Point2D{noise(rng), noise(rng)};
    const auto gm = th::global({line("g", g)}), pm = th::global({line("p", p)});
    const auto r = pixel_prf(pm, gm, raster(taus));
    const auto pp = rasterize(th::ptrs(pm), 0.1), pg = rasterize(th::ptrs(gm), 0.1);
    for (std::size_t t = 0; t < taus.size(); ++t) {
      const auto o = oracle::prf(pp, pg, taus[t], 0.1);
      EXPECT_NEAR(r.values[t].precision, o.precision, 1e-9);
      EXPECT_NEAR(r.values[t].recall, o.recall, 1e-9);
      EXPECT_NEAR(r.values[t].f1, o.f1, 1e-9);
      if (t > 0) {
        EXPECT_GE(r.values[t].f1, r.values[t - 1].f1);
      }
    }
    const auto swapped = pixel_prf(gm, pm, raster(taus));
    for (std::size_t t = 0; t < taus.size(); ++t) EXPECT_EQ(swapped.values[t].precision, r.values[t].recall);
  }
}

TEST(PixelPrf, EmptyConventions) {
  const auto gt = th::global({line("g", {{0, 0}, {10, 0}})});
  const auto empty = th::global({});
  const auto r = pixel_prf(empty, gt, RasterConfig{});
  EXPECT_EQ(r.values[0].precision, 0.0);
  EXPECT_EQ(r.values[0].recall, 0.0);
  EXPECT_EQ(r.flags, std::vector<std::string>{"empty_prediction"});
  const auto both = pixel_prf(empty, empty, RasterConfig{});
  EXPECT_EQ(both.values[0].f1, 1.0);
  EXPECT_EQ(both.flags, std::vector<std::string>{"both_empty"});
}

TEST(PixelPrf, PixelFramesUsePixelThresholds) {
  const Frame f("img", FrameUnit::Pixel, RigidTransform{0, 0, 0});
  const VectorizedMap gt(f, {line("g", {{0, 0}, {100, 0}})}), pred(f, {line("p", {{0, 3}, {100, 3}})});
  const auto r = pixel_prf(pred, gt, RasterConfig{});
  ASSERT_EQ(r.values.size(), 3u);
  EXPECT_EQ(r.values[0].tau, 2.0);
  EXPECT_EQ(r.values[0].f1, 0.0);
  EXPECT_EQ(r.values[1].f1, 1.0);
}

// ---- naive connectivity -------------------------------------------------------------

TEST(NaiveConnectivity, Examples) {
  const auto g1 = line("g1", {{0, 0}, {100, 0}}), g2 = line("g2", {{0, 20}, {100, 20}});
  const auto one = line("p", {{0, 0.1}, {100, 0.1}});
  EXPECT_EQ(naive_connectivity({&one}, {&g1}, 0.05), 1.0);
  const auto h1 = line("h1", {{0, 0}, {50, 0}}), h2 = line("h2", {{50, 0}, {100, 0}});
  const auto m2 = line("m2", {{0, 20.2}, {100, 20.2}});
  EXPECT_DOUBLE_EQ(naive_connectivity({&h1, &h2, &m2}, {&g1, &g2}, 0.05), 0.75);
  EXPECT_DOUBLE_EQ(naive_connectivity({&one}, {&g1, &g2}, 0.05), 0.5);
  EXPECT_THROW(naive_connectivity({&one}, {}, 0.05), Error);
}

TEST(NaiveConnectivity, MatchesOracle) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Polyline> gt, pred;
    for (int i = 0; i < 3; ++i) gt.push_back(th::straight(0, 40, 8.0 * i, 2));
    for (int j = 0; j < 4; ++j) {
      const double y = 8.0 * std::floor(u(rng) * 3) + u(rng) * 3 - 1.5;
      const double x0 = u(rng) * 20;
      pred.push_back({{x0, y}, {x0 + 5 + u(rng) * 15, y + u(rng)}});
    }
    std::vector<MapElement> ge, pe;
    for (std::size_t i = 0; i < gt.size(); ++i) ge.push_back(line("g" + std::to_string(i), gt[i]));
    for (std::size_t j = 0; j < pred.size(); ++j) pe.push_back(line("p" + std::to_string(j), pred[j]));
    const auto gm = th::global(ge), pm = th::global(pe);
    EXPECT_NEAR(naive_connectivity(th::ptrs(pm), th::ptrs(gm), 0.05), oracle::naive_connectivity(pred, gt, 0.05), 1e-9);
  }
}

// ---- ECM ---------------------------------------------------------------------------------

TEST(Ecm, Examples) {
  const auto g = line("g", {{0, 0}, {100, 0}});
  EXPECT_NEAR(ecm({&g}, {&g}, 0.1), 1.0, 1e-12);
  const auto h1 = line("h1", {{0, 0}, {50, 0}}), h2 = line("h2", {{50, 0}, {100, 0}});
  EXPECT_NEAR(ecm({&h1, &h2}, {&g}, 0.1), 0.5, 1e-12);
  EXPECT_NEAR(ecm({&h1}, {&g}, 0.1), 0.5, 1e-12);
  EXPECT_EQ(ecm({}, {&g}, 0.1), 0.0);
  EXPECT_THROW(ecm({&g}, {}, 0.1), Error);
}

TEST(Ecm, MatchesOracle) {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Polyline> gt{{{0, 0}, {30, 0}, {60, 4}}, {{0, 12}, {60, 12}}};
    std::vector<Polyline> pred;
    for (int j = 0; j < 4; ++j) {
      const auto& base = gt[static_cast<std::size_t>(j % 2)];
      const auto cum = cumulative_lengths(base);
      const double a = u(rng) * 0.6 * cum.back(), b = a + (0.1 + u(rng) * 0.3) * cum.back();
      Polyline frag;
      for (int k = 0; k <= 10; ++k) frag.push_back(point_at_arc(base, cum, a + (b - a) * k / 10) + Point2D{0, 0.2 * u(rng)});
      pred.push_back(frag);
    }
    std::vector<MapElement> ge, pe;
    for (std::size_t i = 0; i < gt.size(); ++i) ge.push_back(line("g" + std::to_string(i), gt[i]));
    for (std::size_t j = 0; j < pred.size(); ++j) pe.push_back(line("p" + std::to_string(j), pred[j]));
    const auto gm = th::global(ge), pm = th::global(pe);
    EXPECT_NEAR(ecm(th::ptrs(pm), th::ptrs(gm), 0.1), oracle::ecm(pred, gt, 0.1), 1e-9);
  }
}

// ---- APLS --------------------------------------------------------------------------------

TEST(Apls, Examples) {
  const auto g = line("g", th::straight(0, 100, 0, 10));
  EXPECT_NEAR(apls({&g}, {&g}, exhaustive()), 1.0, 1e-12);
  EXPECT_EQ(apls({}, {&g}, exhaustive()), 0.0);
  // Nodes 0..20 and 80..100 snap; 30..70 are more than 4 m from either half.
  const auto a = line("a", {{0, 0}, {25, 0}}), b = line("b", {{75, 0}, {100, 0}});
  EXPECT_NEAR(apls({&a, &b}, {&g}, exhaustive()), 6.0 / 55.0, 1e-12);
  EXPECT_THROW(apls({&g}, {}, exhaustive()), Error);
}

TEST(Apls, MatchesOracle) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Polyline> gt{th::straight(0, 60, 0, 6), {{60, 0}, {70, 8}, {80, 20}}, {{20, 0.0}, {20, 30}}};
    // Break the third gt line at its junction node so the graph stays a tree of polylines.
    gt[2].front() = {20, 0.5};
    std::vector<Polyline> pred;
    for (const auto& g : gt) {
      const auto cum = cumulative_lengths(g);
      const double a = u(rng) < 0.5 ? 0.0 : u(rng) * 0.4 * cum.back();
      const double b = u(rng) < 0.5 ? cum.back() : cum.back() * (0.6 + 0.4 * u(rng));
      Polyline frag;
      for (int k = 0; k <= 6; ++k) frag.push_back(point_at_arc(g, cum, a + (b - a) * k / 6) + Point2D{0.3 * u(rng), 0.3 * u(rng)});
      pred.push_back(frag);
    }
    std::vector<MapElement> ge, pe;
    for (std::size_t i = 0; i < gt.size(); ++i) ge.push_back(line("g" + std::to_string(i), gt[i]));
    for (std::size_t j = 0; j < pred.size(); ++j) pe.push_back(line("p" + std::to_string(j), pred[j]));
    const auto gm = th::global(ge), pm = th::global(pe);
    EXPECT_NEAR(apls(th::ptrs(pm), th::ptrs(gm), exhaustive()), oracle::apls(pred, gt, 4.0, 1.0), 1e-9);
  }
}

TEST(Apls, SampledIsDeterministicPerSeed) {
  const auto g = line("g", th::straight(0, 100, 0, 1));
  const auto a = line("a", {{0, 0}, {40, 0}}), b = line("b", {{60, 0}, {100, 0}});
  AplsConfig cfg;
  cfg.num_pairs = 500;
  const double x = apls({&a, &b}, {&g}, cfg), y = apls({&a, &b}, {&g}, cfg);
  EXPECT_EQ(x, y);
  EXPECT_GE(x, 0.0);
  EXPECT_LE(x, 1.0);
}

// ---- attribute accuracy and the full report ------------------------------------------

TEST(AttributeAccuracy, OneFlippedOfTen) {
  std::vector<MapElement> gt, pred;
  for (int i = 0; i < 10; ++i) {
    const auto pts = th::straight(0, 30, 4.0 * i, 1);
    gt.push_back(line("g" + std::to_string(i), pts, "lane_divider", {{"lane_type", "solid"}}));
    pred.push_back(line("p" + std::to_string(i), pts, "lane_divider", {{"lane_type", i == 3 ? "dotted" : "solid"}}));
  }
  const auto gm = th::global(gt), pm = th::global(pred);
  const auto acc = attribute_accuracy(pm, gm, hierarchical_assign(pm, gm));
  ASSERT_EQ(acc.size(), 1u);
  EXPECT_DOUBLE_EQ(acc.at("lane_type"), 0.9);
  const auto bare = th::global({line("x", th::straight(0, 30, 0, 1), "stop_line")});
  EXPECT_TRUE(attribute_accuracy(bare, bare, hierarchical_assign(bare, bare)).empty());
}

TEST(Evaluate, SelfComparisonIsPerfect) {
  SceneSpec spec;
  spec.profile = CurvatureProfile::SCurve;
  spec.road_length = 120;
  spec.furniture = full_furniture();
  const auto scene = generate_scene(spec);
  const auto r = evaluate(scene.map, scene.map);
  for (const auto& [key, v] : r.aggregate) EXPECT_NEAR(v, 1.0, 1e-12) << key;
  EXPECT_EQ(r.matched, scene.map.size());
  EXPECT_EQ(r.mean_p2p, 0.0);
  EXPECT_EQ(r.mean_p2l, 0.0);
  const auto j = report_to_json(r);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_FALSE(report_table(r).empty());
}

TEST(Evaluate, JaggedAreaKeepsItsVerticesWhenResamplingWouldCross) {
  // A comb whose 50-point resampling cuts across the gaps between teeth.
  Polyline comb{{0, 0}};
  double x = 0;
  for (int t = 0; t < 20; ++t) {
    comb.insert(comb.end(), {{x, 10}, {x + 0.3, 10}, {x + 0.3, 0.5}});
    x += 0.5;
    comb.push_back({x, 0.5});
  }
  comb.back() = {x - 0.2, -1};
  comb.push_back({0, -1});
  ASSERT_TRUE(is_simple_polygon(comb));
  ASSERT_FALSE(is_simple_polygon(resample_ring(comb, 50)));
  const auto m = th::global({th::area("c", comb)});
  EXPECT_EQ(uniform_representation(m, 50).elements()[0].points(), comb);
  const auto r = evaluate(m, m);
  EXPECT_EQ(r.matched, 1u);
  EXPECT_EQ(r.mean_p2p, 0.0);
}

TEST(Evaluate, InvariantUnderGridAlignedRigidMotion) {
  std::mt19937_64 rng(67);
  std::normal_distribution<double> noise(0, 0.2);
  const auto g = th::random_walk(rng, 10, 4.0);
  Polyline p = g;
  for (auto& q : p) q = q + Point2D{noise(rng), noise(rng)};
  const auto gm = th::global({line("g", g)}), pm = th::global({line("p", p)});
  // Quarter turn plus a whole-pixel shift maps the pixel grid onto itself.
  const RigidTransform tf{std::numbers::pi / 2, 12.3, -4.5};
  auto move = [&tf](const VectorizedMap& m) {
    std::vector<MapElement> out;
    for (const auto& e : m.elements()) out.push_back(e.with_points(tf.apply(e.points())));
    return th::global(out);
  };
  EvalConfig cfg;
  cfg.apls = exhaustive();
  const auto a = evaluate(pm, gm, cfg), b = evaluate(move(pm), move(gm), cfg);
  for (const auto& [key, v] : a.aggregate) EXPECT_NEAR(b.aggregate.at(key), v, 1e-9) << key;
}
