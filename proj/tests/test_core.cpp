#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace vma;
using th::box;
using th::line;

// ---- geometry ----------------------------------------------------------------

TEST(Geometry, PolylineLength) {
  EXPECT_DOUBLE_EQ(polyline_length(Polyline{{0, 0}, {3, 4}}), 5.0);
  EXPECT_DOUBLE_EQ(polyline_length(Polyline{{0, 0}, {1, 0}, {1, 1}}), 2.0);
  EXPECT_DOUBLE_EQ(polyline_length(Polyline{{0, 0}, {0, 0.5}, {0, 1.25}}), 1.25);
  EXPECT_THROW(polyline_length(Polyline{{0, 0}}), Error);
}

TEST(Geometry, ResampleUniformExamples) {
  const auto a = resample_uniform(Polyline{{0, 0}, {10, 0}}, 3);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[1], (Point2D{5, 0}));
  const auto b = resample_uniform(Polyline{{0, 0}, {4, 0}, {4, 4}}, 5);
  const Polyline want{{0, 0}, {2, 0}, {4, 0}, {4, 2}, {4, 4}};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(b[i].x, want[i].x, 1e-12);
    EXPECT_NEAR(b[i].y, want[i].y, 1e-12);
  }
  const Polyline uniform{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  const auto c = resample_uniform(uniform, 4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(distance(c[i], uniform[i]), 0.0, 1e-9);
}

TEST(Geometry, ResampleUniformRandomPolylines) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pts = th::random_walk(rng, 3 + trial % 40);
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 60);
    const auto out = resample_uniform(pts, n);
    ASSERT_EQ(out.size(), n);
    EXPECT_EQ(out.front(), pts.front());
    EXPECT_EQ(out.back(), pts.back());
    // Every sample sits on the input at its nominal arc-length station.
    const auto cum = cumulative_lengths(pts);
    const double total = cum.back();
    for (std::size_t k = 0; k < n; ++k) {
      const auto proj = project_onto_polyline(out[k], pts, cum);
      EXPECT_LT(proj.distance, 1e-9);
      EXPECT_NEAR(proj.arc, total * static_cast<double>(k) / static_cast<double>(n - 1), 1e-9 * total);
    }
  }
}

TEST(Geometry, PointSegmentDistance) {
  EXPECT_DOUBLE_EQ(point_segment_distance({0, 1}, {-1, 0}, {1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(point_segment_distance({2, 1}, {-1, 0}, {1, 0}), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(point_segment_distance({0, 0}, {0, 0}, {0, 0}), 0.0);
}

TEST(Geometry, Chamfer) {
  const Polyline sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  EXPECT_DOUBLE_EQ(chamfer_distance(sq, sq), 0.0);
  EXPECT_DOUBLE_EQ(chamfer_distance(Polyline{{0, 0}}, Polyline{{3, 4}}), 5.0);
  EXPECT_DOUBLE_EQ(chamfer_distance(Polyline{{0, 0}, {2, 0}}, Polyline{{0, 1}, {2, 1}}), 1.0);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto a = th::random_walk(rng, 7), b = th::random_walk(rng, 11);
    EXPECT_DOUBLE_EQ(chamfer_distance(a, b), chamfer_distance(b, a));
    const RigidTransform shift{0.0, 12.5, -3.25};
    EXPECT_NEAR(chamfer_distance(shift.apply(a), shift.apply(b)), chamfer_distance(a, b), 1e-9);
  }
}

TEST(Geometry, SimplePolygonAndArea) {
  EXPECT_TRUE(is_simple_polygon(th::square(0, 0, 1)));
  EXPECT_FALSE(is_simple_polygon(Polyline{{0, 0}, {1, 1}, {1, 0}, {0, 1}}));
  EXPECT_DOUBLE_EQ(signed_area(th::square(0, 0, 2)), 4.0);
  const auto c = polygon_centroid(th::square(0, 0, 2));
  EXPECT_DOUBLE_EQ(c.x, 1.0);
  EXPECT_DOUBLE_EQ(c.y, 1.0);
}

TEST(Geometry, FrameRoundTrip) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-100, 100);
  const RigidTransform tf{0.7, 31.0, -4.0};
  for (int i = 0; i < 100; ++i) {
    const Point2D p{u(rng), u(rng)};
    const auto q = tf.apply_inverse(tf.apply(p));
    EXPECT_NEAR(q.x, p.x, 1e-9);
    EXPECT_NEAR(q.y, p.y, 1e-9);
  }
}

TEST(SegmentIndex, MatchesLinearScan) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-60, 60);
  std::vector<Polyline> lines;
  SegmentIndex index(3.0);
  for (int i = 0; i < 8; ++i) {
    auto walk = th::random_walk(rng, 30, 2.0);
    const RigidTransform place{u(rng), u(rng), u(rng)};
    lines.push_back(place.apply(walk));
    index.add(lines.back());
  }
  for (int i = 0; i < 300; ++i) {
    const Point2D p{u(rng) * 2, u(rng) * 2};
    double best = 1e300;
    for (const auto& l : lines) best = std::min(best, oracle::poly_dist(p, l));
    const auto hit = index.nearest(p);
    ASSERT_TRUE(hit);
    EXPECT_NEAR(hit->distance, best, 1e-9);
    const auto bounded = index.nearest(p, 1.0);
    EXPECT_EQ(bounded.has_value(), best <= 1.0);
  }
}

// ---- polygon operations ----------------------------------------------------------

TEST(PolygonOps, IouExamples) {
  const auto a = th::square(0, 0, 1);
  EXPECT_NEAR(polygon_iou(a, a), 1.0, 1e-12);
  EXPECT_NEAR(polygon_iou(a, th::square(0.5, 0, 1)), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(polygon_iou(a, th::square(5, 5, 1)), 0.0);
}

// Boost.Geometry snaps overlay input to an integer grid, so areas agree to ~1e-7.
TEST(PolygonOps, IouMatchesRectangleOracleUnderRigidMotion) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> pos(-3, 3), size(0.5, 4);
  for (int i = 0; i < 200; ++i) {
    const double r1[4] = {pos(rng), pos(rng), 0, 0};
    const double r2[4] = {pos(rng), pos(rng), 0, 0};
    double a[4] = {r1[0], r1[1], r1[0] + size(rng), r1[1] + size(rng)};
    double b[4] = {r2[0], r2[1], r2[0] + size(rng), r2[1] + size(rng)};
    auto rect = [](const double* r) { return Polyline{{r[0], r[1]}, {r[2], r[1]}, {r[2], r[3]}, {r[0], r[3]}}; };
    const double inter = oracle::rect_overlap(a, b);
    const double area_a = (a[2] - a[0]) * (a[3] - a[1]), area_b = (b[2] - b[0]) * (b[3] - b[1]);
    const double want = inter / (area_a + area_b - inter);
    EXPECT_NEAR(polygon_iou(rect(a), rect(b)), want, 1e-6);
    const RigidTransform tf{pos(rng), 100 * pos(rng), 100 * pos(rng)};
    EXPECT_NEAR(polygon_iou(tf.apply(rect(a)), tf.apply(rect(b))), want, 1e-6);
  }
}

TEST(PolygonOps, UnionOfShiftedSquares) {
  const auto u = polygon_union(th::square(0, 0, 1), th::square(0.5, 0, 1));
  ASSERT_EQ(u.outers.size(), 1u);
  EXPECT_NEAR(polygon_area(u.outers[0]), 1.5, 1e-12);
  EXPECT_EQ(u.holes_dropped, 0u);
}

TEST(PolygonOps, UnionOfNearlyNestedWedges) {
  // Two thin clipped areas sharing an apex and nearly collinear edges.
  const json j = read_json_file(std::filesystem::path(VMA_TEST_DATA_DIR) / "nested_wedges.json");
  auto ring = [](const json& pts) {
    Polyline r;
    for (const auto& p : pts) r.push_back({p[0].get<double>(), p[1].get<double>()});
    return r;
  };
  const Polyline a = ring(j["a"]), b = ring(j["b"]);
  const auto u = polygon_union(a, b);
  ASSERT_EQ(u.outers.size(), 1u);
  EXPECT_NEAR(polygon_area(u.outers[0]), polygon_area(b), 1e-6 * polygon_area(b));
  EXPECT_NEAR(polygon_containment(a, b), 1.0, 1e-6);
}

// ---- map types and JSON ---------------------------------------------------------------

TEST(MapElement, RejectsInvalidGeometry) {
  EXPECT_THROW(line("a", {{0, 0}}), Error);
  EXPECT_THROW(line("a", {{0, 0}, {0, 0}, {1, 0}}), Error);
  EXPECT_THROW(line("a", {{0, 0}, {1, 0}}, "curb", {}, 1.5), Error);
  EXPECT_THROW(th::area("c", {{0, 0}, {1, 1}, {1, 0}, {0, 1}}), Error);
  EXPECT_THROW(th::area("c", {{0, 0}, {1, 0}, {1, 1}, {0, 0}}), Error);
  // Self-intersecting and counter-clockwise quads.
  EXPECT_THROW(MapElement("d", GeomKind::Discrete, SemanticType::Arrow, {{0, 1}, {1, 0}, {1, 1}, {0, 0}}), Error);
  EXPECT_THROW(MapElement("d", GeomKind::Discrete, SemanticType::Arrow, {{0, 0}, {1, 0}, {1, 1}, {0, 1}}), Error);
  EXPECT_NO_THROW(box("d", 0, 0, 1, 3));
  // Semantic / kind and attribute schema.
  EXPECT_THROW(MapElement("x", GeomKind::Area, SemanticType::Curb, th::square(0, 0, 1)), Error);
  EXPECT_THROW(line("a", {{0, 0}, {1, 0}}, "curb", {{"curb_type", "banana"}}), Error);
  EXPECT_NO_THROW(line("a", {{0, 0}, {1, 0}}, "curb", {{"curb_type", "road_side"}}));
  EXPECT_NO_THROW(line("a", {{0, 0}, {1, 0}}, "bike_path", {{"anything", "goes"}}));
}

TEST(MapElement, RandomInvalidQuadsRejected) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  int rejected = 0, accepted = 0;
  for (int i = 0; i < 500; ++i) {
    Polyline q{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
    const bool valid = is_simple_polygon(q) && signed_area(q) < 0.0;
    try {
      MapElement("q", GeomKind::Discrete, SemanticType::Arrow, q);
      EXPECT_TRUE(valid);
      ++accepted;
    } catch (const Error& e) {
      EXPECT_FALSE(valid);
      EXPECT_EQ(e.code(), ErrorCode::InvalidGeometry);
      ++rejected;
    }
  }
  EXPECT_GT(rejected, 0);
  EXPECT_GT(accepted, 0);
}

TEST(MapJson, RoundTripIsExact) {
  const auto m = th::global({line("c0", {{0.1, 1.0 / 3.0}, {2.0, std::sqrt(2.0)}}, "curb", {{"curb_type", "road_side"}}, 0.25),
                             box("a0", 3, 4, 1, 3, "arrow", {{"arrow_type", "straight"}}),
                             th::area("x0", th::square(0, 0, 2))});
  const auto j = map_to_json(m);
  EXPECT_EQ(j["schema_version"], 1);
  const auto back = map_from_json(json::parse(j.dump()));
  EXPECT_EQ(back, m);
}

TEST(MapJson, StrictRejectsUnknownFieldsLenientIgnores) {
  auto j = map_to_json(th::global({line("c0", {{0, 0}, {1, 0}})}));
  j["elements"][0]["colour"] = "red";
  EXPECT_THROW(map_from_json(j, ParseMode::Strict), Error);
  EXPECT_NO_THROW(map_from_json(j, ParseMode::Lenient));
  j["schema_version"] = 2;
  EXPECT_THROW(map_from_json(j, ParseMode::Lenient), Error);
}

// ---- scene split ---------------------------------------------------------------------

namespace {
Trajectory straight_traj(double length, double step = 1.0) {
  std::vector<Pose2D> poses;
  for (double s = 0; s <= length + 1e-9; s += step) poses.push_back({s / 10, s, 0, 0});
  return Trajectory(poses);
}
}  // namespace

TEST(SceneSplit, SamplePositions) {
  const auto s = sample_positions(straight_traj(100), 25);
  ASSERT_EQ(s.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s[i].x, 25.0 * i, 1e-9);
  EXPECT_EQ(sample_positions(Trajectory({{0, 3, 4, 0}}), 25).size(), 1u);
  const auto far = sample_positions(straight_traj(10), 25);
  ASSERT_EQ(far.size(), 2u);
  EXPECT_DOUBLE_EQ(far.back().x, 10.0);
  EXPECT_THROW(sample_positions(Trajectory{}, 25), Error);
}

TEST(SceneSplit, SplitCountsAndHeadingFrames) {
  const auto m = th::global({line("c", th::straight(-50, 150, 2, 1))});
  const auto units = split_scene(m, straight_traj(100), 50, 25);
  ASSERT_EQ(units.size(), 5u);
  for (std::size_t i = 1; i < units.size(); ++i)
    EXPECT_NEAR(distance(units[i].center.position(), units[i - 1].center.position()), 25.0, 1e-9);
  // Curved trajectory: a point dead ahead of the pose is on the local +x axis.
  std::vector<Pose2D> poses;
  for (int i = 0; i <= 90; ++i) {
    const double a = i * std::numbers::pi / 180;
    poses.push_back({double(i), 50 * std::sin(a), 50 - 50 * std::cos(a), a});
  }
  const auto curved = split_scene(m, Trajectory(poses), 50, 25);
  for (const auto& u : curved) {
    const auto& tf = *u.frame().to_global();
    const Point2D ahead{u.center.x + 7 * std::cos(u.center.yaw), u.center.y + 7 * std::sin(u.center.yaw)};
    const auto local = tf.apply_inverse(ahead);
    EXPECT_NEAR(local.x, 7.0, 1e-9);
    EXPECT_NEAR(local.y, 0.0, 1e-9);
  }
}

TEST(SceneSplit, CropExamples) {
  const Pose2D center{0, 100, 0, 0};
  // 200 m curb through a 50 m unit: one 50 m fragment spanning the square.
  const auto unit = crop_unit(th::global({line("c", {{0, 1}, {200, 1}})}), center, 50, "u0000");
  ASSERT_EQ(unit.elements().size(), 1u);
  const auto& frag = unit.elements()[0];
  EXPECT_EQ(frag.id(), "c:0");
  EXPECT_EQ(frag.source(), "c");
  EXPECT_NEAR(polyline_length(frag.points()), 50.0, 1e-9);
  EXPECT_NEAR(frag.points().front().x, -25.0, 1e-9);
  EXPECT_NEAR(frag.points().back().x, 25.0, 1e-9);

  // Arrow whose centroid is 1 m outside the square is dropped; one inside is kept whole.
  const auto boxes = crop_unit(th::global({box("out", 126, 0, 1, 3), box("in", 124.5, 0, 4, 1)}), center, 50, "u");
  ASSERT_EQ(boxes.elements().size(), 1u);
  EXPECT_EQ(boxes.elements()[0].id(), "in");
  EXPECT_EQ(boxes.elements()[0].points().size(), 4u);

  // Crosswalk fully inside: same polygon in local coordinates; round trip exact.
  const auto cw = th::area("cw", th::square(95, -2, 4));
  const auto cu = crop_unit(th::global({cw}), center, 50, "u");
  ASSERT_EQ(cu.elements().size(), 1u);
  const auto back = to_global(cu.local);
  ASSERT_EQ(back.elements()[0].points().size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(distance(back.elements()[0].points()[i], cw.points()[i]), 0.0, 1e-9);
}

TEST(SceneSplit, ReenteringLineMakesSeveralFragments) {
  // A U-turn leaves and re-enters the square.
  const Polyline u{{-40, -10}, {40, -10}, {40, 10}, {-40, 10}};
  const auto unit = crop_unit(th::global({line("c", u)}), Pose2D{0, 0, 0, 0}, 50, "u");
  ASSERT_EQ(unit.elements().size(), 2u);
  EXPECT_EQ(unit.elements()[0].id(), "c:0");
  EXPECT_EQ(unit.elements()[1].id(), "c:1");
}

TEST(SceneSplit, FragmentsCoverCorridorAndOverlap) {
  // A wiggly 300 m line along a straight trajectory: every sampled point of
  // the line is covered by at least 2 units when stride <= extent/2.
  Polyline wiggle;
  for (int i = 0; i <= 300; ++i) wiggle.push_back({double(i), 5 * std::sin(i / 20.0)});
  const auto m = th::global({line("c", wiggle)});
  const auto units = split_scene(m, straight_traj(300), 50, 25);
  std::vector<Polyline> frags;
  for (const auto& u : units) {
    const auto global = to_global(u.local);
    for (const auto& e : global.elements()) frags.push_back(e.points());
  }
  for (auto p : densify(wiggle, 0.5)) {
    if (p.x < 25 || p.x > 275) continue;  // corridor interior
    int covering = 0;
    for (const auto& f : frags) covering += oracle::poly_dist(p, f) < 1e-6;
    EXPECT_GE(covering, 2) << p.x;
  }
}

TEST(SceneSplit, UnitJsonRoundTrip) {
  const auto units = split_scene(th::global({line("c", th::straight(0, 60, 1, 1))}), straight_traj(60), 50, 25);
  for (const auto& u : units) {
    const auto back = unit_from_json(json::parse(unit_to_json(u).dump()));
    EXPECT_EQ(back.id, u.id);
    EXPECT_EQ(back.local, u.local);
    EXPECT_EQ(back.center, u.center);
  }
}
