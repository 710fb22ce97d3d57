#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cat0lab/cat0_verify.hpp"
#include "cat0lab/conformal.hpp"
#include "cat0lab/errors.hpp"
#include "cat0lab/metric_core.hpp"
#include "cat0lab/model_spaces.hpp"
#include "cat0lab/scalar_fields.hpp"
#include "cat0lab/target_space.hpp"

using namespace cat0lab;

namespace {

LengthSpace model(ModelKind kind, double h, double angle_over_pi = 2.0) {
  ModelSpec s;
  s.kind = kind;
  s.spacing = h;
  if (kind == ModelKind::hyperbolic_disc) s.radius = 0.8;
  if (kind == ModelKind::cone) s.total_angle = angle_over_pi * kPi;
  if (kind == ModelKind::tree) s.legs = {1.0, 1.0, 1.0};
  return generate(s);
}

std::vector<std::size_t> leaves(const LengthSpace& t) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < t.vertex_count(); ++v)
    if (t.neighbors(v).size() == 1) out.push_back(v);
  return out;
}

// Euclidean comparison position of the point at arc length s along side k of
// a triangle with side lengths l (side k runs from corner k to corner k+1).
Vec2 comparison_point(const double l[3], int side, double s) {
  const double a = l[0], c = l[2], b = l[1];
  const Vec2 p0{0.0, 0.0}, p1{a, 0.0};
  const double x = (a * a + c * c - b * b) / (2.0 * a);
  const Vec2 p2{x, std::sqrt(std::max(0.0, c * c - x * x))};
  const Vec2 corners[3] = {p0, p1, p2};
  const Vec2 from = corners[side], to = corners[(side + 1) % 3];
  return lerp(from, to, s / l[side]);
}

LengthSpace scaled(const LengthSpace& s, double c) {
  std::vector<double> w;
  for (const auto& e : s.edges()) w.push_back(c * e.weight);
  return s.with_weights(std::move(w), std::nullopt);
}

}  // namespace

TEST(ComparisonTest, FlatTrianglesWithinMeshTolerance) {
  const LengthSpace s = model(ModelKind::flat_disc, 0.05);
  const double h = s.nominal_spacing();
  const std::size_t a = nearest_vertex(s, {-0.5, -0.3}), b = nearest_vertex(s, {0.6, -0.2}),
                    c = nearest_vertex(s, {0.0, 0.6});
  const ComparisonReport r = comparison_test(s, a, b, c, 5, 3.0 * h);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(std::abs(r.min_slack), 3.0 * h);
  EXPECT_EQ(r.triangles_tested, 1u);
  EXPECT_GT(r.pairs_tested, 0u);
}

TEST(ComparisonTest, TripodLeavesMatchBruteForce) {
  const LengthSpace t = model(ModelKind::tree, 0.1);
  const auto lv = leaves(t);
  ASSERT_EQ(lv.size(), 3u);
  const ComparisonReport r = comparison_test(t, lv[0], lv[1], lv[2], 3, 0.0);
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.min_slack, -1e-12);

  // Brute force: every pair of vertices on two different sides.
  const GeodesicPath sides[3] = {geodesic(t, lv[0], lv[1]), geodesic(t, lv[1], lv[2]), geodesic(t, lv[2], lv[0])};
  const double l[3] = {sides[0].total_length(), sides[1].total_length(), sides[2].total_length()};
  double worst = kInfinity;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      for (std::size_t p = 0; p < sides[i].vertices().size(); ++p) {
        const auto row = distances_from(t, sides[i].vertices()[p]);
        for (std::size_t q = 0; q < sides[j].vertices().size(); ++q) {
          const Vec2 cp = comparison_point(l, i, sides[i].cumulative_lengths()[p]);
          const Vec2 cq = comparison_point(l, j, sides[j].cumulative_lengths()[q]);
          worst = std::min(worst, (cp - cq).norm() - row[sides[j].vertices()[q]]);
        }
      }
    }
  }
  EXPECT_GE(worst, -1e-12);
  EXPECT_GE(r.min_slack, worst - 1e-12);
}

TEST(ComparisonTest, ConePiApexTriangleFails) {
  const LengthSpace s = model(ModelKind::cone, 0.05, 1.0);
  // Three points around the apex at cone angles 0, pi/3, 2pi/3 (chart angles
  // 0, 2pi/3, 4pi/3 since the chart angle is doubled).
  const double r = 0.5;
  const std::size_t a = nearest_vertex(s, {r, 0.0});
  const std::size_t b = nearest_vertex(s, {r * std::cos(2.0 * kPi / 3.0), r * std::sin(2.0 * kPi / 3.0)});
  const std::size_t c = nearest_vertex(s, {r * std::cos(4.0 * kPi / 3.0), r * std::sin(4.0 * kPi / 3.0)});
  const ComparisonReport rep = comparison_test(s, a, b, c, 5, 3.0 * s.nominal_spacing());
  EXPECT_LT(rep.min_slack, 0.0);
  EXPECT_FALSE(rep.pass);
}

TEST(ComparisonTest, RejectsRepeatedVertices) {
  const LengthSpace t = model(ModelKind::tree, 0.1);
  EXPECT_THROW(comparison_test(t, 1, 1, 2, 3, 0.0), InvalidInput);
  EXPECT_THROW(comparison_test(t, 1, 2, 9999, 3, 0.0), InvalidInput);
}

TEST(Cat0Scan, SoundOnCat0Models) {
  for (auto [kind, angle] : {std::pair{ModelKind::flat_disc, 2.0}, std::pair{ModelKind::hyperbolic_disc, 2.0},
                             std::pair{ModelKind::tree, 2.0}, std::pair{ModelKind::cone, 3.0}}) {
    const LengthSpace s = model(kind, 0.08, angle);
    ScanParams p;
    p.triangles = 300;
    p.seed = 5;
    const ComparisonReport r = cat0_scan(s, p);
    EXPECT_TRUE(r.pass) << to_string(kind) << " min slack " << r.min_slack << " tol " << r.tol;
    EXPECT_NEAR(r.tol, 3.0 * s.nominal_spacing(), 1e-15);
    EXPECT_EQ(r.triangles_tested, 300u);
  }
}

TEST(Cat0Scan, ConeBelowTwoPiFailsAtEverySpacing) {
  std::vector<double> mins;
  for (double h : {0.1, 0.05}) {
    const LengthSpace s = model(ModelKind::cone, h, 1.0);
    ScanParams p;
    p.triangles = 400;
    p.seed = 6;
    const ComparisonReport r = cat0_scan(s, p);
    EXPECT_FALSE(r.pass);
    mins.push_back(r.min_slack);
  }
  // The defect is geometric: it does not vanish under refinement.
  EXPECT_LT(mins[1], -3.0 * 0.05);
  EXPECT_LE(std::abs(mins[1] - mins[0]), 0.2 * std::abs(mins[0]));
}

TEST(Cat0Scan, ConcaveExponentFails) {
  const LengthSpace s = model(ModelKind::flat_disc, 0.08);
  const LengthSpace w = conformal_change(s, exp_factor(make_field(s, FieldRule::norm_squared(-1.0))));
  ScanParams p;
  p.triangles = 400;
  p.seed = 7;
  const ComparisonReport r = cat0_scan(w, p);
  EXPECT_FALSE(r.pass);
  EXPECT_LT(r.min_slack, -r.tol);
}

TEST(Cat0Scan, ScaleEquivariance) {
  const LengthSpace s = model(ModelKind::cone, 0.1, 1.0);
  ScanParams p;
  p.triangles = 150;
  p.seed = 8;
  const ComparisonReport a = cat0_scan(s, p);
  const ComparisonReport b = cat0_scan(scaled(s, 2.5), p);
  EXPECT_EQ(a.pass, b.pass);
  EXPECT_NEAR(b.min_slack, 2.5 * a.min_slack, 1e-9);
  EXPECT_NEAR(b.tol, 2.5 * a.tol, 1e-12);
}

TEST(Cat0Scan, IndependentOfThreadCountAndReproducible) {
  const LengthSpace s = model(ModelKind::hyperbolic_disc, 0.1);
  ScanParams p;
  p.triangles = 200;
  p.seed = 9;
  p.threads = 1;
  const ComparisonReport a = cat0_scan(s, p);
  p.threads = 3;
  const ComparisonReport b = cat0_scan(s, p);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  std::ostringstream ca, cb;
  write_slack_csv(a, ca);
  write_slack_csv(b, cb);
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_EQ(ca.str().substr(0, ca.str().find('\n')), "v0,v1,v2,t1,t2,actual,comparison,slack");
}

TEST(DistanceConvexity, FlatTreeAndCone) {
  const LengthSpace flat = model(ModelKind::flat_disc, 0.08);
  const DistanceConvexityReport f = geodesic_distance_convexity(flat, 200, 3.0 * flat.nominal_spacing(), 1);
  EXPECT_TRUE(f.pass);
  EXPECT_GE(f.min_defect, -3.0 * flat.nominal_spacing());
  const LengthSpace tree = model(ModelKind::tree, 0.1);
  EXPECT_TRUE(geodesic_distance_convexity(tree, 200, 1e-9, 2).pass);
  const LengthSpace cone = model(ModelKind::cone, 0.05, 1.0);
  const DistanceConvexityReport c = geodesic_distance_convexity(cone, 400, 3.0 * cone.nominal_spacing(), 3);
  EXPECT_FALSE(c.pass);
}

TEST(Majorization, IdentityPassesAtZeroTolerance) {
  const LengthSpace x = model(ModelKind::flat_disc, 0.1);
  std::vector<std::size_t> id(x.vertex_count());
  for (std::size_t v = 0; v < id.size(); ++v) id[v] = v;
  const MajorizationReport r = majorization_check(x, x, id, x.boundary(), 300, 0.0, 1);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.short_map);
  EXPECT_TRUE(r.arc_length);
  EXPECT_TRUE(r.bijective);
  EXPECT_LE(r.max_stretch_excess, 0.0);
}

TEST(Majorization, HalfScaleShrinksArcLength) {
  // P: 2X -> X is the identity on labels, i.e. scaling by one half.
  const LengthSpace x = model(ModelKind::flat_disc, 0.1);
  const LengthSpace y = scaled(x, 2.0);
  std::vector<std::size_t> id(x.vertex_count());
  for (std::size_t v = 0; v < id.size(); ++v) id[v] = v;
  const MajorizationReport r = majorization_check(y, x, id, x.boundary(), 300, 0.05, 2);
  EXPECT_TRUE(r.short_map);
  EXPECT_FALSE(r.arc_length);
  EXPECT_FALSE(r.pass);
}

TEST(Majorization, BoundaryOffTheCurveIsRejected) {
  const LengthSpace x = model(ModelKind::flat_disc, 0.1);
  std::vector<std::size_t> constant(x.vertex_count(), nearest_vertex(x, {0.0, 0.0}));
  EXPECT_THROW(majorization_check(x, x, constant, x.boundary(), 10, 0.0, 3), InvalidInput);
}

TEST(Majorization, PlanarTargetForm) {
  const LengthSpace y = model(ModelKind::flat_disc, 0.1);
  const EuclideanPlane plane;
  std::vector<TargetPoint> images, curve;
  for (std::size_t v = 0; v < y.vertex_count(); ++v) images.emplace_back(y.coord(v));
  std::vector<std::size_t> assignment;
  for (std::size_t i = 0; i < y.boundary().size(); ++i) {
    curve.emplace_back(y.coord(y.boundary()[i]));
    assignment.push_back(i);
  }
  const MajorizationReport r = majorization_check(y, plane, images, curve, assignment, 300, 1e-9, 4);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.boundary_length_x, r.boundary_length_y, 1e-9);
}
