#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cat0lab/errors.hpp"
#include "cat0lab/metric_core.hpp"
#include "cat0lab/model_spaces.hpp"
#include "cat0lab/rng.hpp"
#include "cat0lab/scalar_fields.hpp"

using namespace cat0lab;

namespace {

LengthSpace flat(double h, double radius = 1.0) {
  ModelSpec s;
  s.spacing = h;
  s.radius = radius;
  return generate(s);
}

LengthSpace tree(std::vector<double> legs, double h) {
  ModelSpec s;
  s.kind = ModelKind::tree;
  s.legs = std::move(legs);
  s.spacing = h;
  return generate(s);
}

}  // namespace

TEST(MakeField, TrivialRules) {
  const LengthSpace s = flat(0.1);
  const ScalarField zero = make_field(s, FieldRule::constant(0.0));
  EXPECT_TRUE(std::all_of(zero.values.begin(), zero.values.end(), [](double v) { return v == 0.0; }));
  EXPECT_FALSE(zero.positive);

  const std::size_t p = nearest_vertex(s, {0.3, 0.4});
  const ScalarField d = make_field(s, FieldRule::distance_to_point(s.coord(p)));
  EXPECT_EQ(d[p], 0.0);

  const ScalarField n2 = make_field(s, FieldRule::norm_squared());
  ASSERT_TRUE(n2.chart_eval);
  EXPECT_NEAR(n2.chart_eval({0.3, 0.4}), 0.25, 1e-15);
  for (std::size_t v = 0; v < s.vertex_count(); ++v) EXPECT_NEAR(n2[v], s.coord(v).norm2(), 1e-12);
}

TEST(MakeField, ValuesMatchTheRuleAtCoordinates) {
  const LengthSpace s = flat(0.1);
  FieldRule aff = FieldRule::affine(1.5, -2.0, 0.25);
  const ScalarField f = make_field(s, aff.scaled(2.0));
  for (std::size_t v = 0; v < s.vertex_count(); ++v) {
    const Vec2 z = s.coord(v);
    EXPECT_NEAR(f[v], 2.0 * (1.5 * z.x - 2.0 * z.y + 0.25), 1e-12);
  }
  const ScalarField r = make_field(s, FieldRule::power_radial(1.5));
  for (std::size_t v = 0; v < s.vertex_count(); ++v) EXPECT_NEAR(r[v], std::pow(s.coord(v).norm(), 1.5), 1e-12);
}

TEST(MakeField, Errors) {
  const LengthSpace bare = build_space(2, {{0, 1, 1.0}});
  EXPECT_THROW(make_field(bare, FieldRule::norm_squared()), InvalidInput);
  EXPECT_THROW(make_field(bare, FieldRule::distance_to_set({})), InvalidInput);
  EXPECT_THROW(field_rule_from_json({{"kind", "nope"}}), InvalidInput);
  EXPECT_THROW(field_rule_from_json({{"kind", "distance-to-point"}}), InvalidInput);
}

TEST(MakeField, DistanceToSetIsTheMinimum) {
  const LengthSpace t = tree({1.0, 1.0, 1.0}, 0.1);
  std::vector<std::size_t> set{3, 17};
  const ScalarField f = make_field(t, FieldRule::distance_to_set(set));
  const auto d3 = distances_from(t, 3), d17 = distances_from(t, 17);
  for (std::size_t v = 0; v < t.vertex_count(); ++v) EXPECT_NEAR(f[v], std::min(d3[v], d17[v]), 1e-12);
}

TEST(MakeField, JsonRoundTrip) {
  const FieldRule r = FieldRule::distance_to_point({0.1, -0.2}, 2.0).scaled(0.5);
  const FieldRule s = field_rule_from_json(to_json(r));
  EXPECT_EQ(s.kind, RuleKind::distance_to_point);
  EXPECT_DOUBLE_EQ(s.power, 2.0);
  EXPECT_DOUBLE_EQ(s.scale, 0.5);
  ASSERT_TRUE(s.point);
  EXPECT_DOUBLE_EQ(s.point->y, -0.2);
}

TEST(ConvexityCheck, DistanceOnATreeMatchesBruteForce) {
  const LengthSpace t = tree({0.5, 0.4, 0.7, 0.3}, 0.1);
  ASSERT_LE(t.vertex_count(), 25u);
  const ScalarField f = make_field(t, FieldRule::distance_to_vertex(5));
  // Brute force over every vertex pair and every vertex triple along its
  // geodesic: midpoints of vertex parameters land on vertices or edges.
  double worst = kInfinity;
  for (std::size_t a = 0; a < t.vertex_count(); ++a) {
    for (std::size_t b = a + 1; b < t.vertex_count(); ++b) {
      const GeodesicPath g = geodesic(t, a, b);
      const auto& cum = g.cumulative_lengths();
      for (std::size_t i = 0; i < cum.size(); ++i) {
        for (std::size_t j = i; j < cum.size(); ++j) {
          const double mid = 0.5 * (cum[i] + cum[j]);
          const double defect =
              0.5 * (f[g.vertices()[i]] + f[g.vertices()[j]]) - interpolate(f, g.point_at(mid));
          worst = std::min(worst, defect);
        }
      }
    }
  }
  EXPECT_GE(worst, -1e-12);
  const ConvexityReport r = convexity_check(t, f, 300, 1e-9, 1);
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.min_defect, -1e-9);
}

TEST(ConvexityCheck, AffineHasNoDefect) {
  const LengthSpace s = flat(0.05);
  const ScalarField f = make_field(s, FieldRule::affine(0.7, -0.3, 1.0));
  const ConvexityReport r = convexity_check(s, f, 200, 1e-9, 2);
  // Graph geodesics deviate from straight lines by O(h); the affine defect
  // is bounded by that deviation.
  EXPECT_GE(r.min_defect, -3.0 * 0.05);
  EXPECT_GT(r.samples, 0u);
}

TEST(ConvexityCheck, NegativeNormSquaredFailsOnADiameter) {
  const LengthSpace s = flat(0.05);
  const ScalarField f = make_field(s, FieldRule::norm_squared(-1.0));
  const double tol = 3.0 * 0.05;
  const ConvexityReport r = convexity_check(s, f, 200, tol, 3);
  EXPECT_FALSE(r.pass);
  EXPECT_LT(r.min_defect, -tol);
  // Oracle on the diameter from (-1,0) to (1,0): -((t^2 + t'^2)/2) + ((t+t')/2)^2 = -(t - t')^2 / 4,
  // so the worst defect over a geodesic of length L is about -L^2 / 4.
  EXPECT_GE(r.min_defect, -1.0 - 0.1);
}

TEST(ConvexityCheck, DistanceRulesPassOnCat0Models) {
  for (ModelKind kind : {ModelKind::flat_disc, ModelKind::hyperbolic_disc, ModelKind::cone, ModelKind::tree}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.spacing = 0.05;
    if (kind == ModelKind::hyperbolic_disc) spec.radius = 0.8;
    if (kind == ModelKind::cone) spec.total_angle = 3.0 * kPi;
    if (kind == ModelKind::tree) spec.legs = {1.0, 1.0, 1.0};
    const LengthSpace s = generate(spec);
    const ScalarField f = make_field(s, FieldRule::distance_to_vertex(s.vertex_count() / 3));
    const ConvexityReport r = convexity_check(s, f, 200, 5.0 * s.nominal_spacing(), 4);
    EXPECT_TRUE(r.pass) << to_string(kind) << " min defect " << r.min_defect;
  }
}

TEST(Laplacian, AnnihilatesAffineAndIsLinear) {
  const LengthSpace s = flat(0.05);
  const ScalarField a = make_field(s, FieldRule::affine(2.0, -1.0, 3.0));
  const InteriorValues la = discrete_laplacian(s, a);
  ASSERT_FALSE(la.vertices.empty());
  for (double v : la.values) EXPECT_NEAR(v, 0.0, 1e-10);

  const ScalarField f = make_field(s, FieldRule::norm_squared());
  const ScalarField g = make_field(s, FieldRule::power_radial(3.0));
  std::vector<double> combo(s.vertex_count());
  for (std::size_t v = 0; v < combo.size(); ++v) combo[v] = 2.0 * f[v] - 0.5 * g[v];
  const InteriorValues lf = discrete_laplacian(s, f), lg = discrete_laplacian(s, g);
  const InteriorValues lc = discrete_laplacian(s, field_from_values(combo));
  for (std::size_t i = 0; i < lc.values.size(); ++i) {
    EXPECT_NEAR(lc.values[i], 2.0 * lf.values[i] - 0.5 * lg.values[i], 1e-9);
  }
}

TEST(Laplacian, NormSquaredIsFourUpToOh) {
  const double h = 0.05;
  const LengthSpace s = flat(h);
  const InteriorValues l = discrete_laplacian(s, make_field(s, FieldRule::norm_squared()));
  const InteriorValues l2 = discrete_laplacian(s, make_field(s, FieldRule::power_radial(2.0)));
  // Finite-difference oracle: 5-point stencil on x^2 + y^2 is exactly 4.
  const auto fd = [](Vec2 z, double e) {
    auto f = [](Vec2 p) { return p.norm2(); };
    return (f(z + Vec2{e, 0}) + f(z - Vec2{e, 0}) + f(z + Vec2{0, e}) + f(z - Vec2{0, e}) - 4.0 * f(z)) / (e * e);
  };
  for (std::size_t i = 0; i < l.vertices.size(); ++i) {
    const Vec2 z = s.coord(l.vertices[i]);
    if (z.norm() > 1.0 - 3.0 * h) continue;
    EXPECT_NEAR(l.values[i], fd(z, h), 5.0 * h);
    EXPECT_NEAR(l2.values[i], l.values[i], 1e-9);
  }
}

TEST(Laplacian, RejectsNonFlatMesh) {
  ModelSpec spec;
  spec.kind = ModelKind::hyperbolic_disc;
  spec.radius = 0.5;
  spec.spacing = 0.1;
  const LengthSpace s = generate(spec);
  EXPECT_THROW(discrete_laplacian(s, make_field(s, FieldRule::norm_squared())), InvalidInput);
}

TEST(Subharmonic, ModulusIsLogHarmonicWithOriginExcluded) {
  const double h = 0.05;
  const LengthSpace s = flat(h);
  // log|z - p| is harmonic on the disc for p outside it.
  const ScalarField shifted = make_field(s, FieldRule::distance_to_point({2.0, 0.5}));
  const SubharmonicReport ok = log_subharmonic_check(s, shifted, 5.0 * h, 4.0 * h);
  EXPECT_TRUE(ok.pass) << ok.min_laplacian;
  EXPECT_TRUE(ok.vanishing.empty());
  // |z| vanishes at the origin; that vertex and its neighbours stay out of
  // the test.
  const ScalarField r = make_field(s, FieldRule::power_radial(1.0));
  const SubharmonicReport rep = log_subharmonic_check(s, r, 5.0 * h, 4.0 * h);
  ASSERT_EQ(rep.vanishing.size(), 1u);
  EXPECT_LT(s.coord(rep.vanishing[0]).norm(), 1e-12);
  EXPECT_FALSE(rep.excluded.empty());
  EXPECT_TRUE(std::isfinite(rep.min_laplacian));
  for (const Face& f : s.faces()) {
    if (std::find(f.begin(), f.end(), rep.vanishing[0]) == f.end()) continue;
    for (std::size_t v : f) EXPECT_NE(std::find(rep.excluded.begin(), rep.excluded.end(), v), rep.excluded.end());
  }
}

TEST(Subharmonic, ExpOfPlusMinusNormSquared) {
  const double h = 0.05;
  const LengthSpace s = flat(h);
  std::vector<double> up(s.vertex_count()), down(s.vertex_count());
  for (std::size_t v = 0; v < up.size(); ++v) {
    up[v] = std::exp(s.coord(v).norm2());
    down[v] = std::exp(-s.coord(v).norm2());
  }
  const SubharmonicReport a = log_subharmonic_check(s, field_from_values(up), 5.0 * h);
  EXPECT_TRUE(a.pass);
  EXPECT_GT(a.min_laplacian, 4.0 - 5.0 * h);
  const SubharmonicReport b = log_subharmonic_check(s, field_from_values(down), 5.0 * h);
  EXPECT_FALSE(b.pass);
  EXPECT_LT(b.min_laplacian, -4.0 + 5.0 * h);
  EXPECT_THROW(log_subharmonic_check(s, field_from_values(std::vector<double>(s.vertex_count(), -1.0)), 0.1),
               InvalidInput);
}

TEST(Subharmonic, ClosedUnderProducts) {
  const double h = 0.05;
  const LengthSpace s = flat(h);
  const ScalarField f = make_field(s, FieldRule::distance_to_point({2.0, 0.5}));
  std::vector<double> g(s.vertex_count());
  for (std::size_t v = 0; v < g.size(); ++v) g[v] = std::exp(s.coord(v).x + s.coord(v).norm2());
  const ScalarField gf = field_from_values(g);
  ASSERT_TRUE(log_subharmonic_check(s, f, 5.0 * h, 4.0 * h).pass);
  ASSERT_TRUE(log_subharmonic_check(s, gf, 5.0 * h, 4.0 * h).pass);
  EXPECT_TRUE(log_subharmonic_check(s, multiply(f, gf), 5.0 * h, 4.0 * h).pass);
}

TEST(Subharmonic, PlainCheck) {
  const LengthSpace s = flat(0.05);
  EXPECT_TRUE(subharmonic_check(s, make_field(s, FieldRule::norm_squared()), 0.1).pass);
  EXPECT_FALSE(subharmonic_check(s, make_field(s, FieldRule::norm_squared(-1.0)), 0.1).pass);
}

TEST(Interpolate, LinearAlongEdge) {
  const LengthSpace s = build_space(2, {{0, 1, 2.0}});
  const ScalarField f = field_from_values({1.0, 3.0});
  const GeodesicPath g = geodesic(s, 0, 1);
  EXPECT_DOUBLE_EQ(interpolate(f, g.point_at(0.5)), 1.5);
  EXPECT_DOUBLE_EQ(interpolate(f, g.point_at(2.0)), 3.0);
}
