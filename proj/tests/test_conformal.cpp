#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cat0lab/conformal.hpp"
#include "cat0lab/errors.hpp"
#include "cat0lab/metric_core.hpp"
#include "cat0lab/model_spaces.hpp"
#include "cat0lab/rng.hpp"
#include "cat0lab/scalar_fields.hpp"

using namespace cat0lab;

namespace {

LengthSpace flat(double h) {
  ModelSpec s;
  s.spacing = h;
  return generate(s);
}

ScalarField exp_of(const LengthSpace& s, const FieldRule& r) { return exp_factor(make_field(s, r)); }

}  // namespace

TEST(ConformalChange, ConstantOneKeepsWeights) {
  const LengthSpace s = flat(0.1);
  const LengthSpace t = conformal_change(s, make_field(s, FieldRule::constant(1.0)));
  ASSERT_EQ(t.edge_count(), s.edge_count());
  for (std::size_t e = 0; e < s.edge_count(); ++e) EXPECT_NEAR(t.edge(e).weight, s.edge(e).weight, 1e-15);
  EXPECT_EQ(t.boundary(), s.boundary());
  EXPECT_EQ(t.coords(), s.coords());
  EXPECT_FALSE(t.oracle().has_value());
}

TEST(ConformalChange, ConstantScalesAllDistances) {
  const LengthSpace s = flat(0.1);
  const double c = 0.7;
  const LengthSpace t = conformal_change(s, make_field(s, FieldRule::constant(std::exp(c))));
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const std::size_t a = rng.index(s.vertex_count()), b = rng.index(s.vertex_count());
    EXPECT_NEAR(distance(t, a, b), std::exp(c) * distance(s, a, b), 1e-12);
  }
}

TEST(ConformalChange, TrapezoidAndMidpointWeightsOnTriangulationEdges) {
  const LengthSpace s = flat(0.1);
  const ScalarField rho = exp_of(s, FieldRule::norm_squared());
  const auto trap = conformal_weights(s, rho, Quadrature::trapezoid);
  const auto mid = conformal_weights(s, rho, Quadrature::midpoint);
  for (const Face& f : s.faces()) {
    for (int k = 0; k < 3; ++k) {
      const std::size_t a = f[k], b = f[(k + 1) % 3];
      const std::size_t e = *s.find_edge(a, b);
      const double w = s.edge(e).weight;
      EXPECT_NEAR(trap[e], w * 0.5 * (rho[a] + rho[b]), 1e-14);
      const Vec2 m = (s.coord(a) + s.coord(b)) * 0.5;
      EXPECT_NEAR(mid[e], w * std::exp(m.norm2()), 1e-14);
    }
  }
}

TEST(ConformalChange, RejectsNonPositiveFactor) {
  const LengthSpace s = flat(0.1);
  EXPECT_THROW(conformal_change(s, make_field(s, FieldRule::constant(0.0))), InvalidInput);
  EXPECT_THROW(conformal_change(s, make_field(s, FieldRule::constant(-1.0))), InvalidInput);
  EXPECT_THROW(conformal_change(s, field_from_values({1.0})), InvalidInput);
}

TEST(ConformalChange, PowerRadialAlphaOneIsTheFourPiCone) {
  const LengthSpace s = flat(0.02);
  const LengthSpace t = conformal_change(s, make_field(s, FieldRule::power_radial(1.0)));
  ASSERT_TRUE(t.oracle());
  EXPECT_EQ(t.oracle()->kind, OracleKind::cone);
  EXPECT_NEAR(t.oracle()->total_angle, 4.0 * kPi, 1e-12);
  const std::size_t a = nearest_vertex(s, {0.5, 0.0}), b = nearest_vertex(s, {-0.5, 0.0});
  ASSERT_LT((s.coord(a) - Vec2{0.5, 0.0}).norm(), 1e-9);
  ASSERT_LT((s.coord(b) - Vec2{-0.5, 0.0}).norm(), 1e-9);
  // Cone radius r^2 / 2 = 0.125 on both sides, angular gap 2 pi: through the apex.
  EXPECT_NEAR(exact_distance(t, a, b), 0.25, 1e-12);
  EXPECT_NEAR(distance(t, a, b), 0.25, 0.02 * 0.25);
}

TEST(ExpFactor, Basics) {
  const LengthSpace s = flat(0.1);
  const ScalarField one = exp_of(s, FieldRule::constant(0.0));
  EXPECT_TRUE(one.positive);
  for (double v : one.values) EXPECT_EQ(v, 1.0);
  const ScalarField aff = exp_of(s, FieldRule::affine(0.3, -0.2, 0.1));
  for (std::size_t v = 0; v < s.vertex_count(); ++v) {
    EXPECT_NEAR(std::log(aff[v]), 0.3 * s.coord(v).x - 0.2 * s.coord(v).y + 0.1, 1e-12);
  }
  const ScalarField d = exp_of(s, FieldRule::distance_to_point({0.2, 0.2}));
  for (double v : d.values) EXPECT_GE(v, 1.0);
  EXPECT_THROW(exp_factor(field_from_values({701.0})), InvalidInput);
  EXPECT_THROW(exp_factor(field_from_values({-701.0})), InvalidInput);
}

TEST(CompositionLaw, ConstantTwoTimesTwo) {
  const LengthSpace s = flat(0.1);
  const ScalarField two = make_field(s, FieldRule::constant(2.0));
  for (Quadrature q : {Quadrature::trapezoid, Quadrature::midpoint}) {
    const CompositionReport r = composition_law_check(s, two, two, 200, 1, q);
    EXPECT_TRUE(r.pass);
    EXPECT_LE(r.max_gap, 1e-12);
  }
  const LengthSpace four = conformal_change(conformal_change(s, two), two);
  EXPECT_NEAR(distance(four, 0, s.vertex_count() - 1), 4.0 * distance(s, 0, s.vertex_count() - 1), 1e-12);
}

TEST(CompositionLaw, MidpointExactTrapezoidWithinBound) {
  const LengthSpace s = flat(0.02);
  const ScalarField rho = exp_of(s, FieldRule::norm_squared());
  const CompositionReport mid = composition_law_check(s, rho, rho, 1000, 2, Quadrature::midpoint);
  EXPECT_TRUE(mid.pass);
  EXPECT_LE(mid.max_gap, 1e-12);
  const CompositionReport trap = composition_law_check(s, rho, rho, 1000, 2, Quadrature::trapezoid);
  EXPECT_TRUE(trap.pass);
  EXPECT_GT(trap.max_gap, 0.0);
  // Oracle for the bound: Lip of e^{|z|^2} on the unit disc is at most 2e.
  EXPECT_LE(trap.lip, 2.0 * std::exp(1.0) + 1e-9);
  EXPECT_LE(trap.max_gap, 2.0 * trap.h * trap.lip);
  EXPECT_NEAR(trap.threshold, 2.0 * trap.h * trap.lip, 1e-15);
}

TEST(Properties, MonotoneLowerBoundAndBiLipschitz) {
  const LengthSpace s = flat(0.08);
  const ScalarField r1 = exp_of(s, FieldRule::affine(0.2, 0.1, -0.3));
  std::vector<double> bigger(r1.values);
  for (std::size_t v = 0; v < bigger.size(); ++v) bigger[v] *= 1.0 + 0.5 * s.coord(v).norm2();
  const ScalarField r2 = field_from_values(bigger);
  const LengthSpace a = conformal_change(s, r1), b = conformal_change(s, r2);
  const double lo = *std::min_element(r1.values.begin(), r1.values.end());
  const double hi = *std::max_element(r1.values.begin(), r1.values.end());
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    const std::size_t src = rng.index(s.vertex_count());
    const auto d0 = distances_from(s, src), d1 = distances_from(a, src), d2 = distances_from(b, src);
    for (std::size_t v = 0; v < s.vertex_count(); ++v) {
      ASSERT_LE(d1[v], d2[v] + 1e-12);
      ASSERT_GE(d1[v], lo * d0[v] - 1e-12);
      ASSERT_LE(d1[v], hi * d0[v] + 1e-12);
    }
  }
}

TEST(Curvature, AffineIsFlat) {
  const LengthSpace s = flat(0.05);
  const CurvatureReport r = conformal_curvature_check(s, make_field(s, FieldRule::affine(0.5, -0.4, 0.0)));
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.k_origin, 0.0, 0.1);
}

TEST(Curvature, HalfNormSquaredGivesMinusTwoAtOrigin) {
  const LengthSpace s = flat(0.02);
  const CurvatureReport r = conformal_curvature_check(s, make_field(s, FieldRule::norm_squared(0.5)));
  EXPECT_TRUE(r.pass) << r.constant;
  EXPECT_NEAR(r.k_origin, -2.0, 0.1);
  EXPECT_NEAR(r.k_origin_formula, -2.0, 1e-9);
  EXPECT_LE(r.max_residual, r.c_max * r.h);
}

TEST(Curvature, ConcaveExponentIsPositivelyCurved) {
  const LengthSpace s = flat(0.02);
  const CurvatureReport half = conformal_curvature_check(s, make_field(s, FieldRule::norm_squared(-0.5)));
  EXPECT_NEAR(half.k_origin, 2.0, 0.1);
  const CurvatureReport full = conformal_curvature_check(s, make_field(s, FieldRule::norm_squared(-1.0)));
  EXPECT_NEAR(full.k_origin, 4.0, 0.2);
}

TEST(Curvature, AngleDefectOfACone) {
  ModelSpec spec;
  spec.kind = ModelKind::cone;
  spec.total_angle = 3.0 * kPi;
  spec.spacing = 0.05;
  const LengthSpace c = generate(spec);
  const auto k = angle_defect_curvature(c);
  const std::size_t apex = nearest_vertex(c, {0.0, 0.0});
  // The apex carries the whole defect 2 pi - 3 pi = -pi; spread over its
  // area the curvature is large and negative.
  EXPECT_LT(k[apex], -10.0);
}

TEST(Quadrature, Names) {
  EXPECT_EQ(quadrature_from_string(to_string(Quadrature::midpoint)), Quadrature::midpoint);
  EXPECT_EQ(quadrature_from_string(to_string(Quadrature::trapezoid)), Quadrature::trapezoid);
  EXPECT_THROW(quadrature_from_string("simpson"), InvalidInput);
}
