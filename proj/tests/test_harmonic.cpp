#include <gtest/gtest.h>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <set>

#include "cat0lab/cat0_verify.hpp"
#include "cat0lab/errors.hpp"
#include "cat0lab/harmonic.hpp"
#include "cat0lab/model_spaces.hpp"
#include "cat0lab/rng.hpp"
#include "cat0lab/scalar_fields.hpp"
#include "cat0lab/target_space.hpp"

using namespace cat0lab;

namespace {

std::shared_ptr<const LengthSpace> disc(double h, double radius = 1.0) {
  ModelSpec s;
  s.spacing = h;
  s.radius = radius;
  return std::make_shared<const LengthSpace>(generate(s));
}

std::vector<TargetPoint> boundary_images(const LengthSpace& d, const std::function<Vec2(Vec2)>& g) {
  std::vector<TargetPoint> out;
  for (std::size_t v : d.boundary()) out.emplace_back(g(d.coord(v)));
  return out;
}

double cot_at(Vec2 apex, Vec2 p, Vec2 q) {
  const Vec2 a = p - apex, b = q - apex;
  return a.dot(b) / std::abs(a.cross(b));
}

// Cotangent Laplace equation per coordinate, solved directly.
std::vector<Vec2> direct_solve(const LengthSpace& d, const std::vector<TargetPoint>& bd) {
  const std::size_t n = d.vertex_count();
  std::vector<std::vector<std::pair<std::size_t, double>>> w(n);
  auto add = [&](std::size_t a, std::size_t b, double c) {
    for (auto& [v, x] : w[a])
      if (v == b) {
        x += c;
        return;
      }
    w[a].push_back({b, c});
  };
  for (const Face& f : d.faces()) {
    for (int k = 0; k < 3; ++k) {
      const std::size_t apex = f[k], a = f[(k + 1) % 3], b = f[(k + 2) % 3];
      const double c = 0.5 * cot_at(d.coord(apex), d.coord(a), d.coord(b));
      add(a, b, c);
      add(b, a, c);
    }
  }
  std::vector<Vec2> fixed(n);
  std::vector<bool> is_b(n, false);
  for (std::size_t i = 0; i < d.boundary().size(); ++i) {
    fixed[d.boundary()[i]] = as_vec(bd[i]);
    is_b[d.boundary()[i]] = true;
  }
  std::vector<long> index(n, -1);
  long m = 0;
  for (std::size_t v = 0; v < n; ++v)
    if (!is_b[v]) index[v] = m++;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, 2);
  for (std::size_t v = 0; v < n; ++v) {
    if (is_b[v]) continue;
    double diag = 0.0;
    for (auto [u, c] : w[v]) {
      diag += c;
      if (is_b[u]) {
        rhs(index[v], 0) += c * fixed[u].x;
        rhs(index[v], 1) += c * fixed[u].y;
      } else {
        trip.emplace_back(index[v], index[u], -c);
      }
    }
    trip.emplace_back(index[v], index[v], diag);
  }
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  const Eigen::MatrixXd x = solver.solve(rhs);
  std::vector<Vec2> out = fixed;
  for (std::size_t v = 0; v < n; ++v)
    if (!is_b[v]) out[v] = {x(index[v], 0), x(index[v], 1)};
  return out;
}

double mesh_area(const LengthSpace& d) {
  double a = 0.0;
  for (const Face& f : d.faces()) a += 0.5 * std::abs((d.coord(f[1]) - d.coord(f[0])).cross(d.coord(f[2]) - d.coord(f[0])));
  return a;
}

std::shared_ptr<const TreeTarget> tripod(double h = 0.05) {
  ModelSpec s;
  s.kind = ModelKind::tree;
  s.legs = {1.0, 1.0, 1.0};
  s.spacing = h;
  return std::make_shared<const TreeTarget>(generate(s));
}

std::size_t tree_vertex(const LengthSpace& t, double leg, double r) {
  std::size_t best = 0;
  double gap = kInfinity;
  for (std::size_t v = 0; v < t.vertex_count(); ++v) {
    const Vec2 c = t.coord(v);
    if (c.x != leg && c.y != 0.0) continue;
    if (std::abs(c.y - r) < gap) gap = std::abs(c.y - r), best = v;
  }
  return best;
}

}  // namespace

TEST(Energy, ConstantIdentityAndScaling) {
  auto d = disc(0.05);
  SpaceMap id = identity_map(d);
  const double e_id = ks_energy(id).energy;
  EXPECT_NEAR(e_id, 2.0 * mesh_area(*d), 1e-9);  // exact for affine maps
  EXPECT_NEAR(e_id, 2.0 * kPi, 0.02 * 2.0 * kPi);

  SpaceMap twice = id;
  for (auto& p : twice.assignment) p = as_vec(p) * 2.0;
  EXPECT_NEAR(ks_energy(twice).energy, 4.0 * e_id, 1e-9);

  SpaceMap constant = id;
  std::fill(constant.assignment.begin(), constant.assignment.end(), TargetPoint{Vec2{0.3, 0.1}});
  EXPECT_EQ(ks_energy(constant).energy, 0.0);

  const EnergyReport dens = ks_energy(id);
  ASSERT_EQ(dens.density.size(), d->vertex_count());
  // Interior density of the identity: |du|^2 = 2.
  const std::size_t c = nearest_vertex(*d, {0.0, 0.0});
  EXPECT_NEAR(dens.density[c], 2.0, 0.05);
}

TEST(Energy, RejectsNonDiscDomains) {
  ModelSpec s;
  s.kind = ModelKind::hyperbolic_disc;
  s.radius = 0.5;
  s.spacing = 0.1;
  EXPECT_THROW(identity_map(std::make_shared<const LengthSpace>(generate(s))), InvalidInput);
}

TEST(Barycenter, ClosedFormCases) {
  const EuclideanPlane plane;
  const std::vector<TargetPoint> two{Vec2{0.0, 0.0}, Vec2{1.0, 2.0}};
  const std::vector<double> eq{1.0, 1.0};
  EXPECT_EQ(as_vec(plane.barycenter(two, eq)), (Vec2{0.5, 1.0}));

  const HyperbolicPlane hyp;
  const std::vector<TargetPoint> pm{Vec2{0.5, 0.0}, Vec2{-0.5, 0.0}};
  EXPECT_LT(as_vec(hyp.barycenter(pm, eq)).norm(), 1e-10);

  auto t = tripod(0.1);
  const std::size_t a = tree_vertex(t->space(), 0, 1.0), b = tree_vertex(t->space(), 1, 1.0);
  const std::vector<TargetPoint> leaves{t->vertex_point(a), t->vertex_point(b)};
  const GraphPoint m = as_graph_point(t->barycenter(leaves, eq));
  EXPECT_NEAR(t->distance(m, t->vertex_point(tree_vertex(t->space(), 2, 0.0))), 0.0, 1e-10);

  EXPECT_THROW(plane.barycenter({}, {}), InvalidInput);
}

TEST(Barycenter, MinimizesTheWeightedObjective) {
  const HyperbolicPlane hyp;
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TargetPoint> pts;
    std::vector<double> ws;
    for (int i = 0; i < 5; ++i) {
      pts.emplace_back(Vec2{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)});
      ws.push_back(rng.uniform(0.1, 1.0));
    }
    const TargetPoint b = hyp.barycenter(pts, ws);
    auto objective = [&](const TargetPoint& x) {
      double s = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) s += ws[i] * std::pow(hyp.distance(x, pts[i]), 2);
      return s;
    };
    const double best = objective(b);
    for (int k = 0; k < 20; ++k) {
      const Vec2 probe = as_vec(b) + Vec2{rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3)};
      EXPECT_GE(objective(probe), best - 1e-12);
    }
  }
}

TEST(TargetSpaces, GeodesicPointAtFractionOfDistance) {
  const EuclideanPlane plane;
  const HyperbolicPlane hyp;
  auto tree = tripod(0.1);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const Vec2 p{rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)}, q{rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)};
    const double t = rng.uniform();
    for (const TargetSpace* s : {static_cast<const TargetSpace*>(&plane), static_cast<const TargetSpace*>(&hyp)}) {
      const TargetPoint g = s->geodesic_point(p, q, t);
      EXPECT_NEAR(s->distance(p, g), t * s->distance(p, q), 1e-10);
      EXPECT_NEAR(s->distance(g, q), (1.0 - t) * s->distance(p, q), 1e-10);
    }
    const TargetPoint a = tree->vertex_point(rng.index(tree->space().vertex_count()));
    const TargetPoint b = tree->vertex_point(rng.index(tree->space().vertex_count()));
    const TargetPoint g = tree->geodesic_point(a, b, t);
    EXPECT_NEAR(tree->distance(a, g), t * tree->distance(a, b), 1e-10);
  }
}

TEST(Dirichlet, EuclideanMatchesDirectSparseSolve) {
  auto d = disc(0.05);
  const auto bd = boundary_images(*d, [](Vec2 z) { return Vec2{z.x * z.x - z.y * z.y, 2.0 * z.x * z.y}; });
  DirichletParams p;
  p.tol = 1e-10;
  const DirichletResult r = solve_dirichlet(d, std::make_shared<EuclideanPlane>(), bd, p);
  const auto oracle = direct_solve(*d, bd);
  double gap = 0.0;
  for (std::size_t v = 0; v < d->vertex_count(); ++v) gap = std::max(gap, (as_vec(r.map.assignment[v]) - oracle[v]).norm());
  EXPECT_LE(gap, 1e-8);
  for (std::size_t i = 0; i < d->boundary().size(); ++i) {
    EXPECT_EQ(as_vec(r.map.assignment[d->boundary()[i]]), as_vec(bd[i]));
  }
}

TEST(Dirichlet, ConstantBoundaryIsSolvedInOneSweep) {
  auto d = disc(0.1);
  const std::vector<TargetPoint> bd(d->boundary().size(), Vec2{0.2, -0.4});
  const DirichletResult r = solve_dirichlet(d, std::make_shared<EuclideanPlane>(), bd);
  EXPECT_EQ(r.sweeps, 1u);
  for (const auto& p : r.map.assignment) EXPECT_EQ(as_vec(p), (Vec2{0.2, -0.4}));
  EXPECT_EQ(r.energy.energy, 0.0);
}

TEST(Dirichlet, EnergyHistoryNonincreasing) {
  auto d = disc(0.08);
  const auto bd = boundary_images(*d, [](Vec2 z) { return Vec2{z.x * 0.6, z.y * 0.3 + 0.2 * z.x * z.x}; });
  for (auto target : {std::shared_ptr<const TargetSpace>(std::make_shared<EuclideanPlane>()),
                      std::shared_ptr<const TargetSpace>(std::make_shared<HyperbolicPlane>())}) {
    for (SweepKind kind : {SweepKind::gauss_seidel, SweepKind::jacobi}) {
      DirichletParams p;
      p.sweep = kind;
      p.tol = 1e-9;
      const DirichletResult r = solve_dirichlet(d, target, bd, p);
      ASSERT_EQ(r.energy.history.size(), r.sweeps + 1);
      for (std::size_t i = 1; i < r.energy.history.size(); ++i) {
        ASSERT_LE(r.energy.history[i], r.energy.history[i - 1] + 1e-12 * (1.0 + r.energy.history[i - 1]))
            << target->kind() << " " << to_string(kind) << " sweep " << i;
      }
    }
  }
}

TEST(Dirichlet, UniqueUpToTolerance) {
  auto d = disc(0.08);
  const auto bd = boundary_images(*d, [](Vec2 z) { return z * 0.7; });
  auto hyp = std::make_shared<HyperbolicPlane>();
  DirichletParams a;
  a.tol = 1e-9;
  const DirichletResult ra = solve_dirichlet(d, hyp, bd, a);
  DirichletParams b = a;
  b.sweep = SweepKind::jacobi;
  b.shuffle = true;
  b.seed = 17;
  Rng rng(5);
  std::vector<TargetPoint> init(d->vertex_count());
  for (auto& p : init) p = Vec2{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
  b.initial = init;
  const DirichletResult rb = solve_dirichlet(d, hyp, bd, b);
  double gap = 0.0;
  for (std::size_t v = 0; v < d->vertex_count(); ++v) gap = std::max(gap, hyp->distance(ra.map.assignment[v], rb.map.assignment[v]));
  EXPECT_LE(gap, 10.0 * a.tol);
}

TEST(Dirichlet, MaximumPrincipleInThePlane) {
  auto d = disc(0.08);
  // Boundary images on a triangle: every interior image must stay inside it.
  const Vec2 c[3] = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  const auto bd = boundary_images(*d, [&](Vec2 z) {
    double t = z.arg() / (2.0 * kPi);
    if (t < 0.0) t += 1.0;
    const int k = std::min(2, static_cast<int>(3.0 * t));
    return lerp(c[k], c[(k + 1) % 3], 3.0 * t - k);
  });
  const DirichletResult r = solve_dirichlet(d, std::make_shared<EuclideanPlane>(), bd);
  for (const auto& p : r.map.assignment) {
    const Vec2 z = as_vec(p);
    EXPECT_GE(z.x, -1e-9);
    EXPECT_GE(z.y, -1e-9);
    EXPECT_LE(z.x + z.y, 1.0 + 1e-9);
  }
}

TEST(Dirichlet, TripodArcsStayInTheSubtreeAndBeatCompetitors) {
  auto d = disc(0.1);
  auto t = tripod(0.05);
  const LengthSpace& ts = t->space();
  const std::size_t anchors[3] = {tree_vertex(ts, 0, 0.8), tree_vertex(ts, 1, 0.8), tree_vertex(ts, 2, 0.8)};
  const std::size_t nb = d->boundary().size();
  std::vector<TargetPoint> bd;
  for (std::size_t i = 0; i < nb; ++i) bd.push_back(t->vertex_point(anchors[i * 3 / nb]));
  DirichletParams p;
  p.tol = 1e-9;
  const DirichletResult r = solve_dirichlet(d, t, bd, p);
  // Convex hull of the three anchors: points at radius <= 0.8 on the legs.
  for (const auto& q : r.map.assignment) {
    const GraphPoint g = as_graph_point(q);
    const Vec2 ca = ts.coord(g.a), cb = ts.coord(g.b);
    EXPECT_LE(std::max(ca.y, cb.y), 0.8 + 1e-9);
  }
  const double e = r.energy.energy;
  Rng rng(6);
  for (int k = 0; k < 10; ++k) {
    SpaceMap competitor = r.map;
    for (std::size_t v = 0; v < d->vertex_count(); ++v) {
      if (d->is_boundary(v)) continue;
      competitor.assignment[v] = t->vertex_point(tree_vertex(ts, static_cast<double>(rng.index(3)), rng.uniform(0.0, 0.8)));
    }
    EXPECT_LE(e, ks_energy(competitor).energy);
  }
}

TEST(Dirichlet, Errors) {
  auto d = disc(0.1);
  EXPECT_THROW(solve_dirichlet(d, std::make_shared<EuclideanPlane>(), std::vector<TargetPoint>(3, Vec2{})),
               InvalidInput);
  const auto bd = boundary_images(*d, [](Vec2 z) { return Vec2{z.x * z.x, z.y}; });
  DirichletParams p;
  p.max_sweeps = 2;
  p.tol = 1e-14;
  EXPECT_THROW(solve_dirichlet(d, std::make_shared<EuclideanPlane>(), bd, p), ConvergenceFailure);
  const std::vector<TargetPoint> outside(d->boundary().size(), Vec2{2.0, 0.0});
  EXPECT_THROW(solve_dirichlet(d, std::make_shared<HyperbolicPlane>(), outside), InvalidInput);
}

TEST(Fuglede, AffineConvexAndConcave) {
  const double h = 0.05;
  auto d = disc(h);
  const auto bd = boundary_images(*d, [](Vec2 z) { return Vec2{z.x * z.x - z.y * z.y, 2.0 * z.x * z.y} * 0.8; });
  DirichletParams p;
  p.tol = 1e-10;
  const DirichletResult r = solve_dirichlet(d, std::make_shared<EuclideanPlane>(), bd, p);
  const PullbackReport aff = pullback_subharmonicity_test(r.map, FieldRule::affine(1.0, -2.0, 0.5), 1e-8);
  EXPECT_TRUE(aff.pass);
  EXPECT_GE(aff.min_laplacian, -1e-8);
  for (const FieldRule& rule : {FieldRule::norm_squared(), FieldRule::distance_to_point({0.2, 0.1}),
                                FieldRule::distance_to_point({0.2, 0.1}, 2.0), FieldRule::power_radial(1.5)}) {
    const PullbackReport pr = pullback_subharmonicity_test(r.map, rule, 5.0 * h);
    EXPECT_TRUE(pr.convex);
    EXPECT_TRUE(pr.pass) << to_string(rule.kind);
  }
  const PullbackReport concave = pullback_subharmonicity_test(identity_map(d), FieldRule::norm_squared(-1.0), 5.0 * h);
  EXPECT_FALSE(concave.convex);
  EXPECT_FALSE(concave.pass);
  // -4 in the interior; boundary stencils only make it more negative.
  EXPECT_LE(concave.min_laplacian, -4.0 + 0.2);
}

TEST(Fuglede, SquaredDistanceThroughHyperbolicHarmonicMap) {
  const double h = 0.08;
  auto d = disc(h);
  const auto bd = boundary_images(*d, [](Vec2 z) { return Vec2{0.7 * z.x, 0.4 * z.y + 0.2 * z.x * z.y}; });
  auto hyp = std::make_shared<HyperbolicPlane>();
  const DirichletResult r = solve_dirichlet(d, hyp, bd);
  const PullbackReport pr = pullback_subharmonicity_test(r.map, FieldRule::distance_to_point({0.3, -0.2}, 2.0), 5.0 * h);
  EXPECT_TRUE(pr.convex);
  EXPECT_TRUE(pr.pass) << pr.min_laplacian;
  EXPECT_TRUE(convex_on_target(*hyp, FieldRule::distance_to_point({0.0, 0.0})));
  EXPECT_FALSE(convex_on_target(*hyp, FieldRule::norm_squared()));
}

TEST(Plateau, UnitCircleRecoversTheIdentity) {
  auto d = disc(0.08);
  std::vector<TargetPoint> gamma;
  const std::size_t m = 3 * d->boundary().size();
  for (std::size_t i = 0; i < m; ++i) {
    const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(m);
    gamma.emplace_back(Vec2{std::cos(a), std::sin(a)});
  }
  const PlateauResult r = solve_plateau(d, std::make_shared<EuclideanPlane>(), gamma);
  const double e_id = ks_energy(identity_map(d)).energy;
  EXPECT_NEAR(r.energy.energy, e_id, 0.03 * e_id);
  EXPECT_TRUE(r.monotone);
  const auto uniform = uniform_assignment(d->boundary().size(), m);
  for (std::size_t i = 0; i < uniform.size(); ++i) {
    const std::size_t diff = (r.boundary_assignment[i] + m - uniform[i]) % m;
    EXPECT_LE(std::min(diff, m - diff), 2u);
  }
  for (std::size_t k = 1; k < r.energy.history.size(); ++k) EXPECT_LE(r.energy.history[k], r.energy.history[k - 1] + 1e-12);

  const ConformalFactorReport lam = conformal_factor_estimate(r.map, 5.0 * d->chart_spacing());
  EXPECT_TRUE(lam.consistent) << lam.consistency_gap;
  EXPECT_LE(lam.consistency_gap, 0.05);
}

TEST(Plateau, EllipseBeatsTheUniformParametrization) {
  auto d = disc(0.1);
  std::vector<TargetPoint> gamma;
  const std::size_t m = 3 * d->boundary().size();
  for (std::size_t i = 0; i < m; ++i) {
    const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(m);
    gamma.emplace_back(Vec2{0.8 * std::cos(a), 0.4 * std::sin(a)});
  }
  auto plane = std::make_shared<EuclideanPlane>();
  std::vector<TargetPoint> fixed;
  for (std::size_t k : uniform_assignment(d->boundary().size(), m)) fixed.push_back(gamma[k]);
  const double e_uniform = solve_dirichlet(d, plane, fixed).energy.energy;
  const PlateauResult r = solve_plateau(d, plane, gamma);
  EXPECT_LT(r.energy.energy, e_uniform);
  EXPECT_NEAR(r.energy.history.front(), e_uniform, 1e-6 * e_uniform);
  EXPECT_TRUE(r.monotone);
  // Pinned vertices never move.
  const auto uniform = uniform_assignment(d->boundary().size(), m);
  for (std::size_t pin : r.pinned) EXPECT_EQ(r.boundary_assignment[pin], uniform[pin]);
}

TEST(Plateau, RejectsBadCurves) {
  auto d = disc(0.2);
  const std::size_t m = 3 * d->boundary().size();
  std::vector<TargetPoint> repeated;
  for (std::size_t i = 0; i < m; ++i) repeated.emplace_back(Vec2{std::cos(0.1 * i), 0.0 * i});
  repeated.back() = repeated.front();
  EXPECT_THROW(solve_plateau(d, std::make_shared<EuclideanPlane>(), repeated), InvalidInput);
  std::vector<TargetPoint> eight;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(m);
    eight.emplace_back(Vec2{std::sin(a), std::sin(a) * std::cos(a)});
  }
  EXPECT_THROW(solve_plateau(d, std::make_shared<EuclideanPlane>(), eight), InvalidInput);
  std::vector<TargetPoint> few{Vec2{1, 0}, Vec2{0, 1}, Vec2{-1, 0}};
  EXPECT_THROW(solve_plateau(d, std::make_shared<EuclideanPlane>(), few), InvalidInput);
  auto t = tripod(0.1);
  std::vector<TargetPoint> tree_curve;
  for (std::size_t i = 0; i < m; ++i) tree_curve.push_back(t->vertex_point(i % t->space().vertex_count()));
  EXPECT_THROW(solve_plateau(d, t, tree_curve), InvalidInput);
}

TEST(ConformalFactor, IdentitySquareAndConstant) {
  const double h = 0.05;
  auto d = disc(h);
  const ConformalFactorReport id = conformal_factor_estimate(identity_map(d), 5.0 * h);
  for (double l : id.lambda.values) EXPECT_NEAR(l, 1.0, 0.02);
  EXPECT_TRUE(id.log_check.pass);

  SpaceMap sq = identity_map(d);
  for (auto& p : sq.assignment) {
    const Vec2 z = as_vec(p);
    p = Vec2{z.x * z.x - z.y * z.y, 2.0 * z.x * z.y};
  }
  const ConformalFactorReport lam = conformal_factor_estimate(sq, 5.0 * h);
  for (std::size_t v = 0; v < d->vertex_count(); ++v) {
    const double r = d->coord(v).norm();
    if (r < 0.2) continue;
    EXPECT_NEAR(lam.lambda[v], 2.0 * r, 0.05 * 2.0 * r) << "r=" << r;
  }
  EXPECT_TRUE(lam.log_check.pass) << lam.log_check.min_laplacian;

  SpaceMap constant = identity_map(d);
  std::fill(constant.assignment.begin(), constant.assignment.end(), TargetPoint{Vec2{0.1, 0.1}});
  const ConformalFactorReport zero = conformal_factor_estimate(constant, 5.0 * h);
  for (double l : zero.lambda.values) EXPECT_EQ(l, 0.0);
  EXPECT_TRUE(zero.log_check.degenerate);
  EXPECT_EQ(zero.log_check.tested, 0u);
}

TEST(IntrinsicPullback, UnitFactorModulusAndErrors) {
  auto d = disc(0.08);
  const PullbackSpace one = intrinsic_pullback(*d, field_from_values(std::vector<double>(d->vertex_count(), 1.0)));
  for (std::size_t e = 0; e < d->edge_count(); ++e) EXPECT_NEAR(one.space.edge(e).weight, d->edge(e).weight, 1e-15);
  EXPECT_TRUE(one.floored_edges.empty());

  std::vector<double> modulus(d->vertex_count());
  for (std::size_t v = 0; v < modulus.size(); ++v) modulus[v] = d->coord(v).norm();
  const PullbackSpace cone = intrinsic_pullback(*d, field_from_values(modulus));
  ScanParams sp;
  sp.triangles = 300;
  sp.seed = 3;
  EXPECT_TRUE(cat0_scan(cone.space, sp).pass);

  std::vector<double> zeros(d->vertex_count(), 0.0);
  for (std::size_t v = 0; v < zeros.size(); ++v)
    if (d->coord(v).norm() > 0.5) zeros[v] = 1.0;
  const PullbackSpace floored = intrinsic_pullback(*d, field_from_values(zeros));
  EXPECT_FALSE(floored.floored_edges.empty());
  for (std::size_t e : floored.floored_edges) {
    EXPECT_NEAR(floored.space.edge(e).weight, floored.epsilon * d->edge(e).weight, 1e-20);
  }
  modulus[0] = -1.0;
  EXPECT_THROW(intrinsic_pullback(*d, field_from_values(modulus)), InvalidInput);
}

TEST(Assignment, UniformIsCyclicallyIncreasing) {
  const auto a = uniform_assignment(10, 30);
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], 3 * i);
  EXPECT_THROW(uniform_assignment(10, 5), InvalidInput);
}
