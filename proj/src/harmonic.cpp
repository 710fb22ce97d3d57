#include "cat0lab/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "cat0lab/conformal.hpp"
#include "cat0lab/errors.hpp"
#include "cat0lab/mesh_geometry.hpp"
#include "cat0lab/model_spaces.hpp"
#include "cat0lab/rng.hpp"

namespace cat0lab {

namespace {

void check_domain(const LengthSpace& d) {
  if (!d.has_coords() || !d.has_faces() || !d.has_boundary()) {
    throw InvalidInput("domain must be a disc mesh with coordinates, faces and a boundary cycle");
  }
  if (!d.oracle() || d.oracle()->kind != OracleKind::euclidean) {
    throw InvalidInput("domain must be a flat disc (euclidean oracle tag)");
  }
}

bool is_plane(const TargetSpace& t) { return dynamic_cast<const EuclideanPlane*>(&t) != nullptr; }
bool is_hyperbolic(const TargetSpace& t) { return dynamic_cast<const HyperbolicPlane*>(&t) != nullptr; }

// Cotangent weights of the flat domain. Boundary sides opposite an obtuse
// angle have negative weights; they are clamped to zero so that every term
// of the energy is a squared distance with a non-negative coefficient.
struct Stencil {
  explicit Stencil(const LengthSpace& d) : geo(d, MeshGeometry::Lengths::chart), ring(d.vertex_count()) {
    for (MeshGeometry::CotEdge e : geo.cot_edges()) {
      if (e.weight < 0.0) {
        if (!(d.is_boundary(e.a) && d.is_boundary(e.b)) && e.weight < -1e-9) {
          throw InvalidInput("domain triangulation is not Delaunay at edge " + std::to_string(e.a) + "-" +
                             std::to_string(e.b));
        }
        e.weight = 0.0;
      }
      edges.push_back(e);
      ring[e.a].push_back({e.b, e.weight});
      ring[e.b].push_back({e.a, e.weight});
    }
    for (std::size_t v = 0; v < d.vertex_count(); ++v) {
      if (!d.is_boundary(v)) interior.push_back(v);
    }
  }

  double local(const TargetSpace& t, const std::vector<TargetPoint>& u, std::size_t v, const TargetPoint& p) const {
    double sum = 0.0;
    for (const auto& nb : ring[v]) {
      const double d = t.distance(p, u[nb.vertex]);
      sum += nb.weight * d * d;
    }
    return sum;
  }

  double energy(const TargetSpace& t, const std::vector<TargetPoint>& u) const {
    double sum = 0.0;
    for (const auto& e : edges) {
      if (e.weight == 0.0) continue;
      const double d = t.distance(u[e.a], u[e.b]);
      sum += e.weight * d * d;
    }
    return sum;
  }

  MeshGeometry geo;
  std::vector<std::vector<MeshGeometry::CotNeighbor>> ring;
  std::vector<MeshGeometry::CotEdge> edges;
  std::vector<std::size_t> interior;
};

EnergyReport energy_report(const Stencil& st, const TargetSpace& t, const std::vector<TargetPoint>& u) {
  EnergyReport r;
  r.density.assign(u.size(), 0.0);
  for (const auto& e : st.edges) {
    const double d = t.distance(u[e.a], u[e.b]);
    const double term = e.weight * d * d;
    r.energy += term;
    r.density[e.a] += 0.5 * term;
    r.density[e.b] += 0.5 * term;
  }
  for (std::size_t v = 0; v < u.size(); ++v) {
    const double area = st.geo.barycentric_area(v);
    r.density[v] = area > 0.0 ? r.density[v] / area : 0.0;
  }
  return r;
}

bool energy_increased(double before, double after) { return after > before + 1e-12 * (1.0 + std::abs(before)); }

// Tracks per-sweep displacements and decides convergence from the
// displacement and the geometric contraction over a window of sweeps.
class ConvergenceMonitor {
 public:
  explicit ConvergenceMonitor(double tol) : tol_(tol) {}

  void restart() { recent_.clear(); }

  bool update(double disp) {
    recent_.push_back(disp);
    if (recent_.size() > kWindow + 1) recent_.pop_front();
    if (disp == 0.0) {
      rate_ = 0.0;
      return true;
    }
    if (recent_.size() <= kWindow || recent_.front() == 0.0) return false;
    rate_ = std::pow(disp / recent_.front(), 1.0 / static_cast<double>(kWindow));
    if (!(rate_ < 1.0)) return false;
    return disp <= tol_ && disp * rate_ / (1.0 - rate_) <= tol_;
  }

  double rate() const { return rate_; }

 private:
  static constexpr std::size_t kWindow = 8;
  double tol_;
  double rate_ = 1.0;
  std::deque<double> recent_;
};

}  // namespace

std::string to_string(SweepKind kind) { return kind == SweepKind::gauss_seidel ? "gauss-seidel" : "jacobi"; }

SweepKind sweep_kind_from_string(const std::string& name) {
  if (name == "gauss-seidel") return SweepKind::gauss_seidel;
  if (name == "jacobi") return SweepKind::jacobi;
  throw InvalidInput("unknown sweep kind: " + name);
}

EnergyReport ks_energy(const SpaceMap& map) {
  if (!map.domain || !map.target) throw InvalidInput("map without domain or target");
  check_domain(*map.domain);
  if (map.assignment.size() != map.domain->vertex_count()) throw InvalidInput("map assignment size mismatch");
  Stencil st(*map.domain);
  EnergyReport r = energy_report(st, *map.target, map.assignment);
  r.history = {r.energy};
  return r;
}

SpaceMap identity_map(std::shared_ptr<const LengthSpace> domain) {
  check_domain(*domain);
  SpaceMap m;
  m.target = std::make_shared<EuclideanPlane>();
  m.assignment.assign(domain->coords().begin(), domain->coords().end());
  m.domain = std::move(domain);
  return m;
}

DirichletResult solve_dirichlet(std::shared_ptr<const LengthSpace> domain, std::shared_ptr<const TargetSpace> target,
                                std::span<const TargetPoint> boundary_data, const DirichletParams& params) {
  if (!domain || !target) throw InvalidInput("solve_dirichlet needs a domain and a target");
  check_domain(*domain);
  const LengthSpace& d = *domain;
  const TargetSpace& t = *target;
  const auto& boundary = d.boundary();
  if (boundary_data.size() != boundary.size()) {
    throw InvalidInput("boundary data has " + std::to_string(boundary_data.size()) + " points for " +
                       std::to_string(boundary.size()) + " boundary vertices");
  }
  if (!(params.tol > 0.0)) throw InvalidInput("tolerance must be positive");

  const Stencil st(d);
  const std::size_t n = d.vertex_count();
  std::vector<TargetPoint> u(n);
  if (params.initial) {
    if (params.initial->size() != n) throw InvalidInput("initial map size mismatch");
    for (std::size_t v = 0; v < n; ++v) {
      t.validate((*params.initial)[v]);
      u[v] = (*params.initial)[v];
    }
  } else {
    const std::vector<double> ones(boundary_data.size(), 1.0);
    const TargetPoint start = t.barycenter(boundary_data, ones);
    std::fill(u.begin(), u.end(), start);
  }
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    t.validate(boundary_data[i]);
    u[boundary[i]] = boundary_data[i];
  }

  std::vector<std::size_t> order = st.interior;
  if (params.shuffle) {
    Rng rng(params.seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  }

  const bool planar = is_plane(t);
  const bool extendable = planar || is_hyperbolic(t);
  const bool discrete = dynamic_cast<const MeshTarget*>(&t) != nullptr;
  const bool gauss_seidel = params.sweep == SweepKind::gauss_seidel;
  double omega = 1.0;
  constexpr std::size_t kRelaxAfter = 40;

  std::vector<TargetPoint> pts;
  std::vector<double> ws;
  auto gather = [&](std::size_t v, const std::vector<TargetPoint>& state) {
    pts.clear();
    ws.clear();
    for (const auto& nb : st.ring[v]) {
      if (nb.weight <= 0.0) continue;
      pts.push_back(state[nb.vertex]);
      ws.push_back(nb.weight);
    }
    return !ws.empty();
  };

  auto gs_sweep = [&]() {
    double disp = 0.0;
    for (std::size_t v : order) {
      if (!gather(v, u)) continue;
      if (planar) {
        const Vec2 old = std::get<Vec2>(u[v]);
        const Vec2 next = old + (as_vec(t.barycenter(pts, ws)) - old) * omega;
        disp = std::max(disp, (next - old).norm());
        u[v] = next;
        continue;
      }
      // Accept a move only if it lowers the local energy, so every sweep is
      // monotone even with inexact barycenters.
      TargetPoint cand = t.barycenter(pts, ws, &u[v]);
      double l_cand = st.local(t, u, v, cand);
      if (omega != 1.0) {
        TargetPoint ext = t.geodesic_point(u[v], cand, omega);
        const double l_ext = st.local(t, u, v, ext);
        if (l_ext <= l_cand) {
          cand = std::move(ext);
          l_cand = l_ext;
        }
      }
      // Discrete targets need a strict decrease to rule out cycling between
      // equal-energy vertices; continuous targets tolerate rounding, since the
      // gain of a move of size delta is only O(delta^2).
      const double l_old = st.local(t, u, v, u[v]);
      if (discrete ? !(l_cand < l_old) : l_cand > l_old * (1.0 + 1e-14)) continue;
      disp = std::max(disp, t.distance(u[v], cand));
      u[v] = std::move(cand);
    }
    return disp;
  };

  double theta = 1.0;
  std::vector<TargetPoint> bary(n), trial;
  double energy = st.energy(t, u);
  auto jacobi_sweep = [&]() {
    for (std::size_t v : order) bary[v] = gather(v, u) ? t.barycenter(pts, ws, &u[v]) : u[v];
    theta = std::min(1.0, 2.0 * theta);
    while (theta > 1e-10) {
      trial = u;
      for (std::size_t v : order) trial[v] = theta == 1.0 ? bary[v] : t.geodesic_point(u[v], bary[v], theta);
      if (st.energy(t, trial) <= energy * (1.0 + 1e-13)) {
        double disp = 0.0;
        for (std::size_t v : order) disp = std::max(disp, t.distance(u[v], trial[v]));
        u.swap(trial);
        return disp;
      }
      theta *= 0.5;
    }
    return 0.0;
  };

  DirichletResult result;
  result.energy.history.push_back(energy);
  ConvergenceMonitor monitor(params.tol);
  bool converged = false;
  double last_disp = 0.0;
  std::vector<double> disps;
  std::size_t sweep = 0;
  while (sweep < params.max_sweeps) {
    ++sweep;
    last_disp = gauss_seidel ? gs_sweep() : jacobi_sweep();
    const double next = st.energy(t, u);
    if (energy_increased(energy, next)) {
      throw std::logic_error("energy increased during a Dirichlet sweep");
    }
    energy = next;
    result.energy.history.push_back(energy);
    if (monitor.update(last_disp)) {
      converged = true;
      break;
    }
    disps.push_back(last_disp);
    if (gauss_seidel && extendable && params.over_relax && sweep == kRelaxAfter && disps[sweep - 9] > 0.0) {
      // Plain Gauss-Seidel contracts like rho_J^2; the optimal SOR parameter
      // follows from it.
      const double r = std::min(std::pow(last_disp / disps[sweep - 9], 1.0 / 8.0), 0.9999);
      omega = std::min(1.95, 2.0 / (1.0 + std::sqrt(1.0 - r)));
      monitor.restart();
    }
  }
  if (!converged) {
    throw ConvergenceFailure("solve_dirichlet: no convergence after " + std::to_string(sweep) +
                             " sweeps (last displacement " + std::to_string(last_disp) + ")");
  }

  result.sweeps = sweep;
  result.displacement = last_disp;
  result.contraction = monitor.rate();
  result.relaxation = omega;

  std::vector<bool> near(n, false);
  for (std::size_t b : boundary) {
    near[b] = true;
    for (const auto& nb : st.ring[b]) near[nb.vertex] = true;
  }
  for (const auto& e : st.edges) {
    if (near[e.a] || near[e.b]) continue;
    const double q = t.distance(u[e.a], u[e.b]) / (d.coord(e.a) - d.coord(e.b)).norm();
    result.interior_lipschitz = std::max(result.interior_lipschitz, q);
  }

  EnergyReport rep = energy_report(st, t, u);
  rep.history = std::move(result.energy.history);
  result.energy = std::move(rep);
  result.map.domain = std::move(domain);
  result.map.target = std::move(target);
  result.map.assignment = std::move(u);
  return result;
}

// Field rules on targets ------------------------------------------------------

namespace {

std::vector<double> rule_values(const TargetSpace& target, const FieldRule& r,
                                std::span<const TargetPoint> points) {
  std::vector<double> out(points.size());
  const double s = r.scale;
  const auto shape = [&](double dist) { return s * (r.power == 1.0 ? dist : std::pow(dist, r.power)); };

  if (is_plane(target) || is_hyperbolic(target)) {
    const OracleTag tag{is_plane(target) ? OracleKind::euclidean : OracleKind::hyperbolic};
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Vec2 z = as_vec(points[i]);
      switch (r.kind) {
        case RuleKind::constant: out[i] = s * r.c; break;
        case RuleKind::affine: out[i] = s * (r.a * z.x + r.b * z.y + r.c); break;
        case RuleKind::norm_squared: out[i] = s * z.norm2(); break;
        case RuleKind::power_radial: out[i] = s * std::pow(z.norm(), r.alpha); break;
        case RuleKind::distance_to_point:
          if (!r.point) throw InvalidInput("distance-to-point on a planar target needs a point");
          out[i] = shape(exact_chart_distance(tag, z, *r.point));
          break;
        case RuleKind::distance_to_set:
          throw InvalidInput("distance-to-set is not defined on planar targets");
      }
    }
    return out;
  }

  if (const auto* tree = dynamic_cast<const TreeTarget*>(&target)) {
    std::vector<std::size_t> set = r.set;
    if (r.kind == RuleKind::distance_to_point) {
      if (!r.vertex) throw InvalidInput("distance-to-point on a tree target needs a vertex");
      set = {*r.vertex};
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      switch (r.kind) {
        case RuleKind::constant: out[i] = s * r.c; break;
        case RuleKind::distance_to_point:
        case RuleKind::distance_to_set: {
          double best = kInfinity;
          for (std::size_t v : set) best = std::min(best, tree->distance(points[i], tree->vertex_point(v)));
          out[i] = shape(best);
          break;
        }
        default:
          throw InvalidInput("field rule " + to_string(r.kind) + " is not defined on tree targets");
      }
    }
    return out;
  }

  if (const auto* mesh = dynamic_cast<const MeshTarget*>(&target)) {
    const ScalarField f = make_field(mesh->space(), r);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const GraphPoint& g = as_graph_point(points[i]);
      out[i] = g.is_vertex() ? f[g.a] : f[g.a] + (f[g.b] - f[g.a]) * g.t / mesh->distance(GraphPoint{g.a, g.a, 0.0},
                                                                                          GraphPoint{g.b, g.b, 0.0});
    }
    return out;
  }
  throw InvalidInput("unsupported target kind " + target.kind());
}

}  // namespace

double evaluate_on_target(const TargetSpace& target, const FieldRule& rule, const TargetPoint& p) {
  return rule_values(target, rule, std::span<const TargetPoint>(&p, 1))[0];
}

bool convex_on_target(const TargetSpace& target, const FieldRule& r) {
  const bool nonneg = r.scale >= 0.0;
  if (r.kind == RuleKind::constant) return true;
  if (is_plane(target)) {
    switch (r.kind) {
      case RuleKind::affine: return true;
      case RuleKind::norm_squared: return nonneg;
      case RuleKind::distance_to_point: return nonneg && r.power >= 1.0;
      case RuleKind::power_radial: return nonneg && r.alpha >= 1.0;
      default: return false;
    }
  }
  if (is_hyperbolic(target) || dynamic_cast<const TreeTarget*>(&target)) {
    // Distance to a point is convex in every CAT(0) space; other rules are
    // not known to be.
    return r.kind == RuleKind::distance_to_point && nonneg && r.power >= 1.0;
  }
  if (const auto* mesh = dynamic_cast<const MeshTarget*>(&target)) {
    const LengthSpace& x = mesh->space();
    return convexity_check(x, make_field(x, r), 200, 3.0 * x.nominal_spacing(), 0).pass;
  }
  return false;
}

PullbackReport pullback_subharmonicity_test(const SpaceMap& map, const FieldRule& rule, double tol) {
  if (!map.domain || !map.target) throw InvalidInput("map without domain or target");
  check_domain(*map.domain);
  PullbackReport r;
  r.rule = rule;
  r.tol = tol;
  r.convex = convex_on_target(*map.target, rule);
  const std::vector<double> values = rule_values(*map.target, rule, map.assignment);
  const MeshGeometry geo(*map.domain, MeshGeometry::Lengths::chart);
  const InteriorValues lap = discrete_laplacian(geo, values);
  r.tested = lap.vertices.size();
  for (std::size_t i = 0; i < lap.vertices.size(); ++i) {
    if (lap.values[i] < r.min_laplacian) {
      r.min_laplacian = lap.values[i];
      r.worst_vertex = lap.vertices[i];
    }
    if (lap.values[i] < -tol) ++r.violation_count;
  }
  r.pass = r.violation_count == 0;
  return r;
}

// Plateau -------------------------------------------------------------------------

std::vector<std::size_t> uniform_assignment(std::size_t boundary_count, std::size_t samples) {
  if (samples < boundary_count) {
    throw InvalidInput("need at least one curve sample per boundary vertex (" + std::to_string(samples) + " < " +
                       std::to_string(boundary_count) + ")");
  }
  std::vector<std::size_t> a(boundary_count);
  for (std::size_t i = 0; i < boundary_count; ++i) a[i] = i * samples / boundary_count;
  return a;
}

namespace {

// Any contact between two segments, touching and collinear overlap
// included; callers only pass non-adjacent segments of the polygon.
bool segments_touch(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const double scale = std::max({(p2 - p1).norm2(), (q2 - q1).norm2(), 1e-300});
  auto side = [&](Vec2 a, Vec2 b, Vec2 c) {
    const double d = (b - a).cross(c - a);
    return std::abs(d) <= 1e-12 * scale ? 0 : (d > 0 ? 1 : -1);
  };
  auto within = [](Vec2 a, Vec2 b, Vec2 c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  const int d1 = side(p1, p2, q1), d2 = side(p1, p2, q2), d3 = side(q1, q2, p1), d4 = side(q1, q2, p2);
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  return (d1 == 0 && within(p1, p2, q1)) || (d2 == 0 && within(p1, p2, q2)) || (d3 == 0 && within(q1, q2, p1)) ||
         (d4 == 0 && within(q1, q2, p2));
}

void check_curve(const TargetSpace& t, std::span<const TargetPoint> curve) {
  if (dynamic_cast<const TreeTarget*>(&t)) throw InvalidInput("a tree contains no Jordan curve");
  const std::size_t m = curve.size();
  for (const auto& p : curve) t.validate(p);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (t.distance(curve[i], curve[j]) < 1e-12) {
        throw InvalidInput("curve samples " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      }
    }
  }
  if (!std::holds_alternative<Vec2>(curve[0])) return;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;
      if (segments_touch(as_vec(curve[i]), as_vec(curve[i + 1]), as_vec(curve[j]), as_vec(curve[(j + 1) % m]))) {
        throw InvalidInput("curve is not simple: segments " + std::to_string(i) + " and " + std::to_string(j) +
                           " touch");
      }
    }
  }
}

bool cyclically_monotone(const std::vector<std::size_t>& a, std::size_t m) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t step = (a[(i + 1) % a.size()] + m - a[i]) % m;
    if (step == 0) return false;
    total += step;
  }
  return total == m;
}

}  // namespace

PlateauResult solve_plateau(std::shared_ptr<const LengthSpace> domain, std::shared_ptr<const TargetSpace> target,
                            std::span<const TargetPoint> curve, const PlateauParams& params) {
  if (!domain || !target) throw InvalidInput("solve_plateau needs a domain and a target");
  check_domain(*domain);
  const auto& boundary = domain->boundary();
  const std::size_t nb = boundary.size(), m = curve.size();
  if (m < nb) {
    throw InvalidInput("curve has " + std::to_string(m) + " samples, fewer than the " + std::to_string(nb) +
                       " boundary vertices");
  }
  check_curve(*target, curve);
  const TargetSpace& t = *target;
  const Stencil st(*domain);

  PlateauResult result;
  std::vector<std::size_t> a = uniform_assignment(nb, m);
  result.pinned = {0, nb / 3, 2 * nb / 3};
  std::vector<bool> pinned(nb, false);
  for (std::size_t i : result.pinned) pinned[i] = true;

  auto data = [&] {
    std::vector<TargetPoint> bd(nb);
    for (std::size_t i = 0; i < nb; ++i) bd[i] = curve[a[i]];
    return bd;
  };

  std::vector<TargetPoint> bd = data();
  DirichletResult res = solve_dirichlet(domain, target, bd, params.dirichlet);
  double energy = res.energy.energy;
  result.energy.history.push_back(energy);
  std::vector<TargetPoint> u = std::move(res.map.assignment);
  bool converged = false;

  for (std::size_t outer = 1; outer <= params.max_outer; ++outer) {
    result.outer_iterations = outer;
    // Single-sample moves of boundary vertices while they lower the energy.
    bool moved = true;
    std::size_t passes = 0;
    while (moved && passes++ < 10 * m) {
      moved = false;
      for (std::size_t i = 0; i < nb; ++i) {
        if (pinned[i]) continue;
        const std::size_t v = boundary[i];
        const std::size_t next_gap = (a[(i + 1) % nb] + m - a[i]) % m;
        const std::size_t prev_gap = (a[i] + m - a[(i + nb - 1) % nb]) % m;
        double best = st.local(t, u, v, u[v]);
        std::optional<std::size_t> choice;
        if (next_gap >= 2) {
          const std::size_t c = (a[i] + 1) % m;
          const double l = st.local(t, u, v, curve[c]);
          if (l < best) best = l, choice = c;
        }
        if (prev_gap >= 2) {
          const std::size_t c = (a[i] + m - 1) % m;
          const double l = st.local(t, u, v, curve[c]);
          if (l < best) best = l, choice = c;
        }
        if (choice) {
          a[i] = *choice;
          u[v] = curve[*choice];
          ++result.moves;
          moved = true;
        }
      }
    }
    if (!cyclically_monotone(a, m)) result.monotone = false;

    DirichletParams dp = params.dirichlet;
    dp.initial = u;
    bd = data();
    res = solve_dirichlet(domain, target, bd, dp);
    u = std::move(res.map.assignment);
    const double next = res.energy.energy;
    if (energy_increased(energy, next)) throw std::logic_error("energy increased during a Plateau iteration");
    result.energy.history.push_back(next);
    const double gain = energy - next;
    energy = next;
    if (gain < params.tol * energy) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceFailure("solve_plateau: no convergence after " + std::to_string(params.max_outer) +
                             " outer iterations");
  }

  EnergyReport rep = energy_report(st, t, u);
  rep.history = std::move(result.energy.history);
  result.energy = std::move(rep);
  result.boundary_assignment = std::move(a);
  result.map.domain = std::move(domain);
  result.map.target = std::move(target);
  result.map.assignment = std::move(u);
  return result;
}

// Conformal factor and pullback -----------------------------------------------

ConformalFactorReport conformal_factor_estimate(const SpaceMap& map, double log_tol) {
  if (!map.domain || !map.target) throw InvalidInput("map without domain or target");
  const LengthSpace& d = *map.domain;
  check_domain(d);
  const MeshGeometry geo(d, MeshGeometry::Lengths::chart);
  const std::size_t n = d.vertex_count();
  std::vector<double> lam(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto& ring = geo.cot_ring(v);
    if (ring.empty()) continue;
    double sum = 0.0;
    for (const auto& nb : ring) {
      sum += map.target->distance(map.assignment[v], map.assignment[nb.vertex]) /
             (d.coord(v) - d.coord(nb.vertex)).norm();
    }
    lam[v] = sum / static_cast<double>(ring.size());
  }

  ConformalFactorReport r;
  r.lambda = field_from_values(std::move(lam));
  r.log_check = log_subharmonic_check(d, r.lambda, log_tol, 4.0 * d.chart_spacing());
  r.energy = ks_energy(map).energy;
  for (std::size_t v = 0; v < n; ++v) r.energy_from_lambda += 2.0 * r.lambda[v] * r.lambda[v] * geo.barycentric_area(v);
  r.consistency_gap = r.energy > 0.0 ? std::abs(r.energy - r.energy_from_lambda) / r.energy : 0.0;
  r.consistent = r.consistency_gap <= r.consistency_tol;
  return r;
}

PullbackSpace intrinsic_pullback(const LengthSpace& domain, const ScalarField& lambda, double epsilon) {
  check_domain(domain);
  if (lambda.size() != domain.vertex_count()) throw InvalidInput("lambda does not match the domain");
  for (std::size_t v = 0; v < lambda.size(); ++v) {
    if (!(lambda[v] >= 0.0) || !std::isfinite(lambda[v])) {
      throw InvalidInput("lambda must be non-negative (vertex " + std::to_string(v) + ")");
    }
  }
  if (!(epsilon > 0.0)) throw InvalidInput("pullback floor must be positive");
  std::vector<double> w = conformal_weights(domain, lambda, Quadrature::trapezoid);
  PullbackSpace out;
  out.epsilon = epsilon;
  for (std::size_t e = 0; e < w.size(); ++e) {
    const WeightedEdge& edge = domain.edge(e);
    if (lambda[edge.a] == 0.0 && lambda[edge.b] == 0.0) {
      w[e] = epsilon * edge.weight;
      out.floored_edges.push_back(e);
    } else if (!(w[e] > 0.0)) {
      w[e] = epsilon * edge.weight;
      out.floored_edges.push_back(e);
    }
  }
  out.space = domain.with_weights(std::move(w), std::nullopt);
  return out;
}

// Serialization -------------------------------------------------------------------

nlohmann::json to_json(const EnergyReport& r, bool with_density) {
  nlohmann::json j{{"energy", r.energy}, {"history", r.history}};
  if (with_density) j["density"] = r.density;
  return j;
}

nlohmann::json to_json(const PullbackReport& r) {
  return {{"rule", to_json(r.rule)},
          {"convex_on_target", r.convex},
          {"tested", r.tested},
          {"min_laplacian", r.min_laplacian},
          {"worst_vertex", r.worst_vertex ? nlohmann::json(*r.worst_vertex) : nlohmann::json()},
          {"violations", r.violation_count},
          {"tol", r.tol},
          {"pass", r.pass}};
}

nlohmann::json to_json(const ConformalFactorReport& r) {
  std::size_t positive = 0;
  for (double v : r.lambda.values) positive += v > 0.0;
  return {{"vertices", r.lambda.size()},
          {"positive_vertices", positive},
          {"log_subharmonic", to_json(r.log_check)},
          {"energy", r.energy},
          {"energy_from_lambda", r.energy_from_lambda},
          {"consistency_gap", r.consistency_gap},
          {"consistency_tol", r.consistency_tol},
          {"consistent", r.consistent}};
}

nlohmann::json map_to_json(const SpaceMap& map, const std::string& domain_ref, double energy, std::size_t sweeps) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : map.assignment) pts.push_back(map.target->point_to_json(p));
  return {{"domain", domain_ref},
          {"target", map.target->describe()},
          {"assignment", std::move(pts)},
          {"energy", energy},
          {"sweeps", sweeps}};
}

}  // namespace cat0lab
