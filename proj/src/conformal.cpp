#include "cat0lab/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cat0lab/errors.hpp"
#include "cat0lab/mesh_geometry.hpp"
#include "cat0lab/rng.hpp"

namespace cat0lab {

std::string to_string(Quadrature q) { return q == Quadrature::trapezoid ? "trapezoid" : "midpoint"; }

Quadrature quadrature_from_string(const std::string& name) {
  if (name == "trapezoid") return Quadrature::trapezoid;
  if (name == "midpoint") return Quadrature::midpoint;
  throw InvalidInput("unknown quadrature '" + name + "'");
}

namespace {

/// Point location in a triangulated chart through a uniform grid of face
/// bounding boxes.
class FaceLocator {
 public:
  FaceLocator(const LengthSpace& space, double cell) : space_(space), cell_(cell) {
    const auto& c = space.coords();
    lo_ = hi_ = c.front();
    for (Vec2 p : c) {
      lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y)};
      hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y)};
    }
    nx_ = static_cast<std::size_t>((hi_.x - lo_.x) / cell_) + 1;
    ny_ = static_cast<std::size_t>((hi_.y - lo_.y) / cell_) + 1;
    cells_.assign(nx_ * ny_, {});
    const auto& faces = space.faces();
    for (std::size_t f = 0; f < faces.size(); ++f) {
      Vec2 a = c[faces[f][0]], b = a;
      for (std::size_t v : faces[f]) {
        a = {std::min(a.x, c[v].x), std::min(a.y, c[v].y)};
        b = {std::max(b.x, c[v].x), std::max(b.y, c[v].y)};
      }
      auto [i0, j0] = index(a);
      auto [i1, j1] = index(b);
      for (std::size_t i = i0; i <= i1; ++i) {
        for (std::size_t j = j0; j <= j1; ++j) cells_[i * ny_ + j].push_back(static_cast<std::uint32_t>(f));
      }
    }
  }

  /// Linear interpolation of vertex values at p, if p lies in some face.
  std::optional<double> interpolate(Vec2 p, const std::vector<double>& values) const {
    if (p.x < lo_.x || p.y < lo_.y || p.x > hi_.x || p.y > hi_.y) return std::nullopt;
    auto [i, j] = index(p);
    const auto& c = space_.coords();
    for (std::uint32_t f : cells_[i * ny_ + j]) {
      const Face& t = space_.faces()[f];
      const Vec2 a = c[t[0]], b = c[t[1]], d = c[t[2]];
      const double area = (b - a).cross(d - a);
      const double l1 = (p - a).cross(d - a) / area;
      const double l2 = (b - a).cross(p - a) / area;
      const double l0 = 1.0 - l1 - l2;
      constexpr double slack = -1e-12;
      if (l0 >= slack && l1 >= slack && l2 >= slack) {
        return l0 * values[t[0]] + l1 * values[t[1]] + l2 * values[t[2]];
      }
    }
    return std::nullopt;
  }

 private:
  std::pair<std::size_t, std::size_t> index(Vec2 p) const {
    auto clampi = [](double v, std::size_t n) {
      return std::min(static_cast<std::size_t>(std::max(0.0, v)), n - 1);
    };
    return {clampi((p.x - lo_.x) / cell_, nx_), clampi((p.y - lo_.y) / cell_, ny_)};
  }

  const LengthSpace& space_;
  double cell_;
  Vec2 lo_, hi_;
  std::size_t nx_ = 0, ny_ = 0;
  std::vector<std::vector<std::uint32_t>> cells_;
};

std::uint64_t edge_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

std::vector<double> conformal_weights(const LengthSpace& space, const ScalarField& factor, Quadrature quadrature) {
  if (factor.size() != space.vertex_count()) throw InvalidInput("factor does not match the space");
  for (double v : factor.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("conformal factor must be non-negative and finite");
  }
  if (quadrature == Quadrature::midpoint && (!factor.chart_eval || !space.has_coords())) {
    throw InvalidInput("midpoint quadrature needs a closed-form factor and chart coordinates");
  }

  // Long metric-graph edges (chords that are not triangulation sides) get a
  // composite trapezoid rule over sub-segments no longer than the mesh
  // spacing, with the factor interpolated linearly inside faces. On
  // triangulation sides this is the plain two-point rule.
  const bool composite = quadrature == Quadrature::trapezoid && space.has_coords() && space.has_faces();
  std::optional<FaceLocator> locator;
  std::vector<std::uint64_t> sides;
  double h_chart = 0.0;
  if (composite) {
    h_chart = space.chart_spacing();
    locator.emplace(space, h_chart);
    for (const Face& f : space.faces()) {
      for (int k = 0; k < 3; ++k) sides.push_back(edge_key(f[k], f[(k + 1) % 3]));
    }
    std::sort(sides.begin(), sides.end());
  }

  std::vector<double> w(space.edge_count());
  for (std::size_t e = 0; e < w.size(); ++e) {
    const WeightedEdge& edge = space.edge(e);
    double q = 0.0;
    if (quadrature == Quadrature::midpoint) {
      q = factor.chart_eval(0.5 * (space.coord(edge.a) + space.coord(edge.b)));
    } else {
      q = 0.5 * (factor[edge.a] + factor[edge.b]);
      if (composite && !std::binary_search(sides.begin(), sides.end(), edge_key(edge.a, edge.b))) {
        const Vec2 pa = space.coord(edge.a), pb = space.coord(edge.b);
        const auto m = static_cast<std::size_t>(std::ceil((pb - pa).norm() / h_chart - 1e-9));
        if (m > 1) {
          double sum = 0.5 * (factor[edge.a] + factor[edge.b]);
          for (std::size_t i = 1; i < m; ++i) {
            const double s = static_cast<double>(i) / static_cast<double>(m);
            auto v = locator->interpolate(lerp(pa, pb, s), factor.values);
            sum += v ? *v : (1.0 - s) * factor[edge.a] + s * factor[edge.b];
          }
          q = sum / static_cast<double>(m);
        }
      }
    }
    w[e] = edge.weight * q;
  }
  return w;
}

LengthSpace conformal_change(const LengthSpace& space, const ScalarField& factor, Quadrature quadrature) {
  std::vector<double> w = conformal_weights(space, factor, quadrature);
  for (std::size_t e = 0; e < w.size(); ++e) {
    if (!(w[e] > 0.0) || !std::isfinite(w[e])) {
      const WeightedEdge& edge = space.edge(e);
      throw InvalidInput("conformal factor vanishes along edge " + std::to_string(edge.a) + "-" +
                         std::to_string(edge.b));
    }
  }
  std::optional<OracleTag> tag;
  const auto& base = space.oracle();
  if (base && base->kind == OracleKind::euclidean && factor.rule &&
      factor.rule->kind == RuleKind::power_radial && factor.rule->scale == 1.0 && factor.rule->alpha > -1.0) {
    tag = OracleTag{OracleKind::cone, 2.0 * kPi * (1.0 + factor.rule->alpha)};
  }
  return space.with_weights(std::move(w), tag);
}

ScalarField exp_factor(const ScalarField& f) {
  std::vector<double> v(f.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(f[k]) || std::abs(f[k]) > 700.0) {
      throw InvalidInput("exponent out of range (|f| > 700) at vertex " + std::to_string(k));
    }
    v[k] = std::exp(f[k]);
  }
  ScalarField out = field_from_values(std::move(v));
  if (f.chart_eval) out.chart_eval = [g = f.chart_eval](Vec2 p) { return std::exp(g(p)); };
  return out;
}

namespace {

double lipschitz(const LengthSpace& space, const ScalarField& rho) {
  double lip = 0.0;
  for (const WeightedEdge& e : space.edges()) lip = std::max(lip, std::abs(rho[e.a] - rho[e.b]) / e.weight);
  return lip;
}

}  // namespace

CompositionReport composition_law_check(const LengthSpace& space, const ScalarField& rho1,
                                        const ScalarField& rho2, std::size_t n_pairs, std::uint64_t seed,
                                        Quadrature quadrature) {
  const LengthSpace two_step = conformal_change(conformal_change(space, rho1, quadrature), rho2, quadrature);
  const LengthSpace one_step = conformal_change(space, multiply(rho1, rho2), quadrature);
  CompositionReport report;
  report.quadrature = quadrature;
  report.h = space.nominal_spacing();
  report.lip = std::max(lipschitz(space, rho1), lipschitz(space, rho2));
  report.threshold = quadrature == Quadrature::midpoint ? 1e-12 : 2.0 * report.h * report.lip;

  // Pairs share sources so that each Dijkstra run serves many of them.
  const std::size_t n = space.vertex_count();
  const auto sources = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_pairs))));
  Rng rng(seed);
  ShortestPaths sp1(two_step), sp2(one_step);
  std::size_t done = 0;
  for (std::size_t s = 0; s < sources && done < n_pairs; ++s) {
    const std::size_t a = rng.index(n);
    const std::size_t count = std::min((n_pairs - done + (sources - s) - 1) / (sources - s), n_pairs - done);
    std::vector<std::size_t> targets(count);
    for (auto& t : targets) t = rng.index(n);
    sp1.run(a, targets);
    sp2.run(a, targets);
    for (std::size_t t : targets) {
      const double d1 = sp1.distance(t), d2 = sp2.distance(t);
      if (d2 > 0.0) report.max_gap = std::max(report.max_gap, std::abs(d1 - d2) / d2);
      ++done;
    }
  }
  report.pairs = done;
  report.pass = report.max_gap <= report.threshold;
  return report;
}

std::vector<double> angle_defect_curvature(const LengthSpace& space) {
  const MeshGeometry mesh(space, MeshGeometry::Lengths::weights);
  std::vector<double> k(space.vertex_count(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t v = 0; v < k.size(); ++v) {
    if (mesh.interior(v)) k[v] = (2.0 * kPi - mesh.angle_sum(v)) / mesh.barycentric_area(v);
  }
  return k;
}

CurvatureReport conformal_curvature_check(const LengthSpace& space, const ScalarField& f, double c_max) {
  if (!space.oracle() || space.oracle()->kind != OracleKind::euclidean || !space.has_faces()) {
    throw InvalidInput("curvature check needs a flat triangulated mesh");
  }
  if (!space.has_boundary()) throw InvalidInput("curvature check needs a boundary cycle");
  const LengthSpace deformed = conformal_change(space, exp_factor(f));
  const std::vector<double> k = angle_defect_curvature(deformed);
  const InteriorValues lap = discrete_laplacian(space, f);

  CurvatureReport report;
  report.h = space.chart_spacing();
  report.c_max = c_max;
  const auto& c = space.coords();
  report.origin_vertex = nearest_vertex(space, {0.0, 0.0});
  const double margin2 = std::pow(4.0 * report.h, 2);
  for (std::size_t i = 0; i < lap.vertices.size(); ++i) {
    const std::size_t v = lap.vertices[i];
    const double formula = -std::exp(-2.0 * f[v]) * lap.values[i];
    if (v == report.origin_vertex) {
      report.k_origin = k[v];
      report.k_origin_formula = formula;
    }
    bool near_boundary = false;
    for (std::size_t b : space.boundary()) {
      if ((c[v] - c[b]).norm2() < margin2) {
        near_boundary = true;
        break;
      }
    }
    if (near_boundary) continue;
    ++report.tested;
    report.max_residual = std::max(report.max_residual, std::abs(k[v] - formula));
  }
  report.constant = report.max_residual / report.h;
  report.pass = report.tested > 0 && report.max_residual <= c_max * report.h;
  return report;
}

nlohmann::json to_json(const CompositionReport& r) {
  return {{"verdict", r.pass ? "PASS" : "FAIL"}, {"quadrature", to_string(r.quadrature)},
          {"pairs", r.pairs}, {"max_relative_gap", r.max_gap}, {"lipschitz", r.lip},
          {"h", r.h}, {"threshold", r.threshold}};
}

nlohmann::json to_json(const CurvatureReport& r) {
  return {{"verdict", r.pass ? "PASS" : "FAIL"},
          {"tested", r.tested},
          {"h", r.h},
          {"max_residual", r.max_residual},
          {"constant", r.constant},
          {"c_max", r.c_max},
          {"origin_vertex", r.origin_vertex},
          {"k_origin", r.k_origin},
          {"k_origin_formula", r.k_origin_formula}};
}

}  // namespace cat0lab
