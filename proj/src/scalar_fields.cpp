#include "cat0lab/scalar_fields.hpp"

#include <algorithm>
#include <cmath>

#include "cat0lab/errors.hpp"
#include "cat0lab/model_spaces.hpp"
#include "cat0lab/rng.hpp"

namespace cat0lab {

FieldRule FieldRule::constant(double c) {
  FieldRule r;
  r.kind = RuleKind::constant;
  r.c = c;
  return r;
}

FieldRule FieldRule::affine(double a, double b, double c) {
  FieldRule r;
  r.kind = RuleKind::affine;
  r.a = a;
  r.b = b;
  r.c = c;
  return r;
}

FieldRule FieldRule::norm_squared(double scale) {
  FieldRule r;
  r.kind = RuleKind::norm_squared;
  r.scale = scale;
  return r;
}

FieldRule FieldRule::distance_to_point(Vec2 p, double power) {
  FieldRule r;
  r.kind = RuleKind::distance_to_point;
  r.point = p;
  r.power = power;
  return r;
}

FieldRule FieldRule::distance_to_vertex(std::size_t v, double power) {
  FieldRule r;
  r.kind = RuleKind::distance_to_point;
  r.vertex = v;
  r.power = power;
  return r;
}

FieldRule FieldRule::distance_to_set(std::vector<std::size_t> set) {
  FieldRule r;
  r.kind = RuleKind::distance_to_set;
  r.set = std::move(set);
  return r;
}

FieldRule FieldRule::power_radial(double alpha) {
  FieldRule r;
  r.kind = RuleKind::power_radial;
  r.alpha = alpha;
  return r;
}

FieldRule FieldRule::scaled(double s) const {
  FieldRule r = *this;
  r.scale *= s;
  return r;
}

std::string to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::affine: return "affine";
    case RuleKind::norm_squared: return "norm-squared";
    case RuleKind::distance_to_point: return "distance-to-point";
    case RuleKind::distance_to_set: return "distance-to-set";
    case RuleKind::constant: return "constant";
    case RuleKind::power_radial: return "power-radial";
  }
  return "unknown";
}

nlohmann::json to_json(const FieldRule& r) {
  nlohmann::json j{{"kind", to_string(r.kind)}};
  switch (r.kind) {
    case RuleKind::affine: j["a"] = r.a; j["b"] = r.b; j["c"] = r.c; break;
    case RuleKind::constant: j["value"] = r.c; break;
    case RuleKind::norm_squared: break;
    case RuleKind::distance_to_point:
      if (r.vertex) j["vertex"] = *r.vertex;
      if (r.point) j["point"] = {r.point->x, r.point->y};
      j["power"] = r.power;
      break;
    case RuleKind::distance_to_set: j["vertices"] = r.set; j["power"] = r.power; break;
    case RuleKind::power_radial: j["alpha"] = r.alpha; break;
  }
  j["scale"] = r.scale;
  return j;
}

FieldRule field_rule_from_json(const nlohmann::json& j) {
  try {
    FieldRule r;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "affine") {
      r.kind = RuleKind::affine;
      r.a = j.value("a", 0.0);
      r.b = j.value("b", 0.0);
      r.c = j.value("c", 0.0);
    } else if (kind == "constant") {
      r.kind = RuleKind::constant;
      r.c = j.at("value").get<double>();
    } else if (kind == "norm-squared") {
      r.kind = RuleKind::norm_squared;
    } else if (kind == "distance-to-point") {
      r.kind = RuleKind::distance_to_point;
      if (j.contains("vertex")) r.vertex = j["vertex"].get<std::size_t>();
      if (j.contains("point")) {
        auto p = j["point"].get<std::vector<double>>();
        if (p.size() != 2) throw InvalidInput("field.point: expected [x, y]");
        r.point = Vec2{p[0], p[1]};
      }
      if (!r.vertex && !r.point) throw InvalidInput("field: distance-to-point needs 'point' or 'vertex'");
    } else if (kind == "distance-to-set") {
      r.kind = RuleKind::distance_to_set;
      r.set = j.at("vertices").get<std::vector<std::size_t>>();
    } else if (kind == "power-radial") {
      r.kind = RuleKind::power_radial;
      r.alpha = j.at("alpha").get<double>();
    } else {
      throw InvalidInput("field.kind: unknown rule '" + kind + "'");
    }
    r.power = j.value("power", 1.0);
    r.scale = j.value("scale", 1.0);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("field: ") + e.what());
  }
}

ScalarField field_from_values(std::vector<double> values) {
  ScalarField f;
  f.positive = !values.empty();
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInput("field values must be finite");
    if (!(v > 0.0)) f.positive = false;
  }
  f.values = std::move(values);
  return f;
}

namespace {

bool needs_coords(const FieldRule& r) {
  switch (r.kind) {
    case RuleKind::affine:
    case RuleKind::norm_squared:
    case RuleKind::power_radial: return true;
    case RuleKind::distance_to_point: return r.point.has_value();
    default: return false;
  }
}

std::vector<double> graph_distance_to_set(const LengthSpace& space, std::span<const std::size_t> set) {
  std::vector<double> best(space.vertex_count(), kInfinity);
  ShortestPaths sp(space);
  for (std::size_t s : set) {
    sp.run(s);
    for (std::size_t v = 0; v < best.size(); ++v) best[v] = std::min(best[v], sp.distance(v));
  }
  return best;
}

}  // namespace

ScalarField make_field(const LengthSpace& space, const FieldRule& rule) {
  if (needs_coords(rule) && !space.has_coords()) {
    throw InvalidInput("field rule " + to_string(rule.kind) + " needs chart coordinates");
  }
  if (!std::isfinite(rule.scale)) throw InvalidInput("field scale must be finite");
  const std::size_t n = space.vertex_count();
  const std::optional<OracleTag>& tag = space.oracle();
  const bool chart_metric = tag && tag->kind != OracleKind::tree;
  const double s = rule.scale;
  std::function<double(Vec2)> eval;
  std::vector<double> values(n);

  switch (rule.kind) {
    case RuleKind::constant:
      eval = [c = rule.c * s](Vec2) { return c; };
      break;
    case RuleKind::affine:
      eval = [a = rule.a * s, b = rule.b * s, c = rule.c * s](Vec2 p) { return a * p.x + b * p.y + c; };
      break;
    case RuleKind::norm_squared:
      eval = [s](Vec2 p) { return s * p.norm2(); };
      break;
    case RuleKind::power_radial:
      eval = [s, alpha = rule.alpha](Vec2 p) { return s * std::pow(p.norm(), alpha); };
      break;
    case RuleKind::distance_to_point:
    case RuleKind::distance_to_set: {
      if (!(rule.power > 0.0)) throw InvalidInput("distance rule power must be positive");
      auto shape = [s, pw = rule.power](double d) { return s * (pw == 1.0 ? d : std::pow(d, pw)); };
      std::vector<std::size_t> set = rule.set;
      std::optional<Vec2> point = rule.point;
      if (rule.kind == RuleKind::distance_to_point) {
        if (rule.vertex) {
          space.check_vertex(*rule.vertex);
          set = {*rule.vertex};
          point.reset();
        }
      } else {
        if (set.empty()) throw InvalidInput("distance-to-set needs a non-empty set");
        for (std::size_t v : set) space.check_vertex(v);
      }
      if (tag) {
        std::vector<Vec2> anchors;
        if (point) anchors.push_back(*point);
        for (std::size_t v : set) anchors.push_back(space.coord(v));
        auto d = [t = *tag, anchors](Vec2 p) {
          double best = kInfinity;
          for (Vec2 q : anchors) best = std::min(best, exact_chart_distance(t, p, q));
          return best;
        };
        for (std::size_t v = 0; v < n; ++v) values[v] = shape(d(space.coord(v)));
        if (chart_metric) eval = [d, shape](Vec2 p) { return shape(d(p)); };
      } else {
        if (point) set = {nearest_vertex(space, *point)};
        std::vector<double> d = graph_distance_to_set(space, set);
        for (std::size_t v = 0; v < n; ++v) values[v] = shape(d[v]);
      }
      break;
    }
  }
  if (eval && rule.kind != RuleKind::distance_to_point && rule.kind != RuleKind::distance_to_set) {
    for (std::size_t v = 0; v < n; ++v) values[v] = eval(space.coord(v));
  }
  ScalarField f = field_from_values(std::move(values));
  f.rule = rule;
  f.chart_eval = std::move(eval);
  return f;
}

ScalarField multiply(const ScalarField& f, const ScalarField& g) {
  if (f.size() != g.size()) throw InvalidInput("fields live on different spaces");
  std::vector<double> v(f.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = f[k] * g[k];
  ScalarField out = field_from_values(std::move(v));
  if (f.chart_eval && g.chart_eval) {
    out.chart_eval = [a = f.chart_eval, b = g.chart_eval](Vec2 p) { return a(p) * b(p); };
  }
  return out;
}

double interpolate(const ScalarField& field, const PathPoint& p) {
  if (p.edge_length <= 0.0) return field[p.from];
  const double s = p.offset / p.edge_length;
  return (1.0 - s) * field[p.from] + s * field[p.to];
}

namespace {

constexpr std::size_t kReportCap = 50;
constexpr int kSamplesPerGeodesic = 16;

/// Random vertex pair: half uniform, half within 10 h of each other.
std::pair<std::size_t, std::size_t> sample_pair(const LengthSpace& space, ShortestPaths& sp, Rng& rng,
                                                double h) {
  const std::size_t n = space.vertex_count();
  const std::size_t a = rng.index(n);
  if (rng.uniform() < 0.5) return {a, rng.index(n)};
  sp.run(a, {}, 10.0 * h);
  auto order = sp.settled_order();
  return {a, order[rng.index(order.size())]};
}

}  // namespace

ConvexityReport convexity_check(const LengthSpace& space, const ScalarField& field,
                                std::size_t n_geodesics, double tol, std::uint64_t seed) {
  if (field.size() != space.vertex_count()) throw InvalidInput("field does not match the space");
  ConvexityReport report;
  report.tol = tol;
  report.min_defect = kInfinity;
  Rng rng(seed);
  ShortestPaths sp(space);
  const double h = space.nominal_spacing();
  std::vector<ConvexitySample> worst;
  for (std::size_t g = 0; g < n_geodesics; ++g) {
    auto [a, b] = sample_pair(space, sp, rng, h);
    if (a == b) continue;
    const std::size_t target[] = {b};
    sp.run(a, target);
    const GeodesicPath path = sp.path_to(b);
    const double L = path.total_length();
    ++report.geodesics;
    for (int k = 0; k <= kSamplesPerGeodesic; ++k) {
      const double t = k == 0 ? 0.0 : rng.uniform(0.0, L);
      const double t2 = k == 0 ? L : rng.uniform(0.0, L);
      const double mid = 0.5 * (t + t2);
      const double defect = 0.5 * (interpolate(field, path.point_at(t)) + interpolate(field, path.point_at(t2))) -
                            interpolate(field, path.point_at(mid));
      ++report.samples;
      report.min_defect = std::min(report.min_defect, defect);
      if (defect < -tol) worst.push_back({a, b, t, t2, defect});
    }
  }
  std::sort(worst.begin(), worst.end(), [](const auto& x, const auto& y) { return x.defect < y.defect; });
  if (worst.size() > kReportCap) worst.resize(kReportCap);
  report.violations = std::move(worst);
  if (report.samples == 0) report.min_defect = 0.0;
  report.pass = report.min_defect >= -tol;
  return report;
}

InteriorValues discrete_laplacian(const MeshGeometry& mesh, std::span<const double> values) {
  if (values.size() != mesh.vertex_count()) throw InvalidInput("field does not match the mesh");
  InteriorValues out;
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    if (!mesh.interior(v)) continue;
    double acc = 0.0;
    for (const auto& nb : mesh.cot_ring(v)) acc += nb.weight * (values[nb.vertex] - values[v]);
    out.vertices.push_back(v);
    out.values.push_back(acc / mesh.mixed_area(v));
  }
  return out;
}

namespace {

void require_flat(const LengthSpace& space) {
  if (!space.oracle() || space.oracle()->kind != OracleKind::euclidean || !space.has_faces()) {
    throw InvalidInput("discrete Laplacian needs a flat triangulated mesh");
  }
}

SubharmonicReport laplacian_check(const LengthSpace& space, const ScalarField& field, double tol,
                                  bool take_log, double boundary_band) {
  require_flat(space);
  if (field.size() != space.vertex_count()) throw InvalidInput("field does not match the space");
  SubharmonicReport report;
  report.tol = tol;
  const std::size_t n = space.vertex_count();
  std::vector<double> values(field.values);
  std::vector<bool> vanishing(n, false);
  for (std::size_t v = 0; v < n; ++v) {
    if (values[v] < 0.0 && take_log) throw InvalidInput("log-subharmonic check on a negative value");
    if (values[v] == 0.0) {
      vanishing[v] = true;
      report.vanishing.push_back(v);
    }
  }
  if (report.vanishing.size() == n) {
    report.degenerate = true;
    report.excluded.resize(n);
    for (std::size_t v = 0; v < n; ++v) report.excluded[v] = v;
    report.min_laplacian = 0.0;
    return report;
  }
  std::vector<bool> excluded(n, false);
  if (!report.vanishing.empty()) {
    const double reach2 = std::pow(2.0 * space.chart_spacing(), 2) * (1.0 + 1e-9);
    const auto& c = space.coords();
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t z : report.vanishing) {
        if ((c[v] - c[z]).norm2() <= reach2) {
          excluded[v] = true;
          break;
        }
      }
    }
  }
  if (boundary_band > 0.0 && space.has_boundary()) {
    const double band2 = boundary_band * boundary_band;
    const auto& c = space.coords();
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t b : space.boundary()) {
        if ((c[v] - c[b]).norm2() < band2) {
          excluded[v] = true;
          break;
        }
      }
    }
  }
  if (take_log) {
    // Neighbours of a vanishing vertex are excluded, so the stand-in value
    // never enters a tested stencil.
    for (std::size_t v = 0; v < n; ++v) values[v] = vanishing[v] ? 0.0 : std::log(values[v]);
  }
  const MeshGeometry mesh(space, MeshGeometry::Lengths::chart);
  const InteriorValues lap = discrete_laplacian(mesh, values);
  for (std::size_t k = 0; k < lap.vertices.size(); ++k) {
    const std::size_t v = lap.vertices[k];
    if (excluded[v]) {
      report.excluded.push_back(v);
      continue;
    }
    ++report.tested;
    if (lap.values[k] < report.min_laplacian) {
      report.min_laplacian = lap.values[k];
      report.worst_vertex = v;
    }
    if (lap.values[k] < -tol) {
      ++report.violation_count;
      if (report.violations.size() < kReportCap) report.violations.emplace_back(v, lap.values[k]);
    }
  }
  report.pass = report.violation_count == 0;
  return report;
}

}  // namespace

InteriorValues discrete_laplacian(const LengthSpace& space, const ScalarField& field) {
  require_flat(space);
  const MeshGeometry mesh(space, MeshGeometry::Lengths::chart);
  return discrete_laplacian(mesh, field.values);
}

SubharmonicReport subharmonic_check(const LengthSpace& space, const ScalarField& field, double tol,
                                     double boundary_band) {
  return laplacian_check(space, field, tol, false, boundary_band);
}

SubharmonicReport log_subharmonic_check(const LengthSpace& space, const ScalarField& field, double tol,
                                         double boundary_band) {
  return laplacian_check(space, field, tol, true, boundary_band);
}

nlohmann::json to_json(const ConvexityReport& r) {
  auto v = nlohmann::json::array();
  for (const auto& s : r.violations) {
    v.push_back({{"from", s.from}, {"to", s.to}, {"t", s.t}, {"t2", s.t2}, {"defect", s.defect}});
  }
  return {{"verdict", r.pass ? "PASS" : "FAIL"}, {"geodesics", r.geodesics}, {"samples", r.samples},
          {"min_defect", r.min_defect}, {"tol", r.tol}, {"violations", std::move(v)}};
}

nlohmann::json to_json(const SubharmonicReport& r) {
  auto v = nlohmann::json::array();
  for (const auto& [vertex, value] : r.violations) v.push_back({{"vertex", vertex}, {"laplacian", value}});
  nlohmann::json j{{"verdict", r.pass ? "PASS" : "FAIL"},
                   {"tested", r.tested},
                   {"min_laplacian", r.tested ? r.min_laplacian : 0.0},
                   {"tol", r.tol},
                   {"violation_count", r.violation_count},
                   {"violations", std::move(v)},
                   {"vanishing", r.vanishing},
                   {"excluded_count", r.excluded.size()},
                   {"degenerate", r.degenerate}};
  if (r.worst_vertex) j["worst_vertex"] = *r.worst_vertex;
  return j;
}

}  // namespace cat0lab
