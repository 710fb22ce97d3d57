#include "cat0lab/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "cat0lab/cat0_verify.hpp"
#include "cat0lab/conformal.hpp"
#include "cat0lab/errors.hpp"
#include "cat0lab/harmonic.hpp"

namespace cat0lab {

CurveSpec curve_spec_from_json(const nlohmann::json& j) {
  CurveSpec c;
  try {
    const std::string kind = j.value("kind", "circle");
    if (kind == "circle") {
      c.kind = CurveSpec::Kind::circle;
      c.radius = j.value("radius", c.radius);
    } else if (kind == "ellipse") {
      c.kind = CurveSpec::Kind::ellipse;
      c.a = j.at("a").get<double>();
      c.b = j.at("b").get<double>();
    } else if (kind == "points") {
      c.kind = CurveSpec::Kind::points;
      for (const auto& p : j.at("points")) c.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    } else {
      throw InvalidInput("curve.kind: unknown curve kind '" + kind + "'");
    }
    if (j.contains("center")) c.center = {j["center"].at(0).get<double>(), j["center"].at(1).get<double>()};
    c.samples = j.value("samples", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("curve: ") + e.what());
  }
  if (c.kind == CurveSpec::Kind::circle && !(c.radius > 0.0)) throw InvalidInput("curve.radius must be positive");
  if (c.kind == CurveSpec::Kind::ellipse && !(c.a > 0.0 && c.b > 0.0)) {
    throw InvalidInput("curve.a and curve.b must be positive");
  }
  return c;
}

nlohmann::json to_json(const CurveSpec& c) {
  nlohmann::json j;
  switch (c.kind) {
    case CurveSpec::Kind::circle: j = {{"kind", "circle"}, {"radius", c.radius}}; break;
    case CurveSpec::Kind::ellipse: j = {{"kind", "ellipse"}, {"a", c.a}, {"b", c.b}}; break;
    case CurveSpec::Kind::points: {
      j = {{"kind", "points"}, {"points", nlohmann::json::array()}};
      for (Vec2 p : c.points) j["points"].push_back({p.x, p.y});
      break;
    }
  }
  j["center"] = {c.center.x, c.center.y};
  j["samples"] = c.samples;
  return j;
}

std::vector<TargetPoint> sample_curve(const CurveSpec& spec, std::size_t fallback) {
  std::vector<TargetPoint> out;
  if (spec.kind == CurveSpec::Kind::points) {
    for (Vec2 p : spec.points) out.emplace_back(p + spec.center);
    return out;
  }
  const std::size_t m = spec.samples ? spec.samples : fallback;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(m);
    const Vec2 p = spec.kind == CurveSpec::Kind::circle ? Vec2{spec.radius * std::cos(a), spec.radius * std::sin(a)}
                                                        : Vec2{spec.a * std::cos(a), spec.b * std::sin(a)};
    out.emplace_back(p + spec.center);
  }
  return out;
}

std::shared_ptr<const TargetSpace> model_target(const ModelSpec& spec, const LengthSpace& x) {
  switch (spec.kind) {
    case ModelKind::flat_disc: return std::make_shared<EuclideanPlane>();
    case ModelKind::hyperbolic_disc: return std::make_shared<HyperbolicPlane>();
    default: return std::make_shared<MeshTarget>(x);
  }
}

namespace {

ComparisonReport scan(const LengthSpace& space, const PipelineParams& p, std::uint64_t salt) {
  ScanParams sp;
  sp.triangles = p.triangles;
  sp.seed = p.seed + salt;
  sp.tol = p.scan_tol_factor * space.nominal_spacing();
  return cat0_scan(space, sp);
}

}  // namespace

PipelineReport main_theorem_pipeline(const ModelSpec& x_spec, const FieldRule& f, const CurveSpec& curve,
                                     const PipelineParams& params) {
  PipelineReport out;
  auto stage = [&](int number, const std::string& name, const std::function<void(StageResult&)>& body) {
    StageResult s;
    s.stage = number;
    s.name = name;
    const auto start = std::chrono::steady_clock::now();
    try {
      body(s);
    } catch (const std::exception& e) {
      throw std::runtime_error("stage " + std::to_string(number) + " (" + name + "): " + e.what());
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.pass = out.pass && s.pass;
    out.stages.push_back(std::move(s));
  };

  LengthSpace x;
  ScalarField f_x;
  stage(0, "convexity-pretest", [&](StageResult& s) {
    x = generate(x_spec);
    f_x = make_field(x, f);
    const ConvexityReport c =
        convexity_check(x, f_x, params.convexity_geodesics, params.scan_tol_factor * x.nominal_spacing(), params.seed);
    s.pass = c.pass;
    s.report = to_json(c);
    s.report["forced"] = params.force;
  });
  if (!out.pass && !params.force) {
    out.refused = true;
    return out;
  }

  // Stage 1 is the generation of X above; it is reported on its own.
  stage(1, "generate-x", [&](StageResult& s) {
    s.report = {{"space", to_json(x_spec)},
                {"vertices", x.vertex_count()},
                {"edges", x.edge_count()},
                {"h", x.nominal_spacing()}};
  });

  const std::shared_ptr<const TargetSpace> target = model_target(x_spec, x);
  ModelSpec d_spec;
  d_spec.spacing = params.domain_spacing;
  auto domain = std::make_shared<const LengthSpace>(generate(d_spec));
  const std::size_t nb = domain->boundary().size();
  const std::vector<TargetPoint> gamma = sample_curve(curve, 3 * nb);

  PlateauResult plateau;
  stage(2, "plateau", [&](StageResult& s) {
    PlateauParams pp;
    pp.dirichlet.tol = params.dirichlet_tol;
    pp.tol = params.plateau_tol;
    plateau = solve_plateau(domain, target, gamma, pp);
    s.pass = plateau.monotone;
    s.report = {{"target", target->describe()},
                {"curve", to_json(curve)},
                {"curve_samples", gamma.size()},
                {"domain_vertices", domain->vertex_count()},
                {"energy", plateau.energy.energy},
                {"outer_iterations", plateau.outer_iterations},
                {"moves", plateau.moves},
                {"monotone", plateau.monotone}};
  });

  ConformalFactorReport lambda;
  stage(3, "conformal-factor", [&](StageResult& s) {
    lambda = conformal_factor_estimate(plateau.map, params.log_tol_factor * domain->chart_spacing());
    s.pass = lambda.log_check.pass;
    s.report = to_json(lambda);
  });

  PullbackSpace y;
  stage(4, "intrinsic-pullback-scan", [&](StageResult& s) {
    y = intrinsic_pullback(*domain, lambda.lambda);
    const ComparisonReport r = scan(y.space, params, 4);
    s.pass = r.pass;
    s.report = to_json(r);
    s.report["floored_edges"] = y.floored_edges.size();
    s.report["floor_epsilon"] = y.epsilon;
  });

  stage(5, "majorization", [&](StageResult& s) {
    const double h = std::max(y.space.nominal_spacing(), x.nominal_spacing());
    const MajorizationReport r =
        majorization_check(y.space, *target, plateau.map.assignment, gamma, plateau.boundary_assignment,
                           params.majorization_pairs, params.majorization_tol_factor * h, params.seed + 5);
    s.pass = r.pass;
    s.report = to_json(r);
  });

  stage(6, "deformed-pullback-scan", [&](StageResult& s) {
    std::vector<double> fv(domain->vertex_count());
    for (std::size_t v = 0; v < fv.size(); ++v) fv[v] = evaluate_on_target(*target, f, plateau.map.assignment[v]);
    const LengthSpace w = conformal_change(y.space, exp_factor(field_from_values(std::move(fv))));
    const ComparisonReport r = scan(w, params, 6);
    s.pass = r.pass;
    s.report = to_json(r);
  });

  stage(7, "deformed-x-scan", [&](StageResult& s) {
    const LengthSpace w = conformal_change(x, exp_factor(f_x));
    const ComparisonReport r = scan(w, params, 7);
    s.pass = r.pass;
    s.report = to_json(r);
  });
  return out;
}

nlohmann::json to_json(const PipelineReport& r, bool with_timing) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : r.stages) {
    nlohmann::json j{{"stage", s.stage}, {"name", s.name}, {"verdict", s.pass ? "PASS" : "FAIL"}, {"report", s.report}};
    if (with_timing) j["seconds"] = s.seconds;
    stages.push_back(std::move(j));
  }
  return {{"verdict", r.pass ? "PASS" : "FAIL"}, {"refused", r.refused}, {"stages", std::move(stages)}};
}

}  // namespace cat0lab
