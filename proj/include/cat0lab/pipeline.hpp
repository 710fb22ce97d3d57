#pragma once

// The proof of the main theorem as a computation: Plateau disc, conformal
// factor, intrinsic pullback, majorization and the two deformed scans.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cat0lab/model_spaces.hpp"
#include "cat0lab/scalar_fields.hpp"
#include "cat0lab/target_space.hpp"

namespace cat0lab {

/// Closed curve in the target given by samples in chart coordinates.
struct CurveSpec {
  enum class Kind { circle, ellipse, points };
  Kind kind = Kind::circle;
  double radius = 0.8;      ///< circle
  double a = 0.8, b = 0.4;  ///< ellipse semi-axes
  Vec2 center;
  /// 0 = three samples per boundary vertex of the domain.
  std::size_t samples = 0;
  std::vector<Vec2> points;
};

CurveSpec curve_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CurveSpec& c);

/// Samples of the curve, `fallback` of them when the spec leaves the count
/// open.
std::vector<TargetPoint> sample_curve(const CurveSpec& spec, std::size_t fallback);

/// Target realizing a generated model space: the closed-form plane for flat
/// and hyperbolic discs (both are convex subsets of it), the mesh otherwise.
std::shared_ptr<const TargetSpace> model_target(const ModelSpec& spec, const LengthSpace& x);

struct PipelineParams {
  double domain_spacing = 0.05;
  std::size_t triangles = 2000;
  double scan_tol_factor = 3.0;         ///< cat0_scan tol = factor * h
  double majorization_tol_factor = 5.0; ///< tol = factor * max(h_Y, h_X)
  std::size_t majorization_pairs = 2000;
  double log_tol_factor = 5.0;          ///< log-subharmonicity tol = factor * h_D
  double dirichlet_tol = 1e-8;
  double plateau_tol = 1e-6;
  std::size_t convexity_geodesics = 200;
  std::uint64_t seed = 0;
  bool force = false;
};

struct StageResult {
  int stage = 0;
  std::string name;
  bool pass = true;
  nlohmann::json report;
  double seconds = 0.0;
};

struct PipelineReport {
  bool refused = false;
  std::vector<StageResult> stages;
  bool pass = true;
};

/// Stage 0 pretests convexity of f on X; when it fails the pipeline stops
/// there unless `force` is set. A stage that cannot run throws
/// std::runtime_error naming the stage.
PipelineReport main_theorem_pipeline(const ModelSpec& x_spec, const FieldRule& f, const CurveSpec& curve,
                                     const PipelineParams& params);

/// Without timing fields unless `with_timing`.
nlohmann::json to_json(const PipelineReport& r, bool with_timing);

}  // namespace cat0lab
