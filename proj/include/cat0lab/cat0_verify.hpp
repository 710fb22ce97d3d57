#pragma once

// Numerical CAT(0) detectors: comparison-triangle scans, convexity of the
// distance between geodesics, and the majorization checker.
//
// These are falsifiers: a FAIL is evidence of a curvature violation at scales
// above the mesh spacing, a PASS only says none was found among the samples.

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cat0lab/metric_core.hpp"
#include "cat0lab/target_space.hpp"

namespace cat0lab {

struct TriangleResult {
  std::size_t v0 = 0, v1 = 0, v2 = 0;
  double sides[3] = {0.0, 0.0, 0.0};  ///< |v0 v1|, |v1 v2|, |v2 v0|
  std::size_t pairs = 0;
  /// Worst pair: positions as side index + arc-length fraction, so 1.25 is a
  /// quarter of the way from v1 to v2.
  double t1 = 0.0, t2 = 0.0;
  double actual = 0.0;
  double comparison = 0.0;
  double slack = kInfinity;
};

struct ComparisonReport {
  std::size_t triangles_tested = 0;
  std::size_t pairs_tested = 0;
  double min_slack = kInfinity;
  double mean_slack = 0.0;
  double tol = 0.0;
  double h = 0.0;
  std::optional<TriangleResult> worst;
  std::vector<TriangleResult> triangles;
  bool pass = true;
};

/// Comparison test on one triangle with `n_side_points` interior samples per
/// side. Sample points are snapped to geodesic vertices and compared at their
/// exact arc-length parameters.
ComparisonReport comparison_test(const LengthSpace& space, std::size_t v0, std::size_t v1, std::size_t v2,
                                 std::size_t n_side_points, double tol);

struct ScanParams {
  std::size_t triangles = 1000;
  std::size_t side_points = 3;
  std::optional<double> tol;  ///< default 3h
  std::uint64_t seed = 0;
  double local_fraction = 0.5;
  double local_radius = 10.0;  ///< in units of h
  double min_side = 4.0;       ///< in units of h
  /// 0 = read LAB_THREADS, else 1.
  unsigned threads = 0;
};

/// Aggregate comparison test over seeded random triangles, half uniform and
/// half clustered in a ball of radius 10h. h is the space's nominal spacing.
ComparisonReport cat0_scan(const LengthSpace& space, const ScanParams& params);

/// Writes v0,v1,v2,t1,t2,actual,comparison,slack per triangle.
void write_slack_csv(const ComparisonReport& report, std::ostream& out);

struct DistanceConvexityReport {
  std::size_t pairs = 0;
  std::size_t samples = 0;
  double min_defect = kInfinity;
  double tol = 0.0;
  bool pass = true;
};

/// Midpoint convexity of t -> d(g1(t), g2(t)) for sampled geodesic pairs
/// parametrized proportionally to arc length. Distances between edge points
/// interpolate the endpoint distances linearly.
DistanceConvexityReport geodesic_distance_convexity(const LengthSpace& space, std::size_t n_pairs, double tol,
                                                    std::uint64_t seed);

struct MajorizationReport {
  std::size_t pairs = 0;
  double max_stretch_excess = -kInfinity;  ///< max d_X(P a, P b) - d_Y(a, b)
  double max_arc_drift = 0.0;              ///< max cumulative arc-length mismatch
  double max_segment_drift = 0.0;          ///< max per-segment mismatch
  double boundary_length_y = 0.0;
  double boundary_length_x = 0.0;
  bool short_map = true;
  bool arc_length = true;
  bool bijective = true;
  double tol = 0.0;
  bool pass = true;
};

/// Checks that P: Y -> X is short on sampled pairs, preserves cumulative arc
/// length along the boundary cycle of Y, and maps that cycle bijectively and
/// in cyclic order onto the sample points of the curve. `images` holds P per
/// Y vertex, `curve` the closed polygon of the curve in X, and `assignment`
/// the curve index of the image of each boundary vertex of Y (in boundary
/// order).
MajorizationReport majorization_check(const LengthSpace& y, const TargetSpace& x,
                                      std::span<const TargetPoint> images, std::span<const TargetPoint> curve,
                                      std::span<const std::size_t> assignment, std::size_t n_pairs, double tol,
                                      std::uint64_t seed);

/// Vertex-map form: X is a length space, `map` sends Y vertices to X
/// vertices, and `curve` lists X vertices of the closed curve.
MajorizationReport majorization_check(const LengthSpace& y, const LengthSpace& x, std::span<const std::size_t> map,
                                      std::span<const std::size_t> curve, std::size_t n_pairs, double tol,
                                      std::uint64_t seed);

nlohmann::json to_json(const TriangleResult& t);
nlohmann::json to_json(const ComparisonReport& r);
nlohmann::json to_json(const DistanceConvexityReport& r);
nlohmann::json to_json(const MajorizationReport& r);

unsigned default_thread_count();

}  // namespace cat0lab
