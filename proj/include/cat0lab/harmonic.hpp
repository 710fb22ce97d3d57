#pragma once

// Discrete harmonic and minimal discs into metric targets: cotangent
// Korevaar-Schoen energy, the Dirichlet solver, the Plateau loop, the
// conformal factor and the intrinsic pullback space.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cat0lab/metric_core.hpp"
#include "cat0lab/scalar_fields.hpp"
#include "cat0lab/target_space.hpp"

namespace cat0lab {

/// Assignment of a target point to every domain vertex. The domain is a disc
/// mesh with chart coordinates, faces and boundary cycle.
struct SpaceMap {
  std::shared_ptr<const LengthSpace> domain;
  std::shared_ptr<const TargetSpace> target;
  std::vector<TargetPoint> assignment;
};

struct EnergyReport {
  double energy = 0.0;
  std::vector<double> density;  ///< per vertex, over the barycentric area
  std::vector<double> history;  ///< energy after every sweep / outer step
};

/// E(u) = sum over triangulation edges of c(a,b) d(u(a), u(b))^2 with
/// c = (cot alpha + cot beta) / 2, the Dirichlet energy for planar targets.
EnergyReport ks_energy(const SpaceMap& map);

/// Identity of a flat disc into the Euclidean plane.
SpaceMap identity_map(std::shared_ptr<const LengthSpace> domain);

enum class SweepKind { gauss_seidel, jacobi };

std::string to_string(SweepKind kind);
SweepKind sweep_kind_from_string(const std::string& name);

struct DirichletParams {
  /// Convergence when the last displacement and the estimated remaining
  /// error (displacement * r / (1 - r), r the observed contraction) are both
  /// at most tol.
  double tol = 1e-9;
  std::size_t max_sweeps = 200000;
  SweepKind sweep = SweepKind::gauss_seidel;
  /// Visit interior vertices in a seeded random order instead of index order.
  bool shuffle = false;
  std::uint64_t seed = 0;
  /// Starting map; default puts every interior vertex at the barycenter of
  /// the boundary data.
  std::optional<std::vector<TargetPoint>> initial;
  /// Gauss-Seidel into the Euclidean plane uses over-relaxation estimated
  /// from the observed contraction. Set false for plain sweeps.
  bool over_relax = true;
};

struct DirichletResult {
  SpaceMap map;
  EnergyReport energy;
  std::size_t sweeps = 0;
  double displacement = 0.0;  ///< in the last sweep
  double contraction = 0.0;   ///< observed per-sweep ratio
  double relaxation = 1.0;
  /// Max difference quotient d(u(a), u(b)) / |ab| over edges two rings away
  /// from the boundary.
  double interior_lipschitz = 0.0;
};

/// Interior vertices are repeatedly replaced by the cotangent-weighted
/// barycenter of their neighbours. Gauss-Seidel updates in place; Jacobi
/// moves all vertices from the previous state at once, halving the step
/// until the energy does not increase. Throws ConvergenceFailure when
/// max_sweeps runs out.
DirichletResult solve_dirichlet(std::shared_ptr<const LengthSpace> domain, std::shared_ptr<const TargetSpace> target,
                                std::span<const TargetPoint> boundary_data, const DirichletParams& params = {});

/// Value of a field rule at a target point. Chart rules act on planar
/// coordinates, distance rules use the target's metric.
double evaluate_on_target(const TargetSpace& target, const FieldRule& rule, const TargetPoint& p);

/// Whether the rule is a convex function on the target: known closed forms
/// for the planes and trees, a sampled convexity check for mesh targets.
bool convex_on_target(const TargetSpace& target, const FieldRule& rule);

struct PullbackReport {
  FieldRule rule;
  bool convex = false;
  std::size_t tested = 0;
  double min_laplacian = kInfinity;
  std::optional<std::size_t> worst_vertex;
  std::size_t violation_count = 0;
  double tol = 0.0;
  bool pass = true;
};

/// PASS iff the discrete Laplacian of f o u is >= -tol at every interior
/// vertex.
PullbackReport pullback_subharmonicity_test(const SpaceMap& map, const FieldRule& rule, double tol);

struct PlateauParams {
  DirichletParams dirichlet;
  /// Stop when an outer iteration lowers the energy by less than this
  /// fraction.
  double tol = 1e-6;
  std::size_t max_outer = 500;
};

struct PlateauResult {
  SpaceMap map;
  EnergyReport energy;  ///< history: energy after each outer iteration
  /// Curve sample index per boundary vertex, in boundary order.
  std::vector<std::size_t> boundary_assignment;
  std::array<std::size_t, 3> pinned{};  ///< positions in the boundary cycle
  std::size_t outer_iterations = 0;
  std::size_t moves = 0;
  bool monotone = true;  ///< cyclic monotonicity held after every iteration
};

/// Alternates Dirichlet solves with single-sample moves of the boundary
/// vertices along the curve samples that lower the energy and keep the
/// assignment strictly cyclically increasing. Three boundary vertices stay
/// pinned. Throws InvalidInput for curves with repeated points or
/// self-intersections and ConvergenceFailure when max_outer runs out.
PlateauResult solve_plateau(std::shared_ptr<const LengthSpace> domain, std::shared_ptr<const TargetSpace> target,
                            std::span<const TargetPoint> curve, const PlateauParams& params = {});

/// Uniform cyclic assignment of `boundary_count` vertices to `samples` curve
/// points, starting at sample 0.
std::vector<std::size_t> uniform_assignment(std::size_t boundary_count, std::size_t samples);

struct ConformalFactorReport {
  ScalarField lambda;
  SubharmonicReport log_check;
  double energy = 0.0;
  double energy_from_lambda = 0.0;  ///< 2 sum lambda^2 area
  double consistency_gap = 0.0;     ///< relative
  double consistency_tol = 0.05;
  bool consistent = true;
};

/// lambda(v) = mean of d(u(a), u(b)) / |ab| over the triangulation edges at
/// v, followed by the log-subharmonicity check at tolerance `log_tol` away
/// from a 4h band along the boundary, where the irregular mesh makes the
/// edge average off by O(h), and the comparison of the energy with
/// 2 sum lambda^2 area.
ConformalFactorReport conformal_factor_estimate(const SpaceMap& map, double log_tol);

struct PullbackSpace {
  LengthSpace space;
  std::vector<std::size_t> floored_edges;
  double epsilon = 1e-9;
};

/// lambda times the flat domain. Edges whose endpoints both lie in the
/// vanishing set of lambda get weight epsilon times their length.
PullbackSpace intrinsic_pullback(const LengthSpace& domain, const ScalarField& lambda, double epsilon = 1e-9);

nlohmann::json to_json(const EnergyReport& r, bool with_density = false);
nlohmann::json to_json(const PullbackReport& r);
nlohmann::json to_json(const ConformalFactorReport& r);
/// {domain-ref, target, assignment, energy, sweeps}
nlohmann::json map_to_json(const SpaceMap& map, const std::string& domain_ref, double energy, std::size_t sweeps);

}  // namespace cat0lab
