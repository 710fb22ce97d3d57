#pragma once

// Conformal change of a length space by a positive factor, the composition
// law and the curvature-formula check.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cat0lab/metric_core.hpp"
#include "cat0lab/scalar_fields.hpp"

namespace cat0lab {

enum class Quadrature { trapezoid, midpoint };

std::string to_string(Quadrature q);
Quadrature quadrature_from_string(const std::string& name);

/// Reweights every edge by the factor: w' = w (rho(a) + rho(b)) / 2 for the
/// trapezoid rule, w' = w rho(chart midpoint) for the midpoint rule. Metric
/// graph chords that are not triangulation sides use the composite trapezoid
/// rule on sub-segments of mesh size.
///
/// The factor may vanish at isolated vertices (|z|^alpha at the origin) as
/// long as every resulting weight stays positive. Power-radial factors on a
/// flat disc keep an oracle tag: the cone of total angle 2 pi (1 + alpha).
LengthSpace conformal_change(const LengthSpace& space, const ScalarField& factor,
                             Quadrature quadrature = Quadrature::trapezoid);

/// The reweighted edge weights of conformal_change without the positivity
/// check.
std::vector<double> conformal_weights(const LengthSpace& space, const ScalarField& factor,
                                      Quadrature quadrature = Quadrature::trapezoid);

/// e^f, rejecting |f| > 700.
ScalarField exp_factor(const ScalarField& f);

struct CompositionReport {
  Quadrature quadrature = Quadrature::trapezoid;
  std::size_t pairs = 0;
  double max_gap = 0.0;  ///< relative
  double lip = 0.0;
  double h = 0.0;
  double threshold = 0.0;
  bool pass = true;
};

/// Distances in rho2 (rho1 X) against (rho1 rho2) X on sampled vertex pairs.
CompositionReport composition_law_check(const LengthSpace& space, const ScalarField& rho1,
                                        const ScalarField& rho2, std::size_t n_pairs, std::uint64_t seed,
                                        Quadrature quadrature = Quadrature::trapezoid);

struct CurvatureReport {
  std::size_t tested = 0;
  double h = 0.0;
  double max_residual = 0.0;
  double constant = 0.0;  ///< max_residual / h
  double c_max = 0.0;
  std::size_t origin_vertex = 0;
  double k_origin = 0.0;         ///< angle-defect curvature at the vertex nearest 0
  double k_origin_formula = 0.0; ///< -e^{-2f} (discrete Laplacian of f) there
  bool pass = true;
};

inline constexpr double kDefaultCurvatureConstant = 10.0;

/// Gaussian curvature of e^{2f}|dz|^2 from angle defects on the mesh
/// reweighted by e^f, against -e^{-2f} Laplacian(f), at interior vertices at
/// least 4h from the boundary.
CurvatureReport conformal_curvature_check(const LengthSpace& space, const ScalarField& f,
                                          double c_max = kDefaultCurvatureConstant);

/// Angle-defect curvature per vertex (NaN where undefined) of a triangulated
/// space using its edge weights as side lengths.
std::vector<double> angle_defect_curvature(const LengthSpace& space);

nlohmann::json to_json(const CompositionReport& r);
nlohmann::json to_json(const CurvatureReport& r);

}  // namespace cat0lab
