#pragma once

// Functions on spaces and the convexity / subharmonicity testers.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cat0lab/mesh_geometry.hpp"
#include "cat0lab/metric_core.hpp"

namespace cat0lab {

enum class RuleKind { affine, norm_squared, distance_to_point, distance_to_set, constant, power_radial };

/// Closed-form field description. Every rule's value is multiplied by `scale`.
struct FieldRule {
  RuleKind kind = RuleKind::constant;
  double scale = 1.0;
  double a = 0.0, b = 0.0, c = 0.0;  ///< affine a x + b y + c; constant uses c
  std::optional<Vec2> point;         ///< distance-to-point by chart position
  std::optional<std::size_t> vertex; ///< distance-to-point by vertex
  std::vector<std::size_t> set;      ///< distance-to-set
  double power = 1.0;                ///< distance rules: d^power
  double alpha = 1.0;                ///< power-radial |z|^alpha

  static FieldRule constant(double c);
  static FieldRule affine(double a, double b, double c);
  static FieldRule norm_squared(double scale = 1.0);
  static FieldRule distance_to_point(Vec2 p, double power = 1.0);
  static FieldRule distance_to_vertex(std::size_t v, double power = 1.0);
  static FieldRule distance_to_set(std::vector<std::size_t> set);
  static FieldRule power_radial(double alpha);

  FieldRule scaled(double s) const;
};

std::string to_string(RuleKind kind);
nlohmann::json to_json(const FieldRule& rule);
FieldRule field_rule_from_json(const nlohmann::json& j);

struct ScalarField {
  std::vector<double> values;
  std::optional<FieldRule> rule;
  bool positive = false;
  /// Continuum evaluation at chart points, when the field has a closed form
  /// there. Empty otherwise.
  std::function<double(Vec2)> chart_eval;

  double operator[](std::size_t v) const { return values[v]; }
  std::size_t size() const { return values.size(); }
};

/// Field from raw values; the positivity flag is set when all values are > 0.
ScalarField field_from_values(std::vector<double> values);

/// Evaluates a rule on the space. Distance rules use the closed-form
/// distance of oracle-tagged spaces and graph distance otherwise.
ScalarField make_field(const LengthSpace& space, const FieldRule& rule);

ScalarField multiply(const ScalarField& f, const ScalarField& g);

/// Field value at a point on an edge, linear in arc length.
double interpolate(const ScalarField& field, const PathPoint& p);

struct ConvexitySample {
  std::size_t from = 0;
  std::size_t to = 0;
  double t = 0.0;
  double t2 = 0.0;
  double defect = 0.0;
};

struct ConvexityReport {
  std::size_t geodesics = 0;
  std::size_t samples = 0;
  double min_defect = 0.0;
  double tol = 0.0;
  std::vector<ConvexitySample> violations;  ///< worst first, capped
  bool pass = true;
};

/// Midpoint convexity of the field along sampled geodesics.
ConvexityReport convexity_check(const LengthSpace& space, const ScalarField& field,
                                std::size_t n_geodesics, double tol, std::uint64_t seed);

/// Cotangent Laplacian at the interior vertices of a flat mesh.
struct InteriorValues {
  std::vector<std::size_t> vertices;
  std::vector<double> values;
};

InteriorValues discrete_laplacian(const LengthSpace& space, const ScalarField& field);
InteriorValues discrete_laplacian(const MeshGeometry& mesh, std::span<const double> values);

struct SubharmonicReport {
  std::size_t tested = 0;
  double min_laplacian = kInfinity;
  std::optional<std::size_t> worst_vertex;
  std::vector<std::size_t> vanishing;
  std::vector<std::size_t> excluded;
  std::vector<std::pair<std::size_t, double>> violations;  ///< capped
  std::size_t violation_count = 0;
  double tol = 0.0;
  bool degenerate = false;  ///< field vanishes everywhere
  bool pass = true;
};

/// Vertices within 2h of the vanishing set are excluded, and with a positive
/// `boundary_band` also those closer than that (chart distance) to the
/// boundary.
SubharmonicReport subharmonic_check(const LengthSpace& space, const ScalarField& field, double tol,
                                    double boundary_band = 0.0);
SubharmonicReport log_subharmonic_check(const LengthSpace& space, const ScalarField& field, double tol,
                                        double boundary_band = 0.0);

nlohmann::json to_json(const ConvexityReport& r);
nlohmann::json to_json(const SubharmonicReport& r);

}  // namespace cat0lab
