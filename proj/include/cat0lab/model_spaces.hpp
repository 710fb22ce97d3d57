#pragma once

// Desk-scale model spaces with closed-form distances: flat and hyperbolic
// discs, Euclidean cones (as conformally flat discs) and metric star trees.

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "cat0lab/geometry.hpp"
#include "cat0lab/metric_core.hpp"

namespace cat0lab {

enum class ModelKind { flat_disc, hyperbolic_disc, cone, tree };

std::string to_string(ModelKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::flat_disc;
  /// Chart radius of the disc (Poincare-chart radius for hyperbolic discs,
  /// which must stay below 1).
  double radius = 1.0;
  double spacing = 0.02;
  double total_angle = 2.0 * kPi;  ///< cone only
  std::vector<double> legs;        ///< tree only
  /// Metric-graph stencil radius in units of the spacing; 0 picks
  /// default_stencil(spacing), values <= 1 keep only triangulation edges.
  double stencil = 0.0;
  std::size_t max_vertices = 400000;

  void validate() const;
};

/// Stencil radius (in lattice units) whose gauge anisotropy shrinks
/// linearly with the spacing.
double default_stencil(double spacing);

LengthSpace generate(const ModelSpec& spec);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

// Closed forms -------------------------------------------------------------

/// Distance in the Poincare disc model (curvature -1).
double hyperbolic_distance(Vec2 z, Vec2 w);

/// Distance on a Euclidean cone of total angle `total_angle` between points
/// given in cone polar coordinates (radius, angle).
double cone_distance(double total_angle, double r1, double theta1, double r2, double theta2);

struct ConePolar {
  double radius = 0.0;
  double angle = 0.0;
};

/// Cone polar coordinates of a chart point under the conformal factor
/// |z|^alpha, alpha = total_angle / 2pi - 1.
ConePolar cone_polar(Vec2 chart, double total_angle);

/// Closed-form distance between vertices of an oracle-tagged space.
double exact_distance(const LengthSpace& space, std::size_t a, std::size_t b);

/// Closed-form distance from a vertex to a chart point. Tree charts are
/// (leg index, distance from the centre).
double exact_distance_to_point(const LengthSpace& space, std::size_t a, Vec2 p);

/// Closed-form distance between two chart points of the tagged model.
double exact_chart_distance(const OracleTag& tag, Vec2 p, Vec2 q);

}  // namespace cat0lab
