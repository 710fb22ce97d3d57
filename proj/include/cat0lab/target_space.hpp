#pragma once

// Targets of harmonic maps: the Euclidean and hyperbolic planes in closed
// form, metric trees, and general meshes.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cat0lab/geometry.hpp"
#include "cat0lab/metric_core.hpp"

namespace cat0lab {

/// Point on an edge of a graph target at arc length t from `a` towards `b`;
/// a vertex is {v, v, 0}.
struct GraphPoint {
  std::size_t a = 0;
  std::size_t b = 0;
  double t = 0.0;

  bool is_vertex() const { return a == b; }
  bool operator==(const GraphPoint&) const = default;
};

using TargetPoint = std::variant<Vec2, GraphPoint>;

class TargetSpace {
 public:
  virtual ~TargetSpace() = default;

  virtual std::string kind() const = 0;
  virtual double distance(const TargetPoint& p, const TargetPoint& q) const = 0;
  /// Point at distance t d(p, q) from p on the geodesic towards q.
  virtual TargetPoint geodesic_point(const TargetPoint& p, const TargetPoint& q, double t) const = 0;
  /// Minimizer of sum w_i d(x, p_i)^2. `start` may warm-start iterative
  /// solvers.
  virtual TargetPoint barycenter(std::span<const TargetPoint> points, std::span<const double> weights,
                                 const TargetPoint* start = nullptr) const = 0;
  /// Throws InvalidInput when p is not a point of this space.
  virtual void validate(const TargetPoint& p) const = 0;

  virtual nlohmann::json point_to_json(const TargetPoint& p) const;
  virtual TargetPoint point_from_json(const nlohmann::json& j) const;
  virtual nlohmann::json describe() const { return {{"kind", kind()}}; }
};

class EuclideanPlane final : public TargetSpace {
 public:
  std::string kind() const override { return "euclidean-plane"; }
  double distance(const TargetPoint& p, const TargetPoint& q) const override;
  TargetPoint geodesic_point(const TargetPoint& p, const TargetPoint& q, double t) const override;
  TargetPoint barycenter(std::span<const TargetPoint> points, std::span<const double> weights,
                         const TargetPoint* start = nullptr) const override;
  void validate(const TargetPoint& p) const override;
};

/// Poincare disc model of the hyperbolic plane (curvature -1).
class HyperbolicPlane final : public TargetSpace {
 public:
  std::string kind() const override { return "hyperbolic-plane"; }
  double distance(const TargetPoint& p, const TargetPoint& q) const override;
  TargetPoint geodesic_point(const TargetPoint& p, const TargetPoint& q, double t) const override;
  /// Karcher fixed-point iteration in the hyperboloid model with step
  /// halving, stopped when the update moves less than 1e-13.
  TargetPoint barycenter(std::span<const TargetPoint> points, std::span<const double> weights,
                         const TargetPoint* start = nullptr) const override;
  void validate(const TargetPoint& p) const override;
};

/// Metric tree given as a weighted graph without cycles (at most 4000
/// vertices; all vertex distances are tabulated).
class TreeTarget final : public TargetSpace {
 public:
  explicit TreeTarget(LengthSpace tree);

  std::string kind() const override { return "tree"; }
  const LengthSpace& space() const { return tree_; }
  double distance(const TargetPoint& p, const TargetPoint& q) const override;
  TargetPoint geodesic_point(const TargetPoint& p, const TargetPoint& q, double t) const override;
  /// Exact: the objective is a quadratic on each edge of the subtree spanned
  /// by the points.
  TargetPoint barycenter(std::span<const TargetPoint> points, std::span<const double> weights,
                         const TargetPoint* start = nullptr) const override;
  void validate(const TargetPoint& p) const override;
  nlohmann::json describe() const override;

  GraphPoint vertex_point(std::size_t v) const { return {v, v, 0.0}; }
  /// Vertex path between two vertices.
  std::vector<std::size_t> vertex_path(std::size_t from, std::size_t to) const;

 private:
  double vd(std::size_t a, std::size_t b) const { return table_[a * n_ + b]; }
  double edge_length(std::size_t a, std::size_t b) const;

  LengthSpace tree_;
  std::size_t n_ = 0;
  std::vector<double> table_;
};

/// Arbitrary length space as a target, restricted to vertex points.
/// Barycenters are found by exhaustive search over vertices, so this is
/// meant for small meshes (at most 4000 vertices).
class MeshTarget final : public TargetSpace {
 public:
  explicit MeshTarget(LengthSpace space);

  std::string kind() const override { return "mesh"; }
  const LengthSpace& space() const { return space_; }
  double distance(const TargetPoint& p, const TargetPoint& q) const override;
  TargetPoint geodesic_point(const TargetPoint& p, const TargetPoint& q, double t) const override;
  TargetPoint barycenter(std::span<const TargetPoint> points, std::span<const double> weights,
                         const TargetPoint* start = nullptr) const override;
  void validate(const TargetPoint& p) const override;
  nlohmann::json describe() const override;

 private:
  std::size_t vertex(const TargetPoint& p) const;

  LengthSpace space_;
  std::size_t n_ = 0;
  std::vector<double> table_;
};

/// Target point accessors.
Vec2 as_vec(const TargetPoint& p);
const GraphPoint& as_graph_point(const TargetPoint& p);

std::unique_ptr<TargetSpace> make_target(const nlohmann::json& j);

}  // namespace cat0lab
