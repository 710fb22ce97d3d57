#pragma once

// Finite length spaces: weighted geodesic graphs with optional chart
// coordinates, triangulation and boundary cycle.

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cat0lab/geometry.hpp"

namespace cat0lab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class OracleKind { euclidean, hyperbolic, cone, tree };

/// Marks a space whose continuum model has a closed-form distance.
struct OracleTag {
  OracleKind kind = OracleKind::euclidean;
  double total_angle = 2.0 * kPi;  ///< cone only

  bool operator==(const OracleTag&) const = default;
};

std::string to_string(OracleKind kind);
OracleKind oracle_kind_from_string(const std::string& name);

struct WeightedEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;
};

using Face = std::array<std::size_t, 3>;

struct SpaceAttributes {
  std::optional<std::vector<Vec2>> coords;
  std::optional<std::vector<std::size_t>> boundary;
  std::optional<std::vector<Face>> faces;
  std::optional<OracleTag> oracle;
};

/// Immutable weighted graph standing in for a length space.
///
/// Invariants (checked by build_space): weights finite and > 0, graph
/// connected, boundary (if any) a simple cycle of edges, faces (if any)
/// bounded by existing edges.
class LengthSpace {
 public:
  struct Neighbor {
    std::uint32_t vertex;
    std::uint32_t edge;
    double weight;
  };

  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::span<const WeightedEdge> edges() const { return edges_; }
  const WeightedEdge& edge(std::size_t e) const { return edges_[e]; }

  std::span<const Neighbor> neighbors(std::size_t v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }

  bool has_coords() const { return coords_.has_value(); }
  const std::vector<Vec2>& coords() const;
  Vec2 coord(std::size_t v) const { return coords()[v]; }

  bool has_boundary() const { return boundary_.has_value(); }
  const std::vector<std::size_t>& boundary() const;
  bool is_boundary(std::size_t v) const { return !on_boundary_.empty() && on_boundary_[v]; }

  bool has_faces() const { return faces_.has_value(); }
  const std::vector<Face>& faces() const;

  const std::optional<OracleTag>& oracle() const { return oracle_; }

  std::optional<std::size_t> find_edge(std::size_t a, std::size_t b) const;

  /// Median weight of triangulation edges (all edges when there are no
  /// faces). Used as the space's resolution h.
  double nominal_spacing() const;

  /// Median chart length of triangulation edges; requires coords.
  double chart_spacing() const;

  /// Same topology and attributes with new edge weights.
  LengthSpace with_weights(std::vector<double> weights, std::optional<OracleTag> oracle) const;

  void check_vertex(std::size_t v) const;

 private:
  friend LengthSpace build_space(std::size_t, std::vector<WeightedEdge>, SpaceAttributes);

  std::size_t vertex_count_ = 0;
  std::vector<WeightedEdge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
  std::optional<std::vector<Vec2>> coords_;
  std::optional<std::vector<std::size_t>> boundary_;
  std::vector<bool> on_boundary_;
  std::optional<std::vector<Face>> faces_;
  std::optional<OracleTag> oracle_;
};

/// Validates and builds a space. Throws InvalidInput on non-positive weights,
/// out-of-range endpoints, duplicate edges, disconnected graphs and malformed
/// boundary cycles or faces.
LengthSpace build_space(std::size_t vertex_count, std::vector<WeightedEdge> edges,
                        SpaceAttributes attributes = {});

/// Location on a polyline: `offset` is the arc length from `from` towards `to`.
struct PathPoint {
  std::size_t segment = 0;
  std::size_t from = 0;
  std::size_t to = 0;
  double offset = 0.0;
  double edge_length = 0.0;
};

/// Arc-length parametrized vertex polyline.
class GeodesicPath {
 public:
  GeodesicPath() = default;
  GeodesicPath(std::vector<std::size_t> vertices, std::vector<double> cumulative);

  const std::vector<std::size_t>& vertices() const { return vertices_; }
  const std::vector<double>& cumulative_lengths() const { return cumulative_; }
  double total_length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  std::size_t front() const { return vertices_.front(); }
  std::size_t back() const { return vertices_.back(); }

  /// Point at arc length t, clamped to [0, total_length].
  PathPoint point_at(double t) const;

  /// Index into vertices() whose cumulative length is closest to t.
  std::size_t nearest_index(double t) const;

  /// Chart position at arc length t, linear along the containing edge.
  Vec2 chart_point(const LengthSpace& space, double t) const;

  GeodesicPath reversed() const;

 private:
  std::vector<std::size_t> vertices_;
  std::vector<double> cumulative_;
};

/// Reusable single-source shortest path state. Ties between equal-length
/// routes resolve to the smallest predecessor index, so paths are
/// deterministic.
class ShortestPaths {
 public:
  explicit ShortestPaths(const LengthSpace& space);

  /// Runs Dijkstra from `source`. Stops once every vertex in `targets` is
  /// settled (empty = settle everything) or the frontier passes `radius`.
  void run(std::size_t source, std::span<const std::size_t> targets = {},
           double radius = kInfinity);

  std::size_t source() const { return source_; }
  bool settled(std::size_t v) const { return settled_[v]; }
  /// Distance to a settled vertex (kInfinity otherwise).
  double distance(std::size_t v) const { return settled_[v] ? dist_[v] : kInfinity; }
  /// Vertices in the order they were settled.
  std::span<const std::size_t> settled_order() const { return order_; }
  GeodesicPath path_to(std::size_t v) const;

 private:
  void reset();

  const LengthSpace* space_;
  std::size_t source_ = 0;
  std::vector<double> dist_;
  std::vector<std::uint32_t> pred_;
  std::vector<bool> settled_;
  std::vector<std::size_t> touched_;
  std::vector<std::size_t> order_;
};

double distance(const LengthSpace& space, std::size_t a, std::size_t b);
GeodesicPath geodesic(const LengthSpace& space, std::size_t a, std::size_t b);
std::vector<double> distances_from(const LengthSpace& space, std::size_t source);

/// Sum of traversed edge weights; consecutive vertices must be adjacent.
double curve_length(const LengthSpace& space, std::span<const std::size_t> polyline);

/// Shortest-path distance between two points on edges, given full distance
/// rows from the endpoints of p's edge (`from_p_from`, `from_p_to`).
double edge_point_distance(const PathPoint& p, const PathPoint& q,
                           std::span<const double> from_p_from,
                           std::span<const double> from_p_to);

/// Vertex whose chart coordinates are closest to `p`.
std::size_t nearest_vertex(const LengthSpace& space, Vec2 p);

nlohmann::json to_json(const LengthSpace& space);
LengthSpace space_from_json(const nlohmann::json& j);
LengthSpace load_space(const std::string& path);
void save_space(const LengthSpace& space, const std::string& path);

}  // namespace cat0lab
