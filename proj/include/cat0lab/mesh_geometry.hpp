#pragma once

// Intrinsic triangle geometry of a triangulated space: corner angles,
// cotangent weights and vertex areas.

#include <array>
#include <cstddef>
#include <vector>

#include "cat0lab/metric_core.hpp"

namespace cat0lab {

class MeshGeometry {
 public:
  enum class Lengths { chart, weights };

  struct CotNeighbor {
    std::size_t vertex;
    double weight;  ///< 1/2 (cot alpha + cot beta)
  };

  /// Side lengths come from chart coordinates (the flat metric) or from the
  /// space's edge weights (the intrinsic metric of a deformed mesh).
  MeshGeometry(const LengthSpace& space, Lengths source);

  std::size_t vertex_count() const { return ring_.size(); }
  const std::vector<Face>& faces() const { return faces_; }

  /// Side length opposite corner k of face f.
  double side(std::size_t f, int k) const { return sides_[f][k]; }
  double angle(std::size_t f, int k) const { return angles_[f][k]; }
  double face_area(std::size_t f) const { return areas_[f]; }

  const std::vector<CotNeighbor>& cot_ring(std::size_t v) const { return ring_[v]; }
  double mixed_area(std::size_t v) const { return mixed_area_[v]; }
  double barycentric_area(std::size_t v) const { return bary_area_[v]; }
  double angle_sum(std::size_t v) const { return angle_sum_[v]; }

  bool interior(std::size_t v) const { return interior_[v]; }

  /// Undirected face edges (a < b) with their cotangent weights.
  struct CotEdge {
    std::size_t a;
    std::size_t b;
    double weight;
  };
  const std::vector<CotEdge>& cot_edges() const { return edges_; }

 private:
  std::vector<Face> faces_;
  std::vector<std::array<double, 3>> sides_;
  std::vector<std::array<double, 3>> angles_;
  std::vector<double> areas_;
  std::vector<std::vector<CotNeighbor>> ring_;
  std::vector<CotEdge> edges_;
  std::vector<double> mixed_area_;
  std::vector<double> bary_area_;
  std::vector<double> angle_sum_;
  std::vector<bool> interior_;
};

}  // namespace cat0lab
