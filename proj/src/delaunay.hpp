#pragma once

#include <span>
#include <vector>

#include "cat0lab/geometry.hpp"
#include "cat0lab/metric_core.hpp"

namespace cat0lab::detail {

/// Delaunay triangles (counter-clockwise) of a point set in general position.
std::vector<Face> delaunay_triangles(std::span<const Vec2> points);

}  // namespace cat0lab::detail
