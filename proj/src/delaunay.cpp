#include "delaunay.hpp"

#include <algorithm>
#include <cstdint>

#include <boost/polygon/voronoi.hpp>

#include "cat0lab/errors.hpp"

namespace cat0lab::detail {

namespace bp = boost::polygon;

std::vector<Face> delaunay_triangles(std::span<const Vec2> points) {
  if (points.size() < 3) throw InvalidInput("triangulation needs at least 3 points");
  double extent = 0.0;
  for (const Vec2& p : points) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
  if (extent == 0.0) throw InvalidInput("degenerate point set");
  // Integer copies only decide connectivity; geometry keeps the exact coords.
  const double scale = 1.0e9 / extent;
  std::vector<bp::point_data<std::int32_t>> input;
  input.reserve(points.size());
  for (const Vec2& p : points) {
    input.emplace_back(static_cast<std::int32_t>(std::lround(p.x * scale)),
                       static_cast<std::int32_t>(std::lround(p.y * scale)));
  }
  bp::voronoi_diagram<double> vd;
  bp::construct_voronoi(input.begin(), input.end(), &vd);

  std::vector<Face> faces;
  std::vector<std::size_t> ring;
  for (const auto& vertex : vd.vertices()) {
    ring.clear();
    const auto* edge = vertex.incident_edge();
    do {
      ring.push_back(edge->cell()->source_index());
      edge = edge->rot_next();
    } while (edge != vertex.incident_edge());
    // Cocircular points give a polygon; fan it.
    for (std::size_t k = 1; k + 1 < ring.size(); ++k) {
      Face f{ring[0], ring[k], ring[k + 1]};
      const double area2 = (points[f[1]] - points[f[0]]).cross(points[f[2]] - points[f[0]]);
      if (area2 < 0.0) std::swap(f[1], f[2]);
      if (std::abs(area2) > 0.0) faces.push_back(f);
    }
  }
  return faces;
}

}  // namespace cat0lab::detail
