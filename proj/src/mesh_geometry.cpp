#include "cat0lab/mesh_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "cat0lab/errors.hpp"

namespace cat0lab {

MeshGeometry::MeshGeometry(const LengthSpace& space, Lengths source) {
  if (!space.has_faces()) throw InvalidInput("space has no triangulation");
  if (source == Lengths::chart && !space.has_coords()) throw InvalidInput("space has no coords");
  faces_ = space.faces();
  const std::size_t n = space.vertex_count();
  const std::size_t nf = faces_.size();
  sides_.resize(nf);
  angles_.resize(nf);
  areas_.resize(nf);
  mixed_area_.assign(n, 0.0);
  bary_area_.assign(n, 0.0);
  angle_sum_.assign(n, 0.0);

  std::unordered_map<std::uint64_t, double> cot;
  cot.reserve(nf * 2);
  auto key = [](std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
  };

  for (std::size_t f = 0; f < nf; ++f) {
    const Face& t = faces_[f];
    for (int k = 0; k < 3; ++k) {
      const std::size_t p = t[(k + 1) % 3];
      const std::size_t q = t[(k + 2) % 3];
      sides_[f][k] = source == Lengths::chart ? (space.coord(p) - space.coord(q)).norm()
                                              : space.edge(*space.find_edge(p, q)).weight;
    }
    const auto& l = sides_[f];
    // Heron in the numerically stable ordering.
    std::array<double, 3> s = l;
    std::sort(s.begin(), s.end(), std::greater<>());
    const double h = (s[0] + (s[1] + s[2])) * (s[2] - (s[0] - s[1])) * (s[2] + (s[0] - s[1])) *
                     (s[0] + (s[1] - s[2]));
    if (!(h > 0.0)) throw InvalidInput("degenerate or non-metric triangle in mesh");
    areas_[f] = 0.25 * std::sqrt(h);
    bool obtuse = false;
    int obtuse_corner = -1;
    for (int k = 0; k < 3; ++k) {
      const double a = l[k], b = l[(k + 1) % 3], c = l[(k + 2) % 3];
      const double cosv = std::clamp((b * b + c * c - a * a) / (2.0 * b * c), -1.0, 1.0);
      angles_[f][k] = std::acos(cosv);
      angle_sum_[t[k]] += angles_[f][k];
      if (angles_[f][k] > 0.5 * kPi) {
        obtuse = true;
        obtuse_corner = k;
      }
      // cot of the corner angle = (b^2 + c^2 - a^2) / (4 area)
      cot[key(t[(k + 1) % 3], t[(k + 2) % 3])] += 0.5 * (b * b + c * c - a * a) / (4.0 * areas_[f]);
    }
    for (int k = 0; k < 3; ++k) bary_area_[t[k]] += areas_[f] / 3.0;
    if (obtuse) {
      for (int k = 0; k < 3; ++k) mixed_area_[t[k]] += areas_[f] * (k == obtuse_corner ? 0.5 : 0.25);
    } else {
      for (int k = 0; k < 3; ++k) {
        // Voronoi share: 1/8 (|pq|^2 cot r + |pr|^2 cot q) for corner p.
        const int q = (k + 1) % 3, r = (k + 2) % 3;
        const double lr = l[r], lq = l[q];  // |pq| opposite r, |pr| opposite q
        const double cot_q = std::cos(angles_[f][q]) / std::sin(angles_[f][q]);
        const double cot_r = std::cos(angles_[f][r]) / std::sin(angles_[f][r]);
        mixed_area_[t[k]] += 0.125 * (lr * lr * cot_r + lq * lq * cot_q);
      }
    }
  }

  ring_.assign(n, {});
  edges_.reserve(cot.size());
  for (const auto& [k, w] : cot) {
    const std::size_t a = k >> 32, b = k & 0xffffffffULL;
    edges_.push_back({a, b, w});
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const CotEdge& x, const CotEdge& y) { return x.a != y.a ? x.a < y.a : x.b < y.b; });
  for (const CotEdge& e : edges_) {
    ring_[e.a].push_back({e.b, e.weight});
    ring_[e.b].push_back({e.a, e.weight});
  }
  interior_.assign(n, false);
  for (std::size_t v = 0; v < n; ++v) interior_[v] = !space.is_boundary(v) && bary_area_[v] > 0.0;
}

}  // namespace cat0lab
