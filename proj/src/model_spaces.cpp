#include "cat0lab/model_spaces.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "cat0lab/errors.hpp"
#include "delaunay.hpp"

namespace cat0lab {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::flat_disc: return "flat-disc";
    case ModelKind::hyperbolic_disc: return "hyperbolic-disc";
    case ModelKind::cone: return "cone";
    case ModelKind::tree: return "tree";
  }
  return "unknown";
}

void ModelSpec::validate() const {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InvalidInput("spacing h must be positive");
  if (kind == ModelKind::tree) {
    if (legs.empty()) throw InvalidInput("tree needs at least one leg");
    for (double l : legs) {
      if (!(l > 0.0) || !std::isfinite(l)) throw InvalidInput("tree legs must be positive");
    }
    return;
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidInput("radius must be positive");
  if (kind == ModelKind::hyperbolic_disc && radius >= 1.0) {
    throw InvalidInput("hyperbolic disc radius is a Poincare-chart radius and must be < 1");
  }
  if (kind == ModelKind::cone && (!(total_angle > 0.0) || !std::isfinite(total_angle))) {
    throw InvalidInput("cone total angle must be positive");
  }
  if (spacing > radius) throw InvalidInput("spacing exceeds radius");
}

double default_stencil(double spacing) { return std::max(3.0, 1.4 / std::sqrt(spacing)); }

double hyperbolic_distance(Vec2 z, Vec2 w) {
  const double denom = (1.0 - z.norm2()) * (1.0 - w.norm2());
  if (!(denom > 0.0)) throw InvalidInput("point outside the Poincare disc");
  // cosh d = 1 + 2 s^2  <=>  d = 2 asinh(s), stable for small distances.
  return 2.0 * std::asinh(std::sqrt((z - w).norm2() / denom));
}

double cone_distance(double total_angle, double r1, double theta1, double r2, double theta2) {
  double diff = std::fmod(std::abs(theta1 - theta2), total_angle);
  const double delta = std::min(diff, total_angle - diff);
  if (delta >= kPi) return r1 + r2;
  return std::sqrt(std::max(0.0, r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * std::cos(delta)));
}

ConePolar cone_polar(Vec2 chart, double total_angle) {
  const double k = total_angle / (2.0 * kPi);  // 1 + alpha
  const double r = chart.norm();
  return {std::pow(r, k) / k, r > 0.0 ? chart.arg() * k : 0.0};
}

namespace {

double tree_distance(Vec2 a, Vec2 b) {
  // Chart coordinates of a star tree are (leg index, distance from centre).
  if (a.y == 0.0 || b.y == 0.0 || a.x == b.x) return std::abs(a.y - b.y);
  return a.y + b.y;
}

}  // namespace

double exact_chart_distance(const OracleTag& tag, Vec2 p, Vec2 q) {
  switch (tag.kind) {
    case OracleKind::euclidean: return (p - q).norm();
    case OracleKind::hyperbolic: return hyperbolic_distance(p, q);
    case OracleKind::cone: {
      const ConePolar a = cone_polar(p, tag.total_angle);
      const ConePolar b = cone_polar(q, tag.total_angle);
      return cone_distance(tag.total_angle, a.radius, a.angle, b.radius, b.angle);
    }
    case OracleKind::tree: return tree_distance(p, q);
  }
  throw InvalidInput("unknown oracle kind");
}

namespace {

const OracleTag& require_oracle(const LengthSpace& space) {
  if (!space.oracle()) throw InvalidInput("space carries no oracle tag");
  return *space.oracle();
}

}  // namespace

double exact_distance(const LengthSpace& space, std::size_t a, std::size_t b) {
  space.check_vertex(a);
  space.check_vertex(b);
  const OracleTag& tag = require_oracle(space);
  return exact_chart_distance(tag, space.coord(a), space.coord(b));
}

double exact_distance_to_point(const LengthSpace& space, std::size_t a, Vec2 p) {
  space.check_vertex(a);
  const OracleTag& tag = require_oracle(space);
  return exact_chart_distance(tag, space.coord(a), p);
}

namespace {

struct DiscMesh {
  std::vector<Vec2> points;
  std::vector<std::size_t> boundary;
  std::vector<Face> faces;
};

DiscMesh disc_mesh(double radius, double h, std::size_t max_vertices) {
  const double approx = 2.0 * kPi * radius * radius / (std::sqrt(3.0) * h * h) + 2.0 * kPi * radius / h;
  if (approx > static_cast<double>(max_vertices)) {
    throw InvalidInput("mesh would need about " + std::to_string(static_cast<std::size_t>(approx)) +
                       " vertices, above the budget of " + std::to_string(max_vertices));
  }
  DiscMesh m;
  const double row = h * std::sqrt(3.0) / 2.0;
  const double inner = radius - 0.5 * h;
  const int jmax = static_cast<int>(std::ceil(radius / row)) + 1;
  const int imax = static_cast<int>(std::ceil(radius / h)) + 2;
  for (int j = -jmax; j <= jmax; ++j) {
    for (int i = -imax - jmax; i <= imax + jmax; ++i) {
      const Vec2 p{h * (i + 0.5 * j), row * j};
      if (p.norm() <= inner) m.points.push_back(p);
    }
  }
  // Origin first so that it is easy to find.
  auto origin = std::find(m.points.begin(), m.points.end(), Vec2{0.0, 0.0});
  if (origin != m.points.end()) std::iter_swap(m.points.begin(), origin);

  const auto n_boundary = static_cast<std::size_t>(std::max(6.0, std::round(2.0 * kPi * radius / h)));
  for (std::size_t k = 0; k < n_boundary; ++k) {
    const double a = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n_boundary);
    m.boundary.push_back(m.points.size());
    m.points.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  m.faces = detail::delaunay_triangles(m.points);
  return m;
}

std::uint64_t pair_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

/// Triangulation edges plus every chart pair closer than `reach`.
std::vector<std::pair<std::size_t, std::size_t>> disc_edges(const DiscMesh& m, double reach) {
  std::vector<std::uint64_t> keys;
  for (const Face& f : m.faces) {
    for (int k = 0; k < 3; ++k) keys.push_back(pair_key(f[k], f[(k + 1) % 3]));
  }
  if (reach > 0.0) {
    std::unordered_map<std::int64_t, std::vector<std::size_t>> grid;
    auto cell = [&](Vec2 p) {
      return std::pair<std::int64_t, std::int64_t>{static_cast<std::int64_t>(std::floor(p.x / reach)),
                                                   static_cast<std::int64_t>(std::floor(p.y / reach))};
    };
    auto cell_key = [](std::int64_t cx, std::int64_t cy) { return (cx << 32) ^ (cy & 0xffffffff); };
    for (std::size_t v = 0; v < m.points.size(); ++v) {
      auto [cx, cy] = cell(m.points[v]);
      grid[cell_key(cx, cy)].push_back(v);
    }
    const double reach2 = reach * reach * (1.0 + 1e-9);
    for (std::size_t v = 0; v < m.points.size(); ++v) {
      auto [cx, cy] = cell(m.points[v]);
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          auto it = grid.find(cell_key(cx + dx, cy + dy));
          if (it == grid.end()) continue;
          for (std::size_t u : it->second) {
            if (u > v && (m.points[u] - m.points[v]).norm2() <= reach2) keys.push_back(pair_key(u, v));
          }
        }
      }
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(keys.size());
  for (std::uint64_t k : keys) out.emplace_back(static_cast<std::size_t>(k >> 32), static_cast<std::size_t>(k & 0xffffffffULL));
  return out;
}

LengthSpace generate_disc(const ModelSpec& spec, const OracleTag& tag) {
  DiscMesh m = disc_mesh(spec.radius, spec.spacing, spec.max_vertices);
  const double stencil = spec.stencil == 0.0 ? default_stencil(spec.spacing) : spec.stencil;
  const double reach = stencil > 1.0 ? stencil * spec.spacing : 0.0;
  std::vector<WeightedEdge> edges;
  for (auto [a, b] : disc_edges(m, reach)) {
    edges.push_back({a, b, exact_chart_distance(tag, m.points[a], m.points[b])});
  }
  SpaceAttributes attrs;
  attrs.coords = std::move(m.points);
  attrs.boundary = std::move(m.boundary);
  attrs.faces = std::move(m.faces);
  attrs.oracle = tag;
  const std::size_t n = attrs.coords->size();
  return build_space(n, std::move(edges), std::move(attrs));
}

LengthSpace generate_tree(const ModelSpec& spec) {
  std::vector<Vec2> coords{{0.0, 0.0}};
  std::vector<WeightedEdge> edges;
  for (std::size_t leg = 0; leg < spec.legs.size(); ++leg) {
    const double length = spec.legs[leg];
    const auto segments = static_cast<std::size_t>(std::max(1.0, std::ceil(length / spec.spacing - 1e-9)));
    std::size_t prev = 0;
    for (std::size_t s = 1; s <= segments; ++s) {
      const double r = length * static_cast<double>(s) / static_cast<double>(segments);
      coords.push_back({static_cast<double>(leg), r});
      edges.push_back({prev, coords.size() - 1, length / static_cast<double>(segments)});
      prev = coords.size() - 1;
    }
  }
  if (coords.size() > spec.max_vertices) throw InvalidInput("tree exceeds the vertex budget");
  SpaceAttributes attrs;
  const std::size_t n = coords.size();
  attrs.coords = std::move(coords);
  attrs.oracle = OracleTag{OracleKind::tree, 0.0};
  return build_space(n, std::move(edges), std::move(attrs));
}

}  // namespace

LengthSpace generate(const ModelSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ModelKind::flat_disc: return generate_disc(spec, {OracleKind::euclidean, 2.0 * kPi});
    case ModelKind::hyperbolic_disc: return generate_disc(spec, {OracleKind::hyperbolic, 2.0 * kPi});
    case ModelKind::cone: return generate_disc(spec, {OracleKind::cone, spec.total_angle});
    case ModelKind::tree: return generate_tree(spec);
  }
  throw InvalidInput("unknown model kind");
}

nlohmann::json to_json(const ModelSpec& spec) {
  nlohmann::json j{{"kind", to_string(spec.kind)}, {"h", spec.spacing}};
  if (spec.kind == ModelKind::tree) {
    j["legs"] = spec.legs;
  } else {
    j["radius"] = spec.radius;
    if (spec.kind == ModelKind::cone) j["total_angle"] = spec.total_angle;
  }
  if (spec.stencil != 0.0) j["stencil"] = spec.stencil;
  return j;
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  try {
    ModelSpec s;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "flat-disc") s.kind = ModelKind::flat_disc;
    else if (kind == "hyperbolic-disc") s.kind = ModelKind::hyperbolic_disc;
    else if (kind == "cone") s.kind = ModelKind::cone;
    else if (kind == "tree") s.kind = ModelKind::tree;
    else throw InvalidInput("space.kind: unknown model kind '" + kind + "'");
    s.spacing = j.at("h").get<double>();
    if (s.kind == ModelKind::tree) {
      s.legs = j.at("legs").get<std::vector<double>>();
    } else {
      s.radius = j.value("radius", 1.0);
    }
    if (s.kind == ModelKind::cone) {
      if (j.contains("total_angle")) s.total_angle = j["total_angle"].get<double>();
      else if (j.contains("total_angle_over_pi")) s.total_angle = kPi * j["total_angle_over_pi"].get<double>();
      else throw InvalidInput("space.total_angle: required for cones");
    }
    s.stencil = j.value("stencil", 0.0);
    s.max_vertices = j.value("max_vertices", s.max_vertices);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("space: ") + e.what());
  }
}

}  // namespace cat0lab
