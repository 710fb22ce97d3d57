#include "cat0lab/target_space.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cat0lab/errors.hpp"
#include "cat0lab/model_spaces.hpp"

namespace cat0lab {

Vec2 as_vec(const TargetPoint& p) {
  if (const Vec2* v = std::get_if<Vec2>(&p)) return *v;
  throw InvalidInput("expected a planar target point");
}

const GraphPoint& as_graph_point(const TargetPoint& p) {
  if (const GraphPoint* g = std::get_if<GraphPoint>(&p)) return *g;
  throw InvalidInput("expected a graph target point");
}

nlohmann::json TargetSpace::point_to_json(const TargetPoint& p) const {
  if (const Vec2* v = std::get_if<Vec2>(&p)) return {v->x, v->y};
  const GraphPoint& g = std::get<GraphPoint>(p);
  if (g.is_vertex()) return {{"vertex", g.a}};
  return {{"edge", {g.a, g.b}}, {"t", g.t}};
}

TargetPoint TargetSpace::point_from_json(const nlohmann::json& j) const {
  TargetPoint p;
  try {
    if (j.is_array()) {
      if (j.size() != 2) throw InvalidInput("target point: expected [x, y]");
      p = Vec2{j[0].get<double>(), j[1].get<double>()};
    } else if (j.contains("vertex")) {
      const auto v = j["vertex"].get<std::size_t>();
      p = GraphPoint{v, v, 0.0};
    } else {
      const auto e = j.at("edge").get<std::array<std::size_t, 2>>();
      p = GraphPoint{e[0], e[1], j.at("t").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("target point: ") + e.what());
  }
  validate(p);
  return p;
}

namespace {

void check_weights(std::span<const TargetPoint> points, std::span<const double> weights) {
  if (points.empty()) throw InvalidInput("barycenter of an empty point list");
  if (points.size() != weights.size()) throw InvalidInput("barycenter weights do not match points");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("barycenter weights must be non-negative");
    sum += w;
  }
  if (!(sum > 0.0)) throw InvalidInput("barycenter weights sum to zero");
}

// Coincident planar points are their own barycenter; the weighted mean would
// only reproduce them up to rounding.
bool all_equal(std::span<const TargetPoint> points) {
  const Vec2 first = as_vec(points.front());
  return std::all_of(points.begin(), points.end(), [&](const TargetPoint& p) { return as_vec(p) == first; });
}

}  // namespace

// Euclidean plane -------------------------------------------------------------

double EuclideanPlane::distance(const TargetPoint& p, const TargetPoint& q) const {
  return (as_vec(p) - as_vec(q)).norm();
}

TargetPoint EuclideanPlane::geodesic_point(const TargetPoint& p, const TargetPoint& q, double t) const {
  return lerp(as_vec(p), as_vec(q), t);
}

TargetPoint EuclideanPlane::barycenter(std::span<const TargetPoint> points, std::span<const double> weights,
                                       const TargetPoint*) const {
  check_weights(points, weights);
  if (all_equal(points)) return points.front();
  Vec2 acc;
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    acc = acc + as_vec(points[i]) * weights[i];
    sum += weights[i];
  }
  return acc / sum;
}

void EuclideanPlane::validate(const TargetPoint& p) const {
  const Vec2 v = as_vec(p);
  if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw InvalidInput("non-finite target point");
}

// Hyperbolic plane ------------------------------------------------------------

namespace {

struct H3 {
  double t, x, y;
  H3 operator+(H3 o) const { return {t + o.t, x + o.x, y + o.y}; }
  H3 operator-(H3 o) const { return {t - o.t, x - o.x, y - o.y}; }
  H3 operator*(double s) const { return {t * s, x * s, y * s}; }
};

double minkowski(H3 a, H3 b) { return -a.t * b.t + a.x * b.x + a.y * b.y; }

H3 lift(Vec2 z) {
  const double s = z.norm2();
  const double k = 1.0 / (1.0 - s);
  return {(1.0 + s) * k, 2.0 * z.x * k, 2.0 * z.y * k};
}

Vec2 project(H3 p) { return Vec2{p.x, p.y} / (1.0 + p.t); }

H3 normalize(H3 p) {
  // Recompute the time coordinate so that p stays on the upper sheet.
  return {std::sqrt(1.0 + p.x * p.x + p.y * p.y), p.x, p.y};
}

H3 log_map(H3 base, H3 p) {
  const double c = -minkowski(base, p);
  const H3 u = p - base * c;
  const double n = std::sqrt(std::max(0.0, minkowski(u, u)));
  if (n < 1e-300) return {0.0, 0.0, 0.0};
  return u * (std::asinh(n) / n);
}

H3 exp_map(H3 base, H3 v) {
  const double n = std::sqrt(std::max(0.0, minkowski(v, v)));
  if (n < 1e-300) return base;
  return normalize(base * std::cosh(n) + v * (std::sinh(n) / n));
}

}  // namespace

double HyperbolicPlane::distance(const TargetPoint& p, const TargetPoint& q) const {
  return hyperbolic_distance(as_vec(p), as_vec(q));
}

TargetPoint HyperbolicPlane::geodesic_point(const TargetPoint& p, const TargetPoint& q, double t) const {
  const H3 a = lift(as_vec(p));
  return project(exp_map(a, log_map(a, lift(as_vec(q))) * t));
}

TargetPoint HyperbolicPlane::barycenter(std::span<const TargetPoint> points, std::span<const double> weights,
                                        const TargetPoint* start) const {
  check_weights(points, weights);
  if (all_equal(points)) return points.front();
  std::vector<H3> lifted(points.size());
  std::vector<Vec2> planar(points.size());
  double sum = 0.0;
  H3 mean{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < points.size(); ++i) {
    planar[i] = as_vec(points[i]);
    lifted[i] = lift(planar[i]);
    mean = mean + lifted[i] * weights[i];
    sum += weights[i];
  }
  auto objective = [&](H3 x) {
    const Vec2 z = project(x);
    double f = 0.0;
    for (std::size_t i = 0; i < planar.size(); ++i) {
      const double d = hyperbolic_distance(z, planar[i]);
      f += weights[i] * d * d;
    }
    return f;
  };
  H3 x = start ? lift(as_vec(*start)) : normalize(mean * (1.0 / std::sqrt(-minkowski(mean, mean))));
  double fx = objective(x);
  for (int iter = 0; iter < 500; ++iter) {
    H3 g{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < lifted.size(); ++i) g = g + log_map(x, lifted[i]) * (weights[i] / sum);
    const double gn = std::sqrt(std::max(0.0, minkowski(g, g)));
    if (gn < 1e-14) break;
    double step = 1.0;
    H3 next = exp_map(x, g);
    double fn = objective(next);
    while (fn > fx && step > 1e-6) {
      step *= 0.5;
      next = exp_map(x, g * step);
      fn = objective(next);
    }
    x = next;
    fx = fn;
    if (gn * step < 1e-13) break;
  }
  return project(x);
}

void HyperbolicPlane::validate(const TargetPoint& p) const {
  const Vec2 v = as_vec(p);
  if (!std::isfinite(v.x) || !std::isfinite(v.y) || !(v.norm2() < 1.0)) {
    throw InvalidInput("hyperbolic target points must lie inside the unit disc");
  }
}

// Tabulated graph targets -------------------------------------------------------

namespace {

constexpr std::size_t kMaxTabulated = 3000;

std::vector<double> all_pairs(const LengthSpace& space) {
  const std::size_t n = space.vertex_count();
  if (n > kMaxTabulated) {
    throw InvalidInput("graph target has " + std::to_string(n) + " vertices, above the limit of " +
                       std::to_string(kMaxTabulated));
  }
  std::vector<double> table(n * n);
  ShortestPaths sp(space);
  for (std::size_t v = 0; v < n; ++v) {
    sp.run(v);
    for (std::size_t u = 0; u < n; ++u) table[v * n + u] = sp.distance(u);
  }
  return table;
}

}  // namespace

TreeTarget::TreeTarget(LengthSpace tree) : tree_(std::move(tree)), n_(tree_.vertex_count()) {
  if (tree_.edge_count() + 1 != n_) throw InvalidInput("tree target must be a tree (edges = vertices - 1)");
  table_ = all_pairs(tree_);
}

double TreeTarget::edge_length(std::size_t a, std::size_t b) const {
  auto e = tree_.find_edge(a, b);
  if (!e) throw InvalidInput("tree point refers to a non-edge");
  return tree_.edge(*e).weight;
}

void TreeTarget::validate(const TargetPoint& p) const {
  const GraphPoint& g = as_graph_point(p);
  tree_.check_vertex(g.a);
  tree_.check_vertex(g.b);
  if (g.is_vertex()) {
    if (g.t != 0.0) throw InvalidInput("vertex tree point must have t = 0");
    return;
  }
  const double l = edge_length(g.a, g.b);
  if (!(g.t >= 0.0 && g.t <= l)) throw InvalidInput("tree point offset outside its edge");
}

namespace {

/// Distance from an edge point to a vertex given a vertex-distance lookup.
template <typename VD>
double point_vertex(const GraphPoint& p, double len, std::size_t x, VD vd) {
  if (p.is_vertex()) return vd(p.a, x);
  return std::min(p.t + vd(p.a, x), (len - p.t) + vd(p.b, x));
}

}  // namespace

double TreeTarget::distance(const TargetPoint& pp, const TargetPoint& qq) const {
  const GraphPoint& p = as_graph_point(pp);
  const GraphPoint& q = as_graph_point(qq);
  auto vd = [this](std::size_t a, std::size_t b) { return this->vd(a, b); };
  if (p.is_vertex()) {
    if (q.is_vertex()) return vd(p.a, q.a);
    return point_vertex(q, edge_length(q.a, q.b), p.a, vd);
  }
  const double lp = edge_length(p.a, p.b);
  if (!q.is_vertex()) {
    if (p.a == q.a && p.b == q.b) return std::abs(p.t - q.t);
    if (p.a == q.b && p.b == q.a) return std::abs(p.t - (lp - q.t));
  }
  const double lq = q.is_vertex() ? 0.0 : edge_length(q.a, q.b);
  auto to_q = [&](std::size_t u) { return q.is_vertex() ? vd(u, q.a) : point_vertex(q, lq, u, vd); };
  return std::min(p.t + to_q(p.a), (lp - p.t) + to_q(p.b));
}

std::vector<std::size_t> TreeTarget::vertex_path(std::size_t from, std::size_t to) const {
  std::vector<std::size_t> path{from};
  std::size_t x = from;
  while (x != to) {
    std::size_t next = x;
    for (const auto& nb : tree_.neighbors(x)) {
      if (vd(nb.vertex, to) < vd(x, to)) {
        next = nb.vertex;
        break;
      }
    }
    if (next == x) throw InvalidInput("tree path search failed");
    path.push_back(next);
    x = next;
  }
  return path;
}

TargetPoint TreeTarget::geodesic_point(const TargetPoint& pp, const TargetPoint& qq, double t) const {
  const GraphPoint& p = as_graph_point(pp);
  const GraphPoint& q = as_graph_point(qq);
  const double total = distance(pp, qq);
  double s = std::clamp(t, 0.0, 1.0) * total;

  auto canonical = [this](std::size_t u, std::size_t v, double x) -> GraphPoint {
    if (u == v || x <= 0.0) return {u, u, 0.0};
    const double l = edge_length(u, v);
    if (x >= l) return {v, v, 0.0};
    return {u, v, x};
  };

  if (!p.is_vertex() && !q.is_vertex()) {
    const double lp = edge_length(p.a, p.b);
    if ((p.a == q.a && p.b == q.b) || (p.a == q.b && p.b == q.a)) {
      const double tq = p.a == q.a ? q.t : lp - q.t;
      return canonical(p.a, p.b, p.t + (tq >= p.t ? s : -s));
    }
  }

  struct Segment {
    std::size_t u, v;
    double from, to;
  };
  std::vector<Segment> segments;
  auto to_q = [&](std::size_t u) {
    return q.is_vertex() ? vd(u, q.a) : point_vertex(q, edge_length(q.a, q.b), u, [this](auto a, auto b) { return vd(a, b); });
  };
  std::size_t exit = p.a;
  if (!p.is_vertex()) {
    const double lp = edge_length(p.a, p.b);
    if (p.t + to_q(p.a) <= (lp - p.t) + to_q(p.b)) {
      exit = p.a;
      segments.push_back({p.b, p.a, lp - p.t, lp});
    } else {
      exit = p.b;
      segments.push_back({p.a, p.b, p.t, lp});
    }
  }
  std::size_t entry = q.a;
  if (!q.is_vertex()) {
    const double lq = edge_length(q.a, q.b);
    entry = vd(exit, q.a) + q.t <= vd(exit, q.b) + (lq - q.t) ? q.a : q.b;
  }
  const auto path = vertex_path(exit, entry);
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    segments.push_back({path[k], path[k + 1], 0.0, edge_length(path[k], path[k + 1])});
  }
  if (!q.is_vertex()) {
    const double lq = edge_length(q.a, q.b);
    if (entry == q.a) segments.push_back({q.a, q.b, 0.0, q.t});
    else segments.push_back({q.b, q.a, 0.0, lq - q.t});
  }
  for (const Segment& seg : segments) {
    const double len = seg.to - seg.from;
    if (s <= len) return canonical(seg.u, seg.v, seg.from + s);
    s -= len;
  }
  return q;
}

TargetPoint TreeTarget::barycenter(std::span<const TargetPoint> points, std::span<const double> weights,
                                   const TargetPoint*) const {
  check_weights(points, weights);
  std::vector<std::size_t> anchors;
  for (const TargetPoint& tp : points) {
    const GraphPoint& g = as_graph_point(tp);
    anchors.push_back(g.a);
    anchors.push_back(g.b);
  }
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t v : anchors) {
    const auto path = vertex_path(anchors.front(), v);
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      candidates.emplace_back(std::min(path[k], path[k + 1]), std::max(path[k], path[k + 1]));
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.empty()) return GraphPoint{anchors.front(), anchors.front(), 0.0};

  double best = kInfinity;
  GraphPoint best_point;
  for (auto [a, b] : candidates) {
    const double l = edge_length(a, b);
    // Along this edge every squared distance is (s - m_i)^2.
    std::vector<double> m(points.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const GraphPoint& g = as_graph_point(points[i]);
      if (!g.is_vertex() && g.a == a && g.b == b) m[i] = g.t;
      else if (!g.is_vertex() && g.a == b && g.b == a) m[i] = l - g.t;
      else {
        const double da = distance(GraphPoint{a, a, 0.0}, g);
        const double db = distance(GraphPoint{b, b, 0.0}, g);
        m[i] = da < db ? -da : l + db;
      }
      num += weights[i] * m[i];
      den += weights[i];
    }
    const double s = std::clamp(num / den, 0.0, l);
    double f = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) f += weights[i] * (s - m[i]) * (s - m[i]);
    if (f < best) {
      best = f;
      best_point = s <= 0.0 ? GraphPoint{a, a, 0.0} : s >= l ? GraphPoint{b, b, 0.0} : GraphPoint{a, b, s};
    }
  }
  return best_point;
}

nlohmann::json TreeTarget::describe() const {
  return {{"kind", kind()}, {"vertices", tree_.vertex_count()}};
}

MeshTarget::MeshTarget(LengthSpace space) : space_(std::move(space)), n_(space_.vertex_count()) {
  table_ = all_pairs(space_);
}

std::size_t MeshTarget::vertex(const TargetPoint& p) const {
  const GraphPoint& g = as_graph_point(p);
  if (!g.is_vertex()) throw InvalidInput("mesh targets only hold vertex points");
  space_.check_vertex(g.a);
  return g.a;
}

void MeshTarget::validate(const TargetPoint& p) const { vertex(p); }

double MeshTarget::distance(const TargetPoint& p, const TargetPoint& q) const {
  return table_[vertex(p) * n_ + vertex(q)];
}

TargetPoint MeshTarget::geodesic_point(const TargetPoint& p, const TargetPoint& q, double t) const {
  const GeodesicPath path = geodesic(space_, vertex(p), vertex(q));
  const std::size_t k = path.nearest_index(std::clamp(t, 0.0, 1.0) * path.total_length());
  const std::size_t v = path.vertices()[k];
  return GraphPoint{v, v, 0.0};
}

TargetPoint MeshTarget::barycenter(std::span<const TargetPoint> points, std::span<const double> weights,
                                   const TargetPoint*) const {
  check_weights(points, weights);
  std::vector<std::size_t> idx(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) idx[i] = vertex(points[i]);
  double best = kInfinity;
  std::size_t arg = 0;
  for (std::size_t v = 0; v < n_; ++v) {
    double f = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double d = table_[v * n_ + idx[i]];
      f += weights[i] * d * d;
    }
    if (f < best) {
      best = f;
      arg = v;
    }
  }
  return GraphPoint{arg, arg, 0.0};
}

nlohmann::json MeshTarget::describe() const {
  return {{"kind", kind()}, {"vertices", space_.vertex_count()}};
}

std::unique_ptr<TargetSpace> make_target(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "euclidean-plane") return std::make_unique<EuclideanPlane>();
    if (kind == "hyperbolic-plane") return std::make_unique<HyperbolicPlane>();
    if (kind == "tree") {
      if (j.contains("space")) return std::make_unique<TreeTarget>(space_from_json(j["space"]));
      ModelSpec spec;
      spec.kind = ModelKind::tree;
      spec.legs = j.at("legs").get<std::vector<double>>();
      spec.spacing = j.value("h", 0.05);
      return std::make_unique<TreeTarget>(generate(spec));
    }
    if (kind == "mesh") {
      if (j.contains("space")) return std::make_unique<MeshTarget>(space_from_json(j["space"]));
      return std::make_unique<MeshTarget>(generate(model_spec_from_json(j.at("model"))));
    }
    throw InvalidInput("target.kind: unknown target '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("target: ") + e.what());
  }
}

}  // namespace cat0lab
