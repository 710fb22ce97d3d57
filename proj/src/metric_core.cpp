#include "cat0lab/metric_core.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <unordered_set>

#include "cat0lab/errors.hpp"

namespace cat0lab {

std::string to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::euclidean: return "euclidean";
    case OracleKind::hyperbolic: return "hyperbolic";
    case OracleKind::cone: return "cone";
    case OracleKind::tree: return "tree";
  }
  return "unknown";
}

OracleKind oracle_kind_from_string(const std::string& name) {
  if (name == "euclidean") return OracleKind::euclidean;
  if (name == "hyperbolic") return OracleKind::hyperbolic;
  if (name == "cone") return OracleKind::cone;
  if (name == "tree") return OracleKind::tree;
  throw InvalidInput("unknown oracle kind '" + name + "'");
}

const std::vector<Vec2>& LengthSpace::coords() const {
  if (!coords_) throw InvalidInput("space has no chart coordinates");
  return *coords_;
}

const std::vector<std::size_t>& LengthSpace::boundary() const {
  if (!boundary_) throw InvalidInput("space has no boundary cycle");
  return *boundary_;
}

const std::vector<Face>& LengthSpace::faces() const {
  if (!faces_) throw InvalidInput("space has no triangulation");
  return *faces_;
}

void LengthSpace::check_vertex(std::size_t v) const {
  if (v >= vertex_count_) {
    throw InvalidInput("vertex " + std::to_string(v) + " out of range (" +
                       std::to_string(vertex_count_) + " vertices)");
  }
}

std::optional<std::size_t> LengthSpace::find_edge(std::size_t a, std::size_t b) const {
  if (a >= vertex_count_ || b >= vertex_count_) return std::nullopt;
  if (neighbors(a).size() > neighbors(b).size()) std::swap(a, b);
  for (const Neighbor& n : neighbors(a)) {
    if (n.vertex == b) return n.edge;
  }
  return std::nullopt;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::vector<std::size_t> face_edge_ids(const LengthSpace& space) {
  std::vector<std::size_t> ids;
  ids.reserve(space.faces().size() * 3);
  for (const Face& f : space.faces()) {
    for (int k = 0; k < 3; ++k) ids.push_back(*space.find_edge(f[k], f[(k + 1) % 3]));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace

double LengthSpace::nominal_spacing() const {
  std::vector<double> w;
  if (faces_) {
    for (std::size_t e : face_edge_ids(*this)) w.push_back(edges_[e].weight);
  } else {
    for (const WeightedEdge& e : edges_) w.push_back(e.weight);
  }
  return median(std::move(w));
}

double LengthSpace::chart_spacing() const {
  const auto& c = coords();
  std::vector<double> w;
  if (faces_) {
    for (std::size_t e : face_edge_ids(*this)) w.push_back((c[edges_[e].a] - c[edges_[e].b]).norm());
  } else {
    for (const WeightedEdge& e : edges_) w.push_back((c[e.a] - c[e.b]).norm());
  }
  return median(std::move(w));
}

LengthSpace LengthSpace::with_weights(std::vector<double> weights,
                                      std::optional<OracleTag> oracle) const {
  if (weights.size() != edges_.size()) throw InvalidInput("weight count does not match edge count");
  LengthSpace out = *this;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (!(weights[e] > 0.0) || !std::isfinite(weights[e])) {
      throw InvalidInput("edge " + std::to_string(e) + " has non-positive or non-finite weight");
    }
    out.edges_[e].weight = weights[e];
  }
  for (Neighbor& n : out.adjacency_) n.weight = weights[n.edge];
  out.oracle_ = oracle;
  return out;
}

LengthSpace build_space(std::size_t vertex_count, std::vector<WeightedEdge> edges,
                        SpaceAttributes attributes) {
  if (vertex_count == 0) throw InvalidInput("space needs at least one vertex");
  if (vertex_count > std::numeric_limits<std::uint32_t>::max() ||
      edges.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInput("space too large");
  }
  LengthSpace s;
  s.vertex_count_ = vertex_count;

  std::vector<std::size_t> degree(vertex_count, 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    WeightedEdge& we = edges[e];
    if (we.a >= vertex_count || we.b >= vertex_count) {
      throw InvalidInput("edge " + std::to_string(e) + " has an endpoint out of range");
    }
    if (we.a == we.b) throw InvalidInput("edge " + std::to_string(e) + " is a self loop");
    if (!(we.weight > 0.0) || !std::isfinite(we.weight)) {
      throw InvalidInput("edge " + std::to_string(e) + " has non-positive or non-finite weight");
    }
    if (we.a > we.b) std::swap(we.a, we.b);
    ++degree[we.a];
    ++degree[we.b];
  }

  s.offsets_.assign(vertex_count + 1, 0);
  for (std::size_t v = 0; v < vertex_count; ++v) s.offsets_[v + 1] = s.offsets_[v] + degree[v];
  s.adjacency_.resize(s.offsets_.back());
  std::vector<std::size_t> fill(s.offsets_.begin(), s.offsets_.end() - 1);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const WeightedEdge& we = edges[e];
    s.adjacency_[fill[we.a]++] = {static_cast<std::uint32_t>(we.b), static_cast<std::uint32_t>(e), we.weight};
    s.adjacency_[fill[we.b]++] = {static_cast<std::uint32_t>(we.a), static_cast<std::uint32_t>(e), we.weight};
  }
  for (std::size_t v = 0; v < vertex_count; ++v) {
    auto first = s.adjacency_.begin() + static_cast<std::ptrdiff_t>(s.offsets_[v]);
    auto last = s.adjacency_.begin() + static_cast<std::ptrdiff_t>(s.offsets_[v + 1]);
    std::sort(first, last, [](const auto& l, const auto& r) { return l.vertex < r.vertex; });
    for (auto it = first; it != last && it + 1 != last; ++it) {
      if (it->vertex == (it + 1)->vertex) {
        throw InvalidInput("duplicate edge between " + std::to_string(v) + " and " +
                           std::to_string(it->vertex));
      }
    }
  }
  s.edges_ = std::move(edges);

  // Connectivity.
  std::vector<bool> seen(vertex_count, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    for (const auto& n : s.neighbors(v)) {
      if (!seen[n.vertex]) {
        seen[n.vertex] = true;
        ++reached;
        stack.push_back(n.vertex);
      }
    }
  }
  if (reached != vertex_count) {
    throw InvalidInput("graph is disconnected (" + std::to_string(reached) + " of " +
                       std::to_string(vertex_count) + " vertices reachable)");
  }

  if (attributes.coords) {
    if (attributes.coords->size() != vertex_count) throw InvalidInput("coords size does not match vertex count");
    for (const Vec2& p : *attributes.coords) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidInput("non-finite coordinate");
    }
  }
  s.coords_ = std::move(attributes.coords);

  if (attributes.boundary) {
    const auto& b = *attributes.boundary;
    if (b.size() < 3) throw InvalidInput("boundary cycle needs at least 3 vertices");
    std::unordered_set<std::size_t> distinct;
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (b[k] >= vertex_count) throw InvalidInput("boundary vertex out of range");
      if (!distinct.insert(b[k]).second) throw InvalidInput("boundary cycle repeats a vertex");
      if (!s.find_edge(b[k], b[(k + 1) % b.size()])) {
        throw InvalidInput("boundary vertices " + std::to_string(b[k]) + " and " +
                           std::to_string(b[(k + 1) % b.size()]) + " are not adjacent");
      }
    }
    s.on_boundary_.assign(vertex_count, false);
    for (std::size_t v : b) s.on_boundary_[v] = true;
  }
  s.boundary_ = std::move(attributes.boundary);

  if (attributes.faces) {
    for (const Face& f : *attributes.faces) {
      for (int k = 0; k < 3; ++k) {
        if (f[k] >= vertex_count || !s.find_edge(f[k], f[(k + 1) % 3])) {
          throw InvalidInput("face side is not an edge of the space");
        }
      }
    }
  }
  s.faces_ = std::move(attributes.faces);

  if (attributes.oracle) {
    if (attributes.oracle->kind != OracleKind::tree && !s.coords_) {
      throw InvalidInput("oracle tag " + to_string(attributes.oracle->kind) + " requires coords");
    }
    if (attributes.oracle->kind == OracleKind::cone && !(attributes.oracle->total_angle > 0.0)) {
      throw InvalidInput("cone total angle must be positive");
    }
  }
  s.oracle_ = attributes.oracle;
  return s;
}

// ---------------------------------------------------------------------------

GeodesicPath::GeodesicPath(std::vector<std::size_t> vertices, std::vector<double> cumulative)
    : vertices_(std::move(vertices)), cumulative_(std::move(cumulative)) {
  if (vertices_.empty() || vertices_.size() != cumulative_.size()) {
    throw InvalidInput("geodesic path needs matching, non-empty vertex and length lists");
  }
}

PathPoint GeodesicPath::point_at(double t) const {
  PathPoint p;
  if (vertices_.size() == 1) {
    p.from = p.to = vertices_[0];
    return p;
  }
  t = std::clamp(t, 0.0, total_length());
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), t);
  std::size_t k = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  k = std::min(k, vertices_.size() - 2);
  p.segment = k;
  p.from = vertices_[k];
  p.to = vertices_[k + 1];
  p.edge_length = cumulative_[k + 1] - cumulative_[k];
  p.offset = std::clamp(t - cumulative_[k], 0.0, p.edge_length);
  return p;
}

std::size_t GeodesicPath::nearest_index(double t) const {
  auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), t);
  if (it == cumulative_.end()) return vertices_.size() - 1;
  std::size_t k = static_cast<std::size_t>(it - cumulative_.begin());
  if (k > 0 && t - cumulative_[k - 1] <= cumulative_[k] - t) return k - 1;
  return k;
}

Vec2 GeodesicPath::chart_point(const LengthSpace& space, double t) const {
  PathPoint p = point_at(t);
  if (p.edge_length <= 0.0) return space.coord(p.from);
  return lerp(space.coord(p.from), space.coord(p.to), p.offset / p.edge_length);
}

GeodesicPath GeodesicPath::reversed() const {
  std::vector<std::size_t> v(vertices_.rbegin(), vertices_.rend());
  std::vector<double> c(cumulative_.size());
  const double total = total_length();
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = total - cumulative_[cumulative_.size() - 1 - k];
  c.front() = 0.0;
  return {std::move(v), std::move(c)};
}

// ---------------------------------------------------------------------------

ShortestPaths::ShortestPaths(const LengthSpace& space)
    : space_(&space),
      dist_(space.vertex_count(), kInfinity),
      pred_(space.vertex_count(), std::numeric_limits<std::uint32_t>::max()),
      settled_(space.vertex_count(), false) {}

void ShortestPaths::reset() {
  for (std::size_t v : touched_) {
    dist_[v] = kInfinity;
    pred_[v] = std::numeric_limits<std::uint32_t>::max();
    settled_[v] = false;
  }
  touched_.clear();
  order_.clear();
}

void ShortestPaths::run(std::size_t source, std::span<const std::size_t> targets, double radius) {
  space_->check_vertex(source);
  reset();
  source_ = source;
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist_[source] = 0.0;
  touched_.push_back(source);
  heap.emplace(0.0, static_cast<std::uint32_t>(source));

  std::size_t remaining = 0;
  std::vector<std::size_t> wanted;
  if (!targets.empty()) {
    wanted.assign(targets.begin(), targets.end());
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
    for (std::size_t t : wanted) space_->check_vertex(t);
    remaining = wanted.size();
  }

  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (settled_[u] || d > dist_[u]) continue;
    if (dist_[u] > radius) break;
    settled_[u] = true;
    order_.push_back(u);
    if (!wanted.empty() && std::binary_search(wanted.begin(), wanted.end(), u)) {
      if (--remaining == 0) break;
    }
    const double du = dist_[u];
    for (const auto& n : space_->neighbors(u)) {
      const std::uint32_t v = n.vertex;
      if (settled_[v]) continue;
      const double nd = du + n.weight;
      const double old = dist_[v];
      if (old == kInfinity) touched_.push_back(v);
      if (nd < old - 1e-12 * std::max(1.0, old)) {
        dist_[v] = nd;
        pred_[v] = u;
        heap.emplace(nd, v);
      } else if (nd <= old + 1e-12 * std::max(1.0, old) && u < pred_[v]) {
        // Equal-length route through a smaller predecessor.
        dist_[v] = nd;
        pred_[v] = u;
        heap.emplace(nd, v);
      }
    }
  }
}

GeodesicPath ShortestPaths::path_to(std::size_t v) const {
  space_->check_vertex(v);
  if (!settled_[v]) throw InvalidInput("target vertex was not settled by the shortest path run");
  std::vector<std::size_t> rev{v};
  while (rev.back() != source_) rev.push_back(pred_[rev.back()]);
  std::vector<std::size_t> verts(rev.rbegin(), rev.rend());
  std::vector<double> cum(verts.size(), 0.0);
  for (std::size_t k = 1; k < verts.size(); ++k) {
    cum[k] = cum[k - 1] + space_->edge(*space_->find_edge(verts[k - 1], verts[k])).weight;
  }
  return {std::move(verts), std::move(cum)};
}

double distance(const LengthSpace& space, std::size_t a, std::size_t b) {
  space.check_vertex(a);
  space.check_vertex(b);
  ShortestPaths sp(space);
  const std::size_t t[] = {b};
  sp.run(a, t);
  return sp.distance(b);
}

GeodesicPath geodesic(const LengthSpace& space, std::size_t a, std::size_t b) {
  space.check_vertex(a);
  space.check_vertex(b);
  ShortestPaths sp(space);
  const std::size_t t[] = {b};
  sp.run(a, t);
  return sp.path_to(b);
}

std::vector<double> distances_from(const LengthSpace& space, std::size_t source) {
  ShortestPaths sp(space);
  sp.run(source);
  std::vector<double> out(space.vertex_count());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = sp.distance(v);
  return out;
}

double curve_length(const LengthSpace& space, std::span<const std::size_t> polyline) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < polyline.size(); ++k) {
    auto e = space.find_edge(polyline[k], polyline[k + 1]);
    if (!e) {
      throw InvalidInput("polyline vertices " + std::to_string(polyline[k]) + " and " +
                         std::to_string(polyline[k + 1]) + " are not adjacent");
    }
    total += space.edge(*e).weight;
  }
  return total;
}

double edge_point_distance(const PathPoint& p, const PathPoint& q,
                           std::span<const double> from_p_from,
                           std::span<const double> from_p_to) {
  auto to_q = [&](std::span<const double> row) {
    return std::min(row[q.from] + q.offset, row[q.to] + (q.edge_length - q.offset));
  };
  double best = std::min(p.offset + to_q(from_p_from), (p.edge_length - p.offset) + to_q(from_p_to));
  const bool same_edge = (p.from == q.from && p.to == q.to) || (p.from == q.to && p.to == q.from);
  if (same_edge) {
    const double q_from_p_from = p.from == q.from ? q.offset : q.edge_length - q.offset;
    best = std::min(best, std::abs(p.offset - q_from_p_from));
  }
  return best;
}

std::size_t nearest_vertex(const LengthSpace& space, Vec2 p) {
  const auto& c = space.coords();
  std::size_t best = 0;
  double best_d = kInfinity;
  for (std::size_t v = 0; v < c.size(); ++v) {
    const double d = (c[v] - p).norm2();
    if (d < best_d) {
      best_d = d;
      best = v;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const LengthSpace& space) {
  nlohmann::json j;
  j["vertices"] = space.vertex_count();
  auto edges = nlohmann::json::array();
  for (const WeightedEdge& e : space.edges()) edges.push_back({e.a, e.b, e.weight});
  j["edges"] = std::move(edges);
  if (space.has_coords()) {
    auto coords = nlohmann::json::array();
    for (const Vec2& p : space.coords()) coords.push_back({p.x, p.y});
    j["coords"] = std::move(coords);
  }
  if (space.has_boundary()) j["boundary"] = space.boundary();
  if (space.has_faces()) {
    auto faces = nlohmann::json::array();
    for (const Face& f : space.faces()) faces.push_back({f[0], f[1], f[2]});
    j["faces"] = std::move(faces);
  }
  if (space.oracle()) {
    nlohmann::json o{{"kind", to_string(space.oracle()->kind)}};
    if (space.oracle()->kind == OracleKind::cone) o["total_angle"] = space.oracle()->total_angle;
    j["oracle"] = std::move(o);
  }
  return j;
}

LengthSpace space_from_json(const nlohmann::json& j) {
  try {
    const std::size_t n = j.at("vertices").get<std::size_t>();
    std::vector<WeightedEdge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw InvalidInput("edge entries must be [i, j, w]");
      edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
    }
    SpaceAttributes attrs;
    if (j.contains("coords")) {
      std::vector<Vec2> c;
      for (const auto& p : j["coords"]) c.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      attrs.coords = std::move(c);
    }
    if (j.contains("boundary")) attrs.boundary = j["boundary"].get<std::vector<std::size_t>>();
    if (j.contains("faces")) {
      std::vector<Face> faces;
      for (const auto& f : j["faces"]) {
        faces.push_back({f.at(0).get<std::size_t>(), f.at(1).get<std::size_t>(), f.at(2).get<std::size_t>()});
      }
      attrs.faces = std::move(faces);
    }
    if (j.contains("oracle")) {
      const auto& o = j["oracle"];
      OracleTag tag;
      tag.kind = oracle_kind_from_string(o.is_string() ? o.get<std::string>() : o.at("kind").get<std::string>());
      if (tag.kind == OracleKind::cone) tag.total_angle = o.at("total_angle").get<double>();
      attrs.oracle = tag;
    }
    return build_space(n, std::move(edges), std::move(attrs));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed space JSON: ") + e.what());
  }
}

LengthSpace load_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open space file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("cannot parse '" + path + "': " + e.what());
  }
  return space_from_json(j);
}

void save_space(const LengthSpace& space, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << to_json(space).dump() << '\n';
}

}  // namespace cat0lab
