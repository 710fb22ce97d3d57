#include "cat0lab/cat0_verify.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "cat0lab/errors.hpp"
#include "cat0lab/rng.hpp"

namespace cat0lab {

unsigned default_thread_count() {
  if (const char* env = std::getenv("LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return 1;
}

namespace {

struct SidePoint {
  int side = 0;
  std::size_t vertex = 0;
  double t = 0.0;  ///< arc length from the side's start
};

/// Interior samples of a side at equal arc-length fractions, snapped to
/// path vertices; corners and duplicates are dropped.
std::vector<SidePoint> side_points(const GeodesicPath& path, int side, std::size_t k) {
  std::vector<SidePoint> out;
  const std::size_t last = path.vertices().size() - 1;
  std::size_t prev = 0;
  for (std::size_t i = 1; i <= k; ++i) {
    const double t = path.total_length() * static_cast<double>(i) / static_cast<double>(k + 1);
    const std::size_t idx = path.nearest_index(t);
    if (idx == 0 || idx == last || idx == prev) continue;
    prev = idx;
    out.push_back({side, path.vertices()[idx], path.cumulative_lengths()[idx]});
  }
  return out;
}

class TriangleEvaluator {
 public:
  explicit TriangleEvaluator(const LengthSpace& space) : space_(space), sp_(space) {}

  /// Side lengths |v0 v1| and |v0 v2| from one run; kept for the next
  /// evaluate() call on the same v0.
  std::pair<double, double> first_sides(std::size_t v0, std::size_t v1, std::size_t v2) {
    const std::size_t targets[] = {v1, v2};
    sp_.run(v0, targets);
    g0_ = sp_.path_to(v1);
    g2_ = sp_.path_to(v2).reversed();
    prepared_ = {v0, v1, v2};
    return {g0_.total_length(), g2_.total_length()};
  }

  /// Returns nullopt when |v1 v2| is below min_side.
  std::optional<TriangleResult> evaluate(std::size_t v0, std::size_t v1, std::size_t v2, std::size_t k,
                                         double min_side, std::vector<double>* slacks) {
    if (prepared_ != std::array<std::size_t, 3>{v0, v1, v2}) first_sides(v0, v1, v2);
    const std::vector<SidePoint> int0 = side_points(g0_, 0, k);
    const std::vector<SidePoint> int2 = side_points(g2_, 2, k);

    std::vector<std::size_t> targets{v2};
    for (const SidePoint& p : int2) targets.push_back(p.vertex);
    sp_.run(v1, targets);
    const GeodesicPath g1 = sp_.path_to(v2);
    const double l0 = g0_.total_length(), l1 = g1.total_length(), l2 = g2_.total_length();
    if (l1 < min_side) return std::nullopt;

    const double tol = 1e-9 * std::max({1.0, l0, l1, l2});
    if (l0 > l1 + l2 + tol || l1 > l0 + l2 + tol || l2 > l0 + l1 + tol) {
      throw InvalidInput("triangle inequality violated: the space is corrupted");
    }
    // Comparison triangle A0 = 0, A1 on the x-axis.
    const Vec2 a0{0.0, 0.0}, a1{l0, 0.0};
    const double x = l0 > 0.0 ? (l0 * l0 + l2 * l2 - l1 * l1) / (2.0 * l0) : 0.0;
    const Vec2 a2{x, std::sqrt(std::max(0.0, l2 * l2 - x * x))};
    const double lengths[3] = {l0, l1, l2};
    const Vec2 starts[3] = {a0, a1, a2};
    const Vec2 ends[3] = {a1, a2, a0};
    auto position = [&](int side, double t) {
      return lengths[side] > 0.0 ? lerp(starts[side], ends[side], t / lengths[side]) : starts[side];
    };

    TriangleResult r;
    r.v0 = v0;
    r.v1 = v1;
    r.v2 = v2;
    r.sides[0] = l0;
    r.sides[1] = l1;
    r.sides[2] = l2;
    auto record = [&](const SidePoint& p, const SidePoint& q, double actual) {
      const double comparison = (position(p.side, p.t) - position(q.side, q.t)).norm();
      const double slack = comparison - actual;
      ++r.pairs;
      if (slacks) slacks->push_back(slack);
      if (slack < r.slack) {
        r.slack = slack;
        r.actual = actual;
        r.comparison = comparison;
        r.t1 = p.side + (lengths[p.side] > 0.0 ? p.t / lengths[p.side] : 0.0);
        r.t2 = q.side + (lengths[q.side] > 0.0 ? q.t / lengths[q.side] : 0.0);
      }
    };

    const SidePoint c0{0, v0, 0.0}, c1{1, v1, 0.0}, c2{2, v2, 0.0};
    for (const SidePoint& p : int2) record(c1, p, sp_.distance(p.vertex));

    const std::vector<SidePoint> int1 = side_points(g1, 1, k);
    for (const SidePoint& p : int1) {
      targets.assign({v0});
      for (const SidePoint& q : int0) targets.push_back(q.vertex);
      for (const SidePoint& q : int2) targets.push_back(q.vertex);
      sp_.run(p.vertex, targets);
      record(p, c0, sp_.distance(v0));
      for (const SidePoint& q : int0) record(q, p, sp_.distance(q.vertex));
      for (const SidePoint& q : int2) record(p, q, sp_.distance(q.vertex));
    }
    for (const SidePoint& p : int0) {
      targets.assign({v2});
      for (const SidePoint& q : int2) targets.push_back(q.vertex);
      sp_.run(p.vertex, targets);
      record(p, c2, sp_.distance(v2));
      for (const SidePoint& q : int2) record(p, q, sp_.distance(q.vertex));
    }
    prepared_ = {kNone, kNone, kNone};
    return r;
  }

  ShortestPaths& paths() { return sp_; }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  const LengthSpace& space_;
  ShortestPaths sp_;
  GeodesicPath g0_, g2_;
  std::array<std::size_t, 3> prepared_{kNone, kNone, kNone};
};

void finish(ComparisonReport& report, double slack_sum) {
  for (const TriangleResult& t : report.triangles) {
    report.pairs_tested += t.pairs;
    if (t.pairs > 0 && (!report.worst || t.slack < report.worst->slack)) report.worst = t;
  }
  report.triangles_tested = report.triangles.size();
  report.min_slack = report.worst ? report.worst->slack : 0.0;
  report.mean_slack = report.pairs_tested ? slack_sum / static_cast<double>(report.pairs_tested) : 0.0;
  report.pass = report.min_slack >= -report.tol;
}

/// Vertices within `radius` of a random centre.
std::span<const std::size_t> random_ball(const LengthSpace& space, ShortestPaths& sp, Rng& rng, double radius) {
  sp.run(rng.index(space.vertex_count()), {}, radius);
  return sp.settled_order();
}

}  // namespace

ComparisonReport comparison_test(const LengthSpace& space, std::size_t v0, std::size_t v1, std::size_t v2,
                                 std::size_t n_side_points, double tol) {
  space.check_vertex(v0);
  space.check_vertex(v1);
  space.check_vertex(v2);
  if (v0 == v1 || v1 == v2 || v0 == v2) throw InvalidInput("comparison test needs three distinct vertices");
  TriangleEvaluator eval(space);
  std::vector<double> slacks;
  ComparisonReport report;
  report.tol = tol;
  report.h = space.nominal_spacing();
  report.triangles.push_back(*eval.evaluate(v0, v1, v2, n_side_points, 0.0, &slacks));
  double sum = 0.0;
  for (double s : slacks) sum += s;
  finish(report, sum);
  return report;
}

ComparisonReport cat0_scan(const LengthSpace& space, const ScanParams& params) {
  ComparisonReport report;
  report.h = space.nominal_spacing();
  report.tol = params.tol.value_or(3.0 * report.h);
  const double min_side = params.min_side * report.h;
  const double radius = params.local_radius * report.h;
  const std::size_t n = space.vertex_count();
  if (n < 3) throw InvalidInput("space too small for triangles");

  std::vector<TriangleResult> results(params.triangles);
  std::vector<double> sums(params.triangles, 0.0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    TriangleEvaluator eval(space);
    ShortestPaths ball_paths(space);
    std::vector<double> slacks;
    try {
      for (std::size_t i = next++; i < params.triangles; i = next++) {
        Rng rng = Rng::stream(params.seed, i);
        std::optional<TriangleResult> result;
        for (int attempt = 0; attempt < 200 && !result; ++attempt) {
          std::size_t v[3];
          if (rng.uniform() < params.local_fraction) {
            auto ball = random_ball(space, ball_paths, rng, radius);
            if (ball.size() < 3) continue;
            for (auto& x : v) x = ball[rng.index(ball.size())];
          } else {
            for (auto& x : v) x = rng.index(n);
          }
          if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2]) continue;
          auto [l0, l2] = eval.first_sides(v[0], v[1], v[2]);
          if (l0 < min_side || l2 < min_side) continue;
          slacks.clear();
          result = eval.evaluate(v[0], v[1], v[2], params.side_points, min_side, &slacks);
        }
        if (!result) throw InvalidInput("could not sample a non-degenerate triangle (space too small for 4h sides?)");
        results[i] = *result;
        for (double s : slacks) sums[i] += s;
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = params.triangles;
    }
  };

  const unsigned threads = std::max(1u, params.threads ? params.threads : default_thread_count());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  report.triangles = std::move(results);
  double sum = 0.0;
  for (double s : sums) sum += s;
  finish(report, sum);
  return report;
}

void write_slack_csv(const ComparisonReport& report, std::ostream& out) {
  out << "v0,v1,v2,t1,t2,actual,comparison,slack\n";
  char buf[256];
  for (const TriangleResult& t : report.triangles) {
    if (t.pairs == 0) continue;
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.6f,%.6f,%.9g,%.9g,%.9g\n", t.v0, t.v1, t.v2, t.t1, t.t2,
                  t.actual, t.comparison, t.slack);
    out << buf;
  }
}

// Distance convexity ------------------------------------------------------------

DistanceConvexityReport geodesic_distance_convexity(const LengthSpace& space, std::size_t n_pairs, double tol,
                                                    std::uint64_t seed) {
  DistanceConvexityReport report;
  report.tol = tol;
  const std::size_t n = space.vertex_count();
  const double h = space.nominal_spacing();
  ShortestPaths sp(space);
  ShortestPaths ball_paths(space);

  for (std::size_t i = 0; i < n_pairs; ++i) {
    Rng rng = Rng::stream(seed, i);
    std::size_t v[4];
    bool ok = false;
    for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
      if (rng.uniform() < 0.5) {
        auto ball = random_ball(space, ball_paths, rng, 10.0 * h);
        for (auto& x : v) x = ball[rng.index(ball.size())];
        // Half of the local pairs share their starting point, the classic
        // configuration for comparison-angle failures.
        if (rng.uniform() < 0.5) v[2] = v[0];
      } else {
        for (auto& x : v) x = rng.index(n);
      }
      ok = v[0] != v[1] && v[2] != v[3];
    }
    if (!ok) continue;
    std::size_t t1[] = {v[1]};
    sp.run(v[0], t1);
    const GeodesicPath g1 = sp.path_to(v[1]);
    std::size_t t2[] = {v[3]};
    sp.run(v[2], t2);
    const GeodesicPath g2 = sp.path_to(v[3]);

    std::vector<std::array<double, 3>> triples{{0.0, 1.0, 0.5}};
    for (int k = 0; k < 3; ++k) {
      const double a = rng.uniform(), b = rng.uniform();
      triples.push_back({a, b, 0.5 * (a + b)});
    }
    std::vector<std::pair<PathPoint, PathPoint>> points;
    std::vector<std::size_t> sources, targets;
    for (const auto& tr : triples) {
      for (double t : tr) {
        PathPoint p = g1.point_at(t * g1.total_length());
        PathPoint q = g2.point_at(t * g2.total_length());
        points.emplace_back(p, q);
        sources.push_back(p.from);
        sources.push_back(p.to);
        targets.push_back(q.from);
        targets.push_back(q.to);
      }
    }
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    std::map<std::pair<std::size_t, std::size_t>, double> table;
    for (std::size_t s : sources) {
      sp.run(s, targets);
      for (std::size_t t : targets) table[{s, t}] = sp.distance(t);
    }
    auto dist = [&](const PathPoint& p, const PathPoint& q) {
      const double sp_ = p.edge_length > 0.0 ? p.offset / p.edge_length : 0.0;
      const double sq = q.edge_length > 0.0 ? q.offset / q.edge_length : 0.0;
      if (p.edge_length > 0.0 && q.edge_length > 0.0) {
        if (p.from == q.from && p.to == q.to) return std::abs(p.offset - q.offset);
        if (p.from == q.to && p.to == q.from) return std::abs(p.offset - (q.edge_length - q.offset));
      }
      return (1 - sp_) * (1 - sq) * table[{p.from, q.from}] + (1 - sp_) * sq * table[{p.from, q.to}] +
             sp_ * (1 - sq) * table[{p.to, q.from}] + sp_ * sq * table[{p.to, q.to}];
    };
    for (std::size_t k = 0; k < triples.size(); ++k) {
      const double ga = dist(points[3 * k].first, points[3 * k].second);
      const double gb = dist(points[3 * k + 1].first, points[3 * k + 1].second);
      const double gm = dist(points[3 * k + 2].first, points[3 * k + 2].second);
      report.min_defect = std::min(report.min_defect, 0.5 * (ga + gb) - gm);
      ++report.samples;
    }
    ++report.pairs;
  }
  if (report.samples == 0) report.min_defect = 0.0;
  report.pass = report.min_defect >= -tol;
  return report;
}

// Majorization ------------------------------------------------------------------

namespace {

using BatchDistance = std::function<std::vector<double>(std::size_t, std::span<const std::size_t>)>;

MajorizationReport majorize(const LengthSpace& y, std::span<const double> curve_segments,
                            std::span<const std::size_t> assignment, const BatchDistance& image_distance,
                            std::size_t n_pairs, double tol, std::uint64_t seed) {
  MajorizationReport report;
  report.tol = tol;
  const auto& boundary = y.boundary();
  const std::size_t nb = boundary.size();
  const std::size_t m = curve_segments.size();
  if (assignment.size() != nb) throw InvalidInput("assignment does not cover the boundary cycle");

  // (c) cyclic bijection onto the assigned curve samples.
  std::size_t winding = 0;
  for (std::size_t k = 0; k < nb; ++k) {
    if (assignment[k] >= m) throw InvalidInput("assignment index outside the curve");
    const std::size_t a = assignment[k], b = assignment[(k + 1) % nb];
    if (a == b) report.bijective = false;
    winding += (b + m - a) % m;
  }
  if (winding != m) report.bijective = false;

  // (b) cumulative arc length, measured forward along the curve.
  double cum_y = 0.0, cum_x = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    const std::size_t u = boundary[k], v = boundary[(k + 1) % nb];
    const double wy = y.edge(*y.find_edge(u, v)).weight;
    double wx = 0.0;
    for (std::size_t j = assignment[k]; j != assignment[(k + 1) % nb]; j = (j + 1) % m) wx += curve_segments[j];
    if (assignment[k] == assignment[(k + 1) % nb]) wx = 0.0;
    cum_y += wy;
    cum_x += wx;
    report.max_segment_drift = std::max(report.max_segment_drift, std::abs(wy - wx));
    report.max_arc_drift = std::max(report.max_arc_drift, std::abs(cum_y - cum_x));
  }
  report.boundary_length_y = cum_y;
  for (double s : curve_segments) report.boundary_length_x += s;
  report.arc_length = report.max_arc_drift <= tol;

  // (a) shortness on sampled pairs, grouped by source.
  const std::size_t n = y.vertex_count();
  const double h = y.nominal_spacing();
  const auto sources = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_pairs))));
  ShortestPaths sp(y), ball_paths(y);
  std::size_t done = 0;
  for (std::size_t s = 0; s < sources && done < n_pairs; ++s) {
    Rng rng = Rng::stream(seed, s);
    const std::size_t count = std::min((n_pairs - done + (sources - s) - 1) / (sources - s), n_pairs - done);
    std::vector<std::size_t> targets(count);
    std::size_t a = 0;
    if (s % 2 == 1) {
      auto ball = random_ball(y, ball_paths, rng, 10.0 * h);
      std::vector<std::size_t> pool(ball.begin(), ball.end());
      a = pool.front();
      for (auto& t : targets) t = pool[rng.index(pool.size())];
    } else {
      a = rng.index(n);
      for (auto& t : targets) t = rng.index(n);
    }
    sp.run(a, targets);
    const std::vector<double> dx = image_distance(a, targets);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      report.max_stretch_excess = std::max(report.max_stretch_excess, dx[i] - sp.distance(targets[i]));
    }
    done += count;
  }
  report.pairs = done;
  report.short_map = report.max_stretch_excess <= tol;
  report.pass = report.short_map && report.arc_length && report.bijective;
  return report;
}

}  // namespace

MajorizationReport majorization_check(const LengthSpace& y, const TargetSpace& x,
                                      std::span<const TargetPoint> images, std::span<const TargetPoint> curve,
                                      std::span<const std::size_t> assignment, std::size_t n_pairs, double tol,
                                      std::uint64_t seed) {
  if (images.size() != y.vertex_count()) throw InvalidInput("map does not cover the vertices of Y");
  if (curve.size() < 3) throw InvalidInput("curve needs at least three samples");
  const auto& boundary = y.boundary();
  if (assignment.size() != boundary.size()) throw InvalidInput("assignment does not cover the boundary cycle");
  for (std::size_t k = 0; k < boundary.size(); ++k) {
    if (assignment[k] >= curve.size() || x.distance(images[boundary[k]], curve[assignment[k]]) > 1e-9) {
      throw InvalidInput("boundary mismatch: boundary vertex " + std::to_string(boundary[k]) +
                         " does not map onto its curve sample");
    }
  }
  std::vector<double> segments(curve.size());
  for (std::size_t j = 0; j < curve.size(); ++j) segments[j] = x.distance(curve[j], curve[(j + 1) % curve.size()]);
  BatchDistance dist = [&](std::size_t a, std::span<const std::size_t> bs) {
    std::vector<double> out(bs.size());
    for (std::size_t i = 0; i < bs.size(); ++i) out[i] = x.distance(images[a], images[bs[i]]);
    return out;
  };
  return majorize(y, segments, assignment, dist, n_pairs, tol, seed);
}

MajorizationReport majorization_check(const LengthSpace& y, const LengthSpace& x, std::span<const std::size_t> map,
                                      std::span<const std::size_t> curve, std::size_t n_pairs, double tol,
                                      std::uint64_t seed) {
  if (map.size() != y.vertex_count()) throw InvalidInput("map does not cover the vertices of Y");
  for (std::size_t v : map) x.check_vertex(v);
  if (curve.size() < 3) throw InvalidInput("curve needs at least three samples");
  std::map<std::size_t, std::size_t> position;
  for (std::size_t j = 0; j < curve.size(); ++j) {
    x.check_vertex(curve[j]);
    if (!position.emplace(curve[j], j).second) throw InvalidInput("curve repeats a vertex");
  }
  const auto& boundary = y.boundary();
  std::vector<std::size_t> assignment(boundary.size());
  for (std::size_t k = 0; k < boundary.size(); ++k) {
    auto it = position.find(map[boundary[k]]);
    if (it == position.end()) {
      throw InvalidInput("boundary mismatch: boundary vertex " + std::to_string(boundary[k]) +
                         " does not map onto the curve");
    }
    assignment[k] = it->second;
  }
  ShortestPaths sp(x);
  std::vector<double> segments(curve.size());
  for (std::size_t j = 0; j < curve.size(); ++j) {
    const std::size_t a = curve[j], b = curve[(j + 1) % curve.size()];
    if (auto e = x.find_edge(a, b)) {
      segments[j] = x.edge(*e).weight;
    } else {
      const std::size_t t[] = {b};
      sp.run(a, t);
      segments[j] = sp.distance(b);
    }
  }
  BatchDistance dist = [&](std::size_t a, std::span<const std::size_t> bs) {
    std::vector<std::size_t> targets(bs.size());
    for (std::size_t i = 0; i < bs.size(); ++i) targets[i] = map[bs[i]];
    sp.run(map[a], targets);
    std::vector<double> out(bs.size());
    for (std::size_t i = 0; i < bs.size(); ++i) out[i] = sp.distance(targets[i]);
    return out;
  };
  return majorize(y, segments, assignment, dist, n_pairs, tol, seed);
}

// JSON ----------------------------------------------------------------------------

nlohmann::json to_json(const TriangleResult& t) {
  return {{"vertices", {t.v0, t.v1, t.v2}}, {"sides", {t.sides[0], t.sides[1], t.sides[2]}},
          {"pairs", t.pairs}, {"t1", t.t1}, {"t2", t.t2}, {"actual", t.actual},
          {"comparison", t.comparison}, {"slack", t.slack}};
}

nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json j{{"verdict", r.pass ? "PASS" : "FAIL"},
                   {"triangles_tested", r.triangles_tested},
                   {"pairs_tested", r.pairs_tested},
                   {"min_slack", r.min_slack},
                   {"mean_slack", r.mean_slack},
                   {"tol", r.tol},
                   {"h", r.h},
                   {"note", "sampling falsifier: FAIL is evidence of a curvature violation at scales above h, "
                            "PASS means no violation among the sampled triangles"}};
  if (r.worst) j["worst_triangle"] = to_json(*r.worst);
  return j;
}

nlohmann::json to_json(const DistanceConvexityReport& r) {
  return {{"verdict", r.pass ? "PASS" : "FAIL"}, {"pairs", r.pairs}, {"samples", r.samples},
          {"min_defect", r.min_defect}, {"tol", r.tol}};
}

nlohmann::json to_json(const MajorizationReport& r) {
  return {{"verdict", r.pass ? "PASS" : "FAIL"},
          {"pairs", r.pairs},
          {"short", r.short_map},
          {"max_stretch_excess", r.max_stretch_excess},
          {"arc_length_preserved", r.arc_length},
          {"max_arc_drift", r.max_arc_drift},
          {"max_segment_drift", r.max_segment_drift},
          {"boundary_length_y", r.boundary_length_y},
          {"boundary_length_x", r.boundary_length_x},
          {"cyclic_bijection", r.bijective},
          {"tol", r.tol}};
}

}  // namespace cat0lab
