// lab: experiment runner. Every verb builds (or loads) a versioned config,
// runs it and prints the JSON report; the exit status is 0 on PASS, 1 on
// FAIL and 2 on errors.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cat0lab/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cat0lab;

namespace {

// Inline JSON when the argument looks like JSON, otherwise the contents of
// the named file.
json json_arg(const std::string& flag, const std::string& text) {
  const auto first = text.find_first_not_of(" \t\n");
  try {
    if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) return json::parse(text);
    std::ifstream in(text);
    if (!in) throw std::runtime_error("cannot read " + text);
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(flag + ": " + e.what());
  }
}

// Spaces stay file references when given as a path, so the report records
// where they came from.
json space_arg(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && text[first] == '{') return json_arg("--space", text);
  return fs::absolute(text).string();
}

struct Common {
  std::string space;
  std::uint64_t seed = 0;
  std::string name;
  std::string out_dir;
  std::string report;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c, bool needs_space = true) {
  auto* s = app->add_option("--space", c.space, "model spec as JSON or a space/spec file");
  if (needs_space) s->required();
  app->add_option("--seed", c.seed, "RNG seed")->required();
  app->add_option("--name", c.name, "experiment name used for artifact files");
  app->add_option("--out", c.out_dir, "directory for report and CSV artifacts");
  app->add_option("--report", c.report, "path of the report JSON");
  app->add_flag("--quiet", c.quiet, "do not print the report");
}

json base_config(const std::string& experiment, const Common& c) {
  json j{{"version", kConfigVersion}, {"experiment", experiment}, {"seed", c.seed}};
  if (!c.space.empty()) j["space"] = space_arg(c.space);
  if (!c.name.empty()) j["name"] = c.name;
  if (!c.report.empty()) j["output"]["report"] = c.report;
  return j;
}

int finish(const RunOutcome& r, bool quiet) {
  if (!quiet) std::cout << r.report.dump(2) << "\n";
  if (r.status == kError) std::cerr << "lab: " << r.error << "\n";
  return r.status;
}

std::optional<fs::path> out_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal deformations of CAT(0) length spaces: experiment runner"};
  app.require_subcommand(1);

  // run
  std::string config_path, run_out;
  bool run_quiet = false;
  auto* run = app.add_subcommand("run", "run a config file");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", run_out, "directory for report and CSV artifacts");
  run->add_flag("--quiet", run_quiet, "do not print the report");

  // suite
  std::string suite_name, suite_out, suite_dir;
  bool suite_quiet = false;
  auto* suite = app.add_subcommand("suite", "run a shipped suite");
  suite->add_option("name", suite_name, "oracle, theorem, negative-controls or all")->required();
  suite->add_option("--out", suite_out, "directory for member reports and the aggregate report");
  suite->add_option("--suite-dir", suite_dir, "directory holding the suite files");
  suite->add_flag("--quiet", suite_quiet, "do not print the aggregate report");

  // deform
  Common deform_c;
  std::string deform_factor, deform_exponent, deform_quadrature = "trapezoid", deform_output;
  std::size_t deform_pairs = 1000;
  double deform_tol = 0.02;
  auto* deform = app.add_subcommand("deform", "conformal change of a space by a factor or exp(field)");
  add_common(deform, deform_c);
  auto* df = deform->add_option("--factor", deform_factor, "field rule for rho (JSON or file)");
  deform->add_option("--exponent", deform_exponent, "field rule f, rho = exp(f)")->excludes(df);
  deform->add_option("--quadrature", deform_quadrature, "trapezoid or midpoint");
  deform->add_option("--pairs", deform_pairs, "oracle comparison pairs when a closed form exists");
  deform->add_option("--tol", deform_tol, "relative oracle tolerance");
  deform->add_option("--output", deform_output, "path of the deformed space JSON");

  // cat0-scan
  Common scan_c;
  std::string scan_factor, scan_exponent;
  std::optional<std::size_t> scan_triangles, scan_side_points;
  std::optional<double> scan_tol, scan_tol_factor, scan_local_fraction, scan_local_radius, scan_min_side;
  std::string scan_csv;
  auto* scan = app.add_subcommand("cat0-scan", "CAT(0) comparison scan of a (deformed) space");
  add_common(scan, scan_c);
  auto* sf = scan->add_option("--factor", scan_factor, "field rule for a conformal factor");
  scan->add_option("--exponent", scan_exponent, "field rule f for the factor exp(f)")->excludes(sf);
  scan->add_option("--triangles", scan_triangles, "number of sampled triangles");
  scan->add_option("--side-points", scan_side_points, "points per triangle side");
  auto* st = scan->add_option("--tol", scan_tol, "absolute slack tolerance");
  scan->add_option("--tol-factor", scan_tol_factor, "tolerance as a multiple of h")->excludes(st);
  scan->add_option("--local-fraction", scan_local_fraction, "share of triangles sampled near a vertex");
  scan->add_option("--local-radius", scan_local_radius, "radius of local triangles in units of h");
  scan->add_option("--min-side", scan_min_side, "minimum side length in units of h");
  scan->add_option("--csv", scan_csv, "path of the per-triangle slack CSV");

  // dirichlet
  Common dir_c;
  std::string dir_target = R"({"kind":"euclidean-plane"})", dir_boundary, dir_sweep = "gauss-seidel", dir_solution;
  std::optional<double> dir_tol;
  std::optional<std::size_t> dir_max_sweeps;
  bool dir_shuffle = false, dir_compare = false;
  std::string dir_fuglede;
  auto* dir = app.add_subcommand("dirichlet", "harmonic map with prescribed boundary values");
  add_common(dir, dir_c);
  dir->add_option("--target", dir_target, "target space (JSON or file)");
  dir->add_option("--boundary", dir_boundary,
                  "boundary data: an array of target points, one per boundary vertex, or a boundary spec object")
      ->required();
  dir->add_option("--tol", dir_tol, "convergence tolerance");
  dir->add_option("--max-sweeps", dir_max_sweeps, "sweep limit");
  dir->add_option("--sweep", dir_sweep, "gauss-seidel or jacobi");
  dir->add_flag("--shuffle", dir_shuffle, "seeded random vertex order");
  dir->add_flag("--compare-sweeps", dir_compare, "also solve with the other sweep kind and compare");
  dir->add_option("--fuglede", dir_fuglede, "Fuglede test spec {tol_factor, rules:[{rule, expect}]}");
  dir->add_option("--solution", dir_solution, "path of the solution JSON");

  // plateau
  Common pl_c;
  std::string pl_target = R"({"kind":"euclidean-plane"})", pl_curve, pl_solution;
  std::optional<double> pl_tol, pl_dir_tol, pl_log_tol_factor;
  std::optional<std::size_t> pl_max_outer;
  auto* pl = app.add_subcommand("plateau", "energy-minimizing disc spanning a closed curve");
  add_common(pl, pl_c);
  pl->add_option("--target", pl_target, "target space (JSON or file)");
  pl->add_option("--curve", pl_curve, "curve: an array of target points or a curve spec object")->required();
  pl->add_option("--tol", pl_tol, "relative energy gain below which the outer loop stops");
  pl->add_option("--max-outer", pl_max_outer, "outer iteration limit");
  pl->add_option("--dirichlet-tol", pl_dir_tol, "tolerance of the inner Dirichlet solves");
  pl->add_option("--log-tol-factor", pl_log_tol_factor, "log-subharmonicity tolerance in units of h");
  pl->add_option("--solution", pl_solution, "path of the solution JSON");

  // pipeline
  Common pp_c;
  std::string pp_field, pp_curve = R"({"kind":"circle","radius":0.8})";
  std::optional<double> pp_domain_spacing, pp_scan_tol_factor, pp_major_tol_factor;
  std::optional<std::size_t> pp_triangles, pp_major_pairs;
  bool pp_force = false;
  auto* pp = app.add_subcommand("pipeline", "the main theorem as a computation, stage by stage");
  add_common(pp, pp_c);
  pp->add_option("--field", pp_field, "field rule f on X (JSON or file)")->required();
  pp->add_option("--curve", pp_curve, "curve in X");
  pp->add_option("--domain-spacing", pp_domain_spacing, "spacing of the parameter disc");
  pp->add_option("--triangles", pp_triangles, "triangles per scan");
  pp->add_option("--scan-tol-factor", pp_scan_tol_factor, "scan tolerance in units of h");
  pp->add_option("--majorization-tol-factor", pp_major_tol_factor, "majorization tolerance in units of h");
  pp->add_option("--majorization-pairs", pp_major_pairs, "pairs checked for majorization");
  pp->add_flag("--force", pp_force, "continue after a failed convexity pretest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kError;
  }

  try {
    if (*run) return finish(run_config_file(config_path, out_path(run_out)), run_quiet);
    if (*suite) {
      const fs::path dir = suite_dir.empty() ? default_suite_dir() : fs::path(suite_dir);
      return finish(run_suite(suite_name, dir, out_path(suite_out)), suite_quiet);
    }
    if (*deform) {
      json c = base_config("deform", deform_c);
      if (!deform_factor.empty()) c["factor"] = json_arg("--factor", deform_factor);
      if (!deform_exponent.empty()) c["exponent"] = json_arg("--exponent", deform_exponent);
      c["quadrature"] = deform_quadrature;
      c["pairs"] = deform_pairs;
      c["tol"] = deform_tol;
      if (!deform_output.empty()) c["output"]["space"] = deform_output;
      return finish(run_experiment(c, fs::current_path(), out_path(deform_c.out_dir)), deform_c.quiet);
    }
    if (*scan) {
      json c = base_config("cat0-scan", scan_c);
      if (!scan_factor.empty()) c["factor"] = json_arg("--factor", scan_factor);
      if (!scan_exponent.empty()) c["exponent"] = json_arg("--exponent", scan_exponent);
      json s = json::object();
      if (scan_triangles) s["triangles"] = *scan_triangles;
      if (scan_side_points) s["side_points"] = *scan_side_points;
      if (scan_tol) s["tol"] = *scan_tol;
      if (scan_tol_factor) s["tol_factor"] = *scan_tol_factor;
      if (scan_local_fraction) s["local_fraction"] = *scan_local_fraction;
      if (scan_local_radius) s["local_radius"] = *scan_local_radius;
      if (scan_min_side) s["min_side"] = *scan_min_side;
      c["scan"] = s;
      if (!scan_csv.empty()) c["output"]["csv"] = scan_csv;
      return finish(run_experiment(c, fs::current_path(), out_path(scan_c.out_dir)), scan_c.quiet);
    }
    if (*dir) {
      json c = base_config("dirichlet", dir_c);
      c["target"] = json_arg("--target", dir_target);
      json b = json_arg("--boundary", dir_boundary);
      c["boundary"] = b.is_array() ? json{{"kind", "points"}, {"points", b}} : b;
      json s{{"sweep", dir_sweep}, {"shuffle", dir_shuffle}};
      if (dir_tol) s["tol"] = *dir_tol;
      if (dir_max_sweeps) s["max_sweeps"] = *dir_max_sweeps;
      c["solver"] = s;
      c["compare_sweeps"] = dir_compare;
      if (!dir_fuglede.empty()) c["fuglede"] = json_arg("--fuglede", dir_fuglede);
      if (!dir_solution.empty()) c["output"]["solution"] = dir_solution;
      return finish(run_experiment(c, fs::current_path(), out_path(dir_c.out_dir)), dir_c.quiet);
    }
    if (*pl) {
      json c = base_config("plateau", pl_c);
      c["target"] = json_arg("--target", pl_target);
      json curve = json_arg("--curve", pl_curve);
      c["curve"] = curve.is_array() ? json{{"kind", "points"}, {"points", curve}} : curve;
      json p = json::object();
      if (pl_tol) p["tol"] = *pl_tol;
      if (pl_max_outer) p["max_outer"] = *pl_max_outer;
      c["plateau"] = p;
      if (pl_dir_tol) c["solver"] = {{"tol", *pl_dir_tol}};
      if (pl_log_tol_factor) c["log_tol_factor"] = *pl_log_tol_factor;
      if (!pl_solution.empty()) c["output"]["solution"] = pl_solution;
      return finish(run_experiment(c, fs::current_path(), out_path(pl_c.out_dir)), pl_c.quiet);
    }
    if (*pp) {
      json c = base_config("pipeline", pp_c);
      c["field"] = json_arg("--field", pp_field);
      json curve = json_arg("--curve", pp_curve);
      c["curve"] = curve.is_array() ? json{{"kind", "points"}, {"points", curve}} : curve;
      json p{{"force", pp_force}};
      if (pp_domain_spacing) p["domain_spacing"] = *pp_domain_spacing;
      if (pp_triangles) p["triangles"] = *pp_triangles;
      if (pp_scan_tol_factor) p["scan_tol_factor"] = *pp_scan_tol_factor;
      if (pp_major_tol_factor) p["majorization_tol_factor"] = *pp_major_tol_factor;
      if (pp_major_pairs) p["majorization_pairs"] = *pp_major_pairs;
      c["pipeline"] = p;
      return finish(run_experiment(c, fs::current_path(), out_path(pp_c.out_dir)), pp_c.quiet);
    }
  } catch (const std::exception& e) {
    std::cerr << "lab: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
