#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ellfocal/acceptance.hpp"
#include "ellfocal/focal.hpp"
#include "ellfocal/geodesic.hpp"
#include "ellfocal/lax.hpp"
#include "ellfocal/report.hpp"
#include "ellfocal/rosochatius.hpp"

namespace fs = std::filesystem;
using namespace ellfocal;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct RunConfig {
  std::vector<double> axes;
  bool axes_are_squared = false;
  std::vector<std::string> point{"random"};
  std::vector<double> direction;  // simulate only
  int directions = 0;             // 0: command default
  double t_max = 0.0;             // 0: command default
  std::uint64_t seed = 42;
  double rel_tol = 1e-12;
  double abs_tol = 1e-13;
  long max_steps = 5'000'000;
  std::vector<double> j_grid{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  std::string out = "ellfocal-out";
  int threads = 1;
  std::string only;
  double t_common = 0.0;  // return-map only; 0: measured by a scan
};

// A problem with the request rather than with the numerics.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool is_usage_kind(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput:
    case ErrorKind::UnsupportedDimension:
    case ErrorKind::ConstraintViolation:
    case ErrorKind::InvalidMultiplicities:
    case ErrorKind::InvalidIsometry:
    case ErrorKind::DegenerateInput:
    case ErrorKind::NoUmbilicFound:
      return true;
    default:
      return false;
  }
}

Json config_json(const RunConfig& c, const std::string& command) {
  return Json{{"command", command},
              {"axes", c.axes},
              {"axes_are_squared", c.axes_are_squared},
              {"point", c.point},
              {"direction", c.direction},
              {"directions", c.directions},
              {"t_max", c.t_max},
              {"seed", c.seed},
              {"rel_tol", c.rel_tol},
              {"abs_tol", c.abs_tol},
              {"max_steps", c.max_steps},
              {"j_grid", c.j_grid},
              {"out", c.out},
              {"threads", c.threads},
              {"only", c.only},
              {"t_common", c.t_common}};
}

Ellipsoid ellipsoid_from(const RunConfig& c) {
  if (c.axes.empty()) throw UsageError("--axes is required");
  std::vector<double> alphas = c.axes;
  if (!c.axes_are_squared)
    for (double& a : alphas) a *= a;
  return make_ellipsoid(alphas);
}

IntegratorOptions integrator_from(const RunConfig& c, double default_t_max) {
  IntegratorOptions o;
  o.rel_tol = c.rel_tol;
  o.abs_tol = c.abs_tol;
  o.max_steps = c.max_steps;
  o.t_max = c.t_max > 0.0 ? c.t_max : default_t_max;
  return o;
}

Vec point_from(const RunConfig& c, const Ellipsoid& e) {
  if (c.point.size() == 1) {
    const std::string& p = c.point.front();
    if (p == "random") return random_point(e, c.seed);
    if (p == "special") return special_point_1_n2_1(e);
    if (p == "umbilic") {
      if (e.dim() != 3) throw UsageError("the umbilic preset needs a 2-D ellipsoid; use special for (1,n-2,1)");
      return umbilic_points_2d({e.alphas()(0), e.alphas()(1), e.alphas()(2)}).points[0];
    }
  }
  if (static_cast<int>(c.point.size()) != e.dim())
    throw UsageError("--point takes umbilic, special, random or " + std::to_string(e.dim()) + " coordinates");
  Vec x(e.dim());
  for (int i = 0; i < e.dim(); ++i) {
    try {
      x(i) = std::stod(c.point[static_cast<size_t>(i)]);
    } catch (const std::exception&) {
      throw UsageError("bad coordinate '" + c.point[static_cast<size_t>(i)] + "'");
    }
  }
  // Typed coordinates are rarely exact; accept small residuals and project.
  if (e.constraint_residual(x) > 1e-3) throw UsageError("--point is not on the ellipsoid");
  return project_to_ellipsoid(e, x);
}

Json tolerances(const Ellipsoid& e, const IntegratorOptions& o) {
  return Json{{"rel_tol", o.rel_tol},
              {"abs_tol", o.abs_tol},
              {"constraint_tol", e.constraint_tol()},
              {"return_radius", default_return_radius(e)},
              {"focal_tol", kFocalTol},
              {"separation_tol", kSeparationTol}};
}

struct Output {
  fs::path dir;
  explicit Output(const std::string& d) : dir(d) { fs::create_directories(dir); }
  fs::path path(const std::string& name) const { return dir / name; }
  void json(const std::string& name, const Json& j) const {
    std::ofstream os(path(name));
    os << j.dump(2) << '\n';
  }
  std::ofstream stream(const std::string& name) const { return std::ofstream(path(name)); }
};

// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& c) {
  const Ellipsoid e = ellipsoid_from(c);
  const Vec x = point_from(c, e);
  Vec xi;
  if (c.direction.empty()) {
    xi = random_unit_tangent(e, x, c.seed);
  } else {
    if (static_cast<int>(c.direction.size()) != e.dim()) throw UsageError("--direction has the wrong dimension");
    xi = project_to_tangent(e, x, Eigen::Map<const Vec>(c.direction.data(), e.dim()));
    if (xi.norm() < 1e-12) throw UsageError("--direction is normal to the ellipsoid");
    xi.normalize();
  }
  const IntegratorOptions o = integrator_from(c, 50.0);
  const Output out(c.out);
  Json body{{"initial_point", to_json(x)}, {"initial_direction", to_json(xi)}};
  int code = 0;
  Trajectory traj;
  try {
    traj = integrate_geodesic(e, PhasePoint{x, xi}, o);
    body["status"] = "ok";
  } catch (const IntegrationFailure& err) {
    traj = err.partial();
    body["status"] = "integration-failure";
    body["error"] = err.what();
    code = kExitNumerical;
  }
  {
    auto os = out.stream("trajectory.csv");
    write_trajectory_csv(os, traj);
  }
  body["t_end"] = traj.t_end();
  body["samples"] = traj.samples.size();
  body["max_constraint_residual"] = traj.max_constraint_residual();
  body["max_speed_residual"] = traj.max_speed_residual();
  body["max_lax_drift"] = number(traj.max_lax_drift());
  body["end_to_start_distance"] = (traj.samples.back().point.x - x).norm();
  if (code == 0) {
    // Closed-curve diagnostics: every return to the start within the radius.
    const double radius = default_return_radius(e);
    Json returns = Json::array();
    for (const auto& ev : first_return(e, x, xi, o, radius))
      returns.push_back(Json{{"time", ev.return_time},
                             {"miss_distance", ev.miss_distance},
                             {"angular_deviation", angle_between(xi, ev.terminal_direction)}});
    body["returns_to_start"] = returns;
  }
  out.json("simulate.json", envelope("simulate", config_json(c, "simulate"), Json{{"seed", c.seed}},
                                     tolerances(e, o), body));
  std::cout << "simulate: t_end=" << traj.t_end() << " samples=" << traj.samples.size()
            << " max_constraint_residual=" << traj.max_constraint_residual() << " -> " << out.dir.string() << '\n';
  return code;
}

int cmd_lax_verify(const RunConfig& c) {
  const Ellipsoid e = ellipsoid_from(c);
  LaxVerifyOptions lo;
  lo.seed = c.seed;
  if (c.t_max > 0.0) lo.t_max = c.t_max;
  if (c.directions > 0) lo.geodesics = c.directions;
  Json results = Json::array();
  bool ok = true;
  for (auto* check : {&check_isospectrality, &check_moser_identity, &check_chasles, &check_interlacing,
                      &check_first_variation}) {
    const CriterionResult r = check(e, lo);
    std::cout << summary_line(r) << '\n';
    results.push_back(to_json(r));
    ok = ok && r.passed();
  }
  const Output out(c.out);
  out.json("lax-verify.json",
           envelope("lax-verify", config_json(c, "lax-verify"), Json{{"seed", c.seed}},
                    tolerances(e, integrator_from(c, lo.t_max)), Json{{"all_passed", ok}, {"checks", results}}));
  return ok ? 0 : kExitNumerical;
}

ScanOptions scan_options(const RunConfig& c) {
  ScanOptions so;
  so.integrator = integrator_from(c, 0.0);
  so.integrator.t_max = c.t_max;  // 0 keeps the per-ellipsoid default
  so.threads = c.threads;
  return so;
}

int cmd_focal_scan(const RunConfig& c) {
  const Ellipsoid e = ellipsoid_from(c);
  const Vec x = point_from(c, e);
  const ScanReport r = self_focality_scan(e, x, c.directions > 0 ? c.directions : 64, scan_options(c));
  const Output out(c.out);
  out.json("focal-scan.json", envelope("focal-scan", config_json(c, "focal-scan"), Json{{"seed", c.seed}},
                                       tolerances(e, r.integrator), to_json(r)));
  auto os = out.stream("focal-scan.csv");
  write_scan_csv(os, r);
  std::cout << "focal-scan: verdict=" << to_string(r.verdict) << " returned=" << r.returned_count << '/'
            << r.results.size() << " mean_time=" << r.mean_time << " relative_spread=" << r.relative_spread << '\n';
  return 0;
}

int cmd_return_map(const RunConfig& c) {
  const Ellipsoid e = ellipsoid_from(c);
  const Vec x = point_from(c, e);
  const ScanOptions so = scan_options(c);
  double t_common = c.t_common;
  Json scan_json = nullptr;
  if (!(t_common > 0.0)) {
    const ScanReport scan = self_focality_scan(e, x, 16, so);
    scan_json = Json{{"verdict", to_string(scan.verdict)},
                     {"mean_time", number(scan.mean_time)},
                     {"relative_spread", number(scan.relative_spread)}};
    if (scan.verdict != Verdict::SelfFocalEvidence)
      throw UsageError("no common return time at this point (verdict " + to_string(scan.verdict) +
                       "); pass --t-common to map anyway");
    t_common = scan.mean_time;
  }
  GridOptions grid;
  grid.anchored = true;
  ReturnMapOptions mo;
  mo.integrator = so.integrator;
  mo.threads = c.threads;
  const auto dirs = direction_grid(e, x, c.directions > 0 ? c.directions : 256, grid);
  const auto samples = return_map(e, x, t_common, dirs, mo);

  const Mat frame = tangent_frame(e, x);
  std::vector<Vec> probes;
  for (int k = 0; k < 8; ++k) {
    const double th = 2 * std::numbers::pi * (k + 0.25) / 8;
    Vec p = std::cos(th) * frame.col(0) + std::sin(th) * frame.col(1);
    if (frame.cols() > 2) p = (p + 0.5 * frame.col(2)).normalized();
    probes.push_back(p);
  }
  TwistOptions to;
  to.map = mo;
  const TwistReport twist = twistedness_report(e, x, t_common, probes, to);
  const int fixed = count_fixed_directions(samples, 1e-6);

  const Output out(c.out);
  out.json("return-map.json",
           envelope("return-map", config_json(c, "return-map"), Json{{"seed", c.seed}}, tolerances(e, mo.integrator),
                    Json{{"base_point", to_json(x)},
                         {"t_common", t_common},
                         {"scan", scan_json},
                         {"fixed_directions", fixed},
                         {"fixed_tol", 1e-6},
                         {"samples", to_json(samples)},
                         {"twist", to_json(twist)}}));
  auto os = out.stream("return-map.csv");
  write_return_map_csv(os, e, x, samples);
  std::cout << "return-map: t_common=" << t_common << " fixed_directions=" << fixed
            << " min_twist_distance=" << twist.min_distance << '\n';
  return 0;
}

int cmd_umbilic(const RunConfig& c) {
  const Ellipsoid e = ellipsoid_from(c);
  Json body;
  Vec x;
  if (e.dim() == 3) {
    const UmbilicPoints u = umbilic_points_2d({e.alphas()(0), e.alphas()(1), e.alphas()(2)});
    body["umbilics"] = to_json(u);
    x = u.points[0];
  } else {
    Json cands = Json::array();
    for (const auto& p : slice_umbilic_candidates(e)) cands.push_back(to_json(p));
    body["slice_umbilic_candidates"] = cands;
    x = special_point_1_n2_1(e);
    body["special_point"] = to_json(x);
  }
  const ScanReport scan = self_focality_scan(e, x, c.directions > 0 ? c.directions : 32, scan_options(c));
  body["scan"] = to_json(scan);
  body["moments"] = to_json(moment_constancy_check(e, x, 64));
  const Output out(c.out);
  out.json("umbilic.json", envelope("umbilic", config_json(c, "umbilic"), Json{{"seed", c.seed}},
                                    tolerances(e, scan.integrator), body));
  std::cout << "umbilic: point=" << x.transpose() << " verdict=" << to_string(scan.verdict)
            << " mean_time=" << scan.mean_time << '\n';
  return 0;
}

int cmd_rosochatius(const RunConfig& c) {
  const Ellipsoid e = ellipsoid_from(c);
  if (e.dim() != 3) throw UsageError("rosochatius needs three axes");
  RosochatiusExperimentOptions xo;
  xo.integrator = integrator_from(c, 0.0);
  xo.integrator.t_max = c.t_max;
  xo.threads = c.threads;
  const std::vector<double> alphas{e.alphas()(0), e.alphas()(1), e.alphas()(2)};
  const ExperimentReport rep = umbilic_return_experiment(alphas, c.j_grid, c.directions > 0 ? c.directions : 32, xo);
  const Output out(c.out);
  Json tol = tolerances(e, rep.integrator);
  tol["barrier_tol"] = rep.barrier_tol;
  out.json("rosochatius.json", envelope("rosochatius", config_json(c, "rosochatius"), Json{{"seed", c.seed}}, tol,
                                        to_json(rep)));
  auto os = out.stream("rosochatius.csv");
  write_experiment_csv(os, rep);
  for (const auto& s : rep.summaries)
    std::cout << "j=" << s.j << " mean_time=" << s.mean_time << " relative_spread=" << s.relative_spread
              << " returned=" << s.returned_count << '/' << s.directions << " halted=" << s.halted_count << '\n';
  return 0;
}

int cmd_suite(const RunConfig& c) {
  AcceptanceOptions ao;
  ao.seed = c.seed;
  ao.threads = c.threads;
  const std::vector<int> ids = select_criteria(c.only);
  const SuiteResult suite =
      run_acceptance(ids, ao, [](const CriterionResult& r) { std::cout << summary_line(r) << std::endl; });
  Json results = Json::array();
  for (const auto& r : suite.results) results.push_back(to_json(r));
  const Output out(c.out);
  out.json("suite.json", envelope("suite", config_json(c, "suite"), Json{{"seed", c.seed}},
                                  Json{{"rel_tol", 1e-12}, {"abs_tol", 1e-13}, {"focal_tol", kFocalTol},
                                       {"separation_tol", kSeparationTol}},
                                  Json{{"passed", suite.passed()}, {"seconds", suite.seconds}, {"criteria", results}}));
  std::cout << (suite.passed() ? "all selected criteria passed" : "some criteria failed") << " in " << suite.seconds
            << " s\n";
  return suite.passed() ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geodesics, Lax spectra and self-focal points on ellipsoids"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key = value file; command-line flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  RunConfig c;
  app.add_option("--axes", c.axes, "semi-axes a_1,...,a_n (squared values with --squared)")->delimiter(',');
  app.add_flag("--squared", c.axes_are_squared, "--axes lists alpha_i = a_i^2");
  app.add_option("--point", c.point, "umbilic, special, random, or comma-separated coordinates")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--direction", c.direction, "initial direction for simulate (default: random)")->delimiter(',');
  app.add_option("--directions", c.directions, "number of directions (command default when 0)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--t-max", c.t_max, "integration window (command default when 0)")->check(CLI::NonNegativeNumber);
  app.add_option("--t-common", c.t_common, "return-map time (measured by a scan when 0)");
  app.add_option("--seed", c.seed, "seed for random points and directions")->capture_default_str();
  app.add_option("--rel-tol", c.rel_tol, "integrator relative tolerance")->capture_default_str();
  app.add_option("--abs-tol", c.abs_tol, "integrator absolute tolerance")->capture_default_str();
  app.add_option("--max-steps", c.max_steps, "integrator step budget per trajectory")->capture_default_str();
  app.add_option("--j-grid", c.j_grid, "angular momenta for rosochatius")->delimiter(',')->capture_default_str();
  app.add_option("--out", c.out, "output directory")->capture_default_str();
  app.add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--only", c.only, "suite filter: ids and groups (lax, focal, rosochatius, suite)");

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
  };
  const Sub subs[] = {
      {"simulate", "integrate one geodesic; trajectory CSV and diagnostics", cmd_simulate},
      {"lax-verify", "spectral checks on random samples", cmd_lax_verify},
      {"focal-scan", "self-focality scan at a point", cmd_focal_scan},
      {"return-map", "first return map and twistedness at a self-focal point", cmd_return_map},
      {"umbilic", "umbilic or special point, with a scan there", cmd_umbilic},
      {"rosochatius", "return experiment for the Rosochatius flows", cmd_rosochatius},
      {"suite", "acceptance criteria", cmd_suite},
  };
  for (const auto& s : subs) app.add_subcommand(s.name, s.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    for (const auto& s : subs)
      if (app.got_subcommand(s.name)) return s.run(c);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const Error& err) {
    std::cerr << err.what() << '\n';
    return is_usage_kind(err.kind()) ? kExitUsage : kExitNumerical;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
