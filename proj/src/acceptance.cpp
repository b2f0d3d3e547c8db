#include "ellfocal/acceptance.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "ellfocal/focal.hpp"
#include "ellfocal/geodesic.hpp"
#include "ellfocal/lax.hpp"
#include "ellfocal/report.hpp"
#include "ellfocal/rosochatius.hpp"

namespace ellfocal {

namespace {

constexpr double kPi = std::numbers::pi;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

PhasePoint random_phase_point(const Ellipsoid& e, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Vec x = random_point(e, rng());
  return PhasePoint{x, random_unit_tangent(e, x, rng())};
}

// z away from 0 and the poles of Q_z.
double random_z(const Ellipsoid& e, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-5.0, 10.0);
  for (;;) {
    const double z = uni(rng);
    bool ok = std::abs(z) > 0.05;
    for (int i = 0; i < e.dim(); ++i) ok = ok && std::abs(z - e.alphas()(i)) > 0.05;
    if (ok) return z;
  }
}

Vec lambda_at(const Ellipsoid& e, const PhasePoint& p, const PhaseVariation& var, double s) {
  const PhasePoint q = retract_variation(e, p.x, p.xi, var, s);
  return spectrum(lax_matrix(e, q.x, q.xi)).nonzero_eigs;
}

CriterionResult start(int id) {
  CriterionResult r;
  r.id = id;
  for (const auto& info : acceptance_criteria())
    if (info.id == id) r.name = info.name;
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

// ---------------------------------------------------------------------------

CriterionResult sphere_baseline(const AcceptanceOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(1);
  const Ellipsoid e = make_ellipsoid({1, 1, 1, 1});
  ScanOptions so;
  so.threads = opts.threads;
  const ScanReport scan = self_focality_scan(e, random_point(e, opts.seed), 64, so);
  double time_err = 0.0, dev = 0.0;
  for (const auto& d : scan.results) {
    time_err = std::max(time_err, std::abs(d.representative_time() - 2 * kPi));
    dev = std::max(dev, d.angular_deviation());
  }
  r.measurements.push_back(measure("returned", scan.returned_count, Relation::Equal, 64));
  r.measurements.push_back(measure("max_time_error", time_err, Relation::Less, 1e-8));
  r.measurements.push_back(measure("max_deviation", dev, Relation::Less, 1e-8));
  r.seconds = seconds_since(t0);
  r.measurements.push_back(measure("runtime_s", r.seconds, Relation::Less, 10));
  return r;
}

CriterionResult umbilic_self_focality(const AcceptanceOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(2);
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const Vec u = umbilic_points_2d({3, 2, 1}).points[0];
  ScanOptions so;
  so.threads = opts.threads;
  const ScanReport scan = self_focality_scan(e, u, 64, so);
  int moved = 0;
  for (const auto& d : scan.results) moved += d.angular_deviation() > 0.1;
  r.measurements.push_back(measure("returned", scan.returned_count, Relation::Equal, 64));
  r.measurements.push_back(measure("relative_spread", scan.relative_spread, Relation::Less, 1e-5));
  r.measurements.push_back(measure("deviating_directions", moved, Relation::GreaterEq, 60));
  r.detail = "common return time " + fmt(scan.mean_time) + ", verdict " + to_string(scan.verdict);
  r.seconds = seconds_since(t0);
  r.measurements.push_back(measure("runtime_s", r.seconds, Relation::Less, 120));
  return r;
}

CriterionResult return_map_structure(const AcceptanceOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(3);
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const Vec u = umbilic_points_2d({3, 2, 1}).points[0];
  ScanOptions so;
  so.threads = opts.threads;
  const double t_common = self_focality_scan(e, u, 8, so).mean_time;

  GridOptions anchored;
  anchored.anchored = true;
  ReturnMapOptions mo;
  mo.threads = opts.threads;
  const auto samples = return_map(e, u, t_common, direction_grid(e, u, 256, anchored), mo);
  int flagged = 0;
  for (const auto& s : samples) flagged += s.flagged;
  r.measurements.push_back(measure("fixed_directions", count_fixed_directions(samples, 1e-6), Relation::Equal, 2));
  r.measurements.push_back(measure("flagged_samples", flagged, Relation::Equal, 0));

  const Mat frame = tangent_frame(e, u);
  std::vector<Vec> probes;
  for (int k = 0; k < 8; ++k) {
    const double th = 2 * kPi * (k + 0.25) / 8;
    probes.push_back(std::cos(th) * frame.col(0) + std::sin(th) * frame.col(1));
  }
  TwistOptions to;
  to.map.threads = opts.threads;
  const TwistReport twist = twistedness_report(e, u, t_common, probes, to);
  int unresolved = 0;
  for (const auto& s : twist.samples) unresolved += s.insufficient_resolution;
  r.measurements.push_back(measure("min_distance_from_identity", twist.min_distance, Relation::Greater, 0.01));
  r.measurements.push_back(measure("unresolved_probes", unresolved, Relation::Equal, 0));
  r.seconds = seconds_since(t0);
  r.measurements.push_back(measure("runtime_s", r.seconds, Relation::Less, 300));
  return r;
}

CriterionResult moment_constancy(const AcceptanceOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(5);
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const Vec u = umbilic_points_2d({3, 2, 1}).points[0];
  const MomentConstancyReport at_u = moment_constancy_check(e, u, 128);
  const MomentConstancyReport generic = moment_constancy_check(e, random_point(e, opts.seed), 128);
  r.measurements.push_back(measure("umbilic_spread", at_u.spread, Relation::Less, 1e-8));
  r.measurements.push_back(measure("eigenvalue_minus_alpha2", std::abs(at_u.mean_eigs(0) - 2.0), Relation::Less, 1e-8));
  r.measurements.push_back(measure("generic_spread", generic.spread, Relation::Greater, 1e-3));
  r.seconds = seconds_since(t0);
  return r;
}

CriterionResult multiaxial_no_focal(const AcceptanceOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(6);
  const Ellipsoid e = make_ellipsoid({4, 3, 2, 1});
  std::vector<Vec> points = slice_umbilic_candidates(e);
  const size_t candidates = points.size();
  for (std::uint64_t k = 0; points.size() < 20; ++k) points.push_back(random_point(e, opts.seed + k));
  ScanOptions so;
  so.threads = opts.threads;
  double min_spread = std::numeric_limits<double>::infinity();
  int not_focal = 0;
  for (const auto& x : points) {
    const ScanReport scan = self_focality_scan(e, x, 32, so);
    min_spread = std::min(min_spread, scan.relative_spread);
    not_focal += scan.verdict == Verdict::NotSelfFocal;
  }
  r.measurements.push_back(measure("base_points", static_cast<double>(points.size()), Relation::Equal, 20));
  r.measurements.push_back(measure("min_relative_spread", min_spread, Relation::Greater, 1e-2));
  r.detail = std::to_string(candidates) + " slice umbilic candidates; " + std::to_string(not_focal) +
             " of 20 verdicts not-self-focal";
  r.seconds = seconds_since(t0);
  r.measurements.push_back(measure("runtime_s", r.seconds, Relation::Less, 600));
  return r;
}

CriterionResult special_point(const AcceptanceOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(7);
  const Ellipsoid e = make_ellipsoid({3, 2, 2, 1});
  const Vec u = special_point_1_n2_1(e);
  ScanOptions so;
  so.threads = opts.threads;
  const ScanReport at_u = self_focality_scan(e, u, 64, so);
  const Vec moved = project_to_ellipsoid(e, u + 0.05 * random_unit_tangent(e, u, opts.seed));
  const ScanReport near = self_focality_scan(e, moved, 64, so);
  r.measurements.push_back(measure("returned", at_u.returned_count, Relation::Equal, 64));
  r.measurements.push_back(measure("relative_spread", at_u.relative_spread, Relation::Less, 1e-5));
  r.measurements.push_back(measure("perturbed_relative_spread", near.relative_spread, Relation::Greater, 1e-2));
  r.detail = "perturbed point: " + std::to_string(near.returned_count) + " of 64 returned, max miss " +
             fmt(near.max_miss) + " (radius " + fmt(near.return_radius) + ")";
  r.seconds = seconds_since(t0);
  return r;
}

CriterionResult isometry_invariance(const AcceptanceOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(12);
  const Ellipsoid e = make_ellipsoid({3, 2, 2, 1});
  const Vec u = special_point_1_n2_1(e);
  const Vec generic = random_point(e, opts.seed);
  ScanOptions so;
  so.threads = opts.threads;
  double max_diff = 0.0;
  int disagreements = 0;
  for (int k = 0; k < 5; ++k) {
    const Mat g = isometry_matrix(e, {{1, 2, 2 * kPi * (k + 0.5) / 5}});
    for (const Vec& x : {u, generic}) {
      const IsometryOrbitReport rep = isometry_orbit_check(e, x, g, 16, so);
      max_diff = std::max(max_diff, rep.mean_time_difference);
      disagreements += !rep.verdicts_agree;
    }
  }
  r.measurements.push_back(measure("max_mean_time_difference", max_diff, Relation::Less, 1e-6));
  r.measurements.push_back(measure("verdict_disagreements", disagreements, Relation::Equal, 0));
  r.detail = "5 rotations of the middle block, at the (1,2,1) point and at a generic point";
  r.seconds = seconds_since(t0);
  return r;
}

CriterionResult rosochatius_checks(const AcceptanceOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(13);
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  IntegratorOptions o;
  o.t_max = 50.0;

  // Energy along projected runs, including the dense output between steps,
  // which is the integrator's own unprojected interpolant.
  double drift = 0.0, residual = 0.0;
  const auto sys = make_rosochatius(e, 0.3, 0);
  for (std::uint64_t k = 0; k < 5; ++k) {
    const PhasePoint p = random_phase_point(e, opts.seed + k);
    const ReducedTrajectory t = integrate_rosochatius(sys, p, o);
    const double h0 = t.samples.front().energy;
    drift = std::max(drift, t.max_energy_drift());
    residual = std::max(residual, t.max_constraint_residual());
    for (size_t i = 1; i < t.samples.size(); ++i) {
      const PhasePoint mid = t.state_at(0.5 * (t.samples[i - 1].t + t.samples[i].t));
      drift = std::max(drift, std::abs(rosochatius_energy(sys, mid.x, mid.xi) - h0) / h0);
    }
  }
  r.measurements.push_back(measure("energy_drift", drift, Relation::Less, 1e-8));
  r.measurements.push_back(measure("constraint_residual", residual, Relation::Less, 1e-8));

  double geo_gap = 0.0;
  for (std::uint64_t k = 0; k < 3; ++k) {
    const PhasePoint p = random_phase_point(e, opts.seed + 100 + k);
    const ReducedTrajectory a = integrate_rosochatius(make_rosochatius(e, 0.0), p, o);
    const Trajectory g = integrate_geodesic(e, p, o);
    for (double t = 0.0; t <= 50.0; t += 0.01) geo_gap = std::max(geo_gap, (a.state_at(t).x - g.state_at(t).x).norm());
  }
  r.measurements.push_back(measure("j0_geodesic_gap", geo_gap, Relation::Less, 1e-9));

  const Ellipsoid e4 = make_ellipsoid({3, 3, 2, 1});
  const Reduction211 red = make_reduction_211(e4);
  IntegratorOptions o20;
  o20.t_max = 20.0;
  double red_gap = 0.0;
  int halted = 0;
  for (std::uint64_t k = 0; k < 5; ++k) {
    const PhasePoint p = random_phase_point(e4, opts.seed + 200 + k);
    const ReducedTrajectory reduced = reduce_211_orbit(e4, integrate_geodesic(e4, p, o20));
    const ReducedTrajectory direct = integrate_rosochatius(reduced.system, reduce_state(red, p), o20);
    halted += direct.halted;
    for (double t = 0.0; t <= std::min(20.0, direct.t_end()); t += 0.01)
      red_gap = std::max(red_gap, (reduced.state_at(t).x - direct.state_at(t).x).norm());
  }
  r.measurements.push_back(measure("reduction_gap", red_gap, Relation::Less, 1e-7));
  r.measurements.push_back(measure("reduction_halts", halted, Relation::Equal, 0));

  const std::vector<double> j_grid{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  RosochatiusExperimentOptions xo;
  xo.threads = opts.threads;
  const ExperimentReport rep = umbilic_return_experiment({3, 2, 1}, j_grid, 16, xo);
  int complete = 0;
  for (const auto& s : rep.summaries) complete += s.directions == 16 && std::isfinite(s.mean_time);
  r.measurements.push_back(measure("experiment_rows", complete, Relation::Equal, 7));
  std::ostringstream detail;
  detail << "relative spread by j:";
  for (const auto& s : rep.summaries) detail << ' ' << s.j << ':' << fmt(s.relative_spread);
  r.detail = detail.str();
  r.seconds = seconds_since(t0);
  return r;
}

// Determinism probe for criterion 14: two identical scans must serialize to
// the same bytes.
std::string probe_report(const AcceptanceOptions& opts) {
  const Ellipsoid e = make_ellipsoid({4, 3, 2, 1});
  ScanOptions so;
  so.threads = opts.threads;
  std::ostringstream os;
  os << to_json(self_focality_scan(e, random_point(e, opts.seed), 16, so)).dump();
  const Trajectory t = integrate_geodesic(e, random_phase_point(e, opts.seed), IntegratorOptions{});
  write_trajectory_csv(os, t);
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

CriterionResult check_isospectrality(const Ellipsoid& e, const LaxVerifyOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(4);
  IntegratorOptions o;
  o.t_max = opts.t_max;
  const double h = 1e-5;
  double drift = 0.0, residual = 0.0;
  std::mt19937_64 rng(opts.seed);
  for (int k = 0; k < opts.geodesics; ++k) {
    const Trajectory t = integrate_geodesic(e, random_phase_point(e, rng()), o);
    drift = std::max(drift, t.max_lax_drift());
    const double when = std::fmod(1.0 + 0.37 * k, opts.t_max);
    const PhasePoint q = t.state_at(when);
    const Vec xi = q.xi.normalized();
    const PhasePoint plus = exp_map(e, q.x, xi, h);
    const PhasePoint minus = exp_map(e, q.x, xi, -h);
    const Mat fd = (lax_matrix(e, plus.x, plus.xi).entries - lax_matrix(e, minus.x, minus.xi).entries) / (2.0 * h);
    residual = std::max(residual, (fd - lax_flow_derivative(e, q.x, xi)).norm());
  }
  r.measurements.push_back(measure("max_relative_drift", drift, Relation::Less, 1e-8));
  r.measurements.push_back(measure("lax_residual", residual, Relation::Less, 1e-6));
  r.seconds = seconds_since(t0);
  r.measurements.push_back(measure("runtime_s", r.seconds, Relation::Less, 180));
  return r;
}

CriterionResult check_moser_identity(const Ellipsoid& e, const LaxVerifyOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(8);
  std::mt19937_64 rng(opts.seed);
  double worst = 0.0;
  for (int k = 0; k < opts.identity_samples; ++k) {
    const PhasePoint p = random_phase_point(e, rng());
    const double z = random_z(e, rng);
    const double phi = phi_z(e, z, p.x, p.xi);
    worst = std::max(worst, std::abs(phi - moser_identity_rhs(e, z, p.x, p.xi)) / std::max(1.0, std::abs(phi)));
  }
  r.measurements.push_back(measure("max_scaled_error", worst, Relation::Less, 1e-10));
  r.seconds = seconds_since(t0);
  return r;
}

CriterionResult check_chasles(const Ellipsoid& e, const LaxVerifyOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(9);
  std::mt19937_64 rng(opts.seed);
  double tangency = 0.0, misalignment = 0.0;
  int skipped = 0;
  for (int k = 0; k < opts.tangency_samples; ++k) {
    const PhasePoint p = random_phase_point(e, rng());
    const LaxSpectrum sp = spectrum(lax_matrix(e, p.x, p.xi));
    for (int j = 0; j < sp.nonzero_eigs.size(); ++j) {
      const double lam = sp.nonzero_eigs(j);
      const TangencyResidual t = confocal_tangency_residual(e, lam, p.x, p.xi);
      tangency = std::max(tangency, std::abs(t.value) / t.scale);
      const ContactPoint c = contact_point_and_normal(e, lam, p.x, p.xi);
      if (c.eigenvector_misalignment < 0.0) {
        ++skipped;
        continue;
      }
      misalignment = std::max(misalignment, c.eigenvector_misalignment);
    }
  }
  r.measurements.push_back(measure("max_tangency_residual", tangency, Relation::Less, 1e-9));
  r.measurements.push_back(measure("max_misalignment", misalignment, Relation::Less, 1e-7));
  if (skipped > 0) r.detail = std::to_string(skipped) + " eigenvalues not simple; alignment skipped there";
  r.seconds = seconds_since(t0);
  return r;
}

CriterionResult check_interlacing(const Ellipsoid& e, const LaxVerifyOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(10);
  std::mt19937_64 rng(opts.seed);
  double worst = 0.0;
  for (int k = 0; k < opts.interlacing_samples; ++k)
    worst = std::max(worst, interlacing_violation(e, ellipsoidal_coordinates(e, random_point(e, rng()))));
  r.measurements.push_back(measure("max_violation", worst, Relation::LessEq, 1e-10));
  r.seconds = seconds_since(t0);
  return r;
}

CriterionResult check_first_variation(const Ellipsoid& e, const LaxVerifyOptions& opts) {
  const auto t0 = Clock::now();
  CriterionResult r = start(11);
  const double h = 1e-5;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  double min_sv = std::numeric_limits<double>::infinity();
  for (int k = 0; k < opts.variation_samples; ++k) {
    const PhasePoint p = random_phase_point(e, rng());
    const auto basis = admissible_variation_basis(e, p.x, p.xi);
    PhaseVariation var{Vec::Zero(e.dim()), Vec::Zero(e.dim())};
    for (const auto& b : basis) {
      const double c = normal(rng);
      var.xdot += c * b.xdot;
      var.xidot += c * b.xidot;
    }
    const Vec fd = (lambda_at(e, p, var, h) - lambda_at(e, p, var, -h)) / (2 * h);
    const Vec an = eigenvalue_variation(e, p.x, p.xi, var.xdot, var.xidot).rates;
    worst = std::max(worst, (fd - an).norm() / an.norm());

    Mat jac(an.size(), static_cast<int>(basis.size()));
    for (size_t c = 0; c < basis.size(); ++c)
      jac.col(static_cast<int>(c)) = eigenvalue_variation(e, p.x, p.xi, basis[c].xdot, basis[c].xidot).rates;
    min_sv = std::min(min_sv, Eigen::JacobiSVD<Mat>(jac).singularValues().minCoeff());
  }
  r.measurements.push_back(measure("max_relative_error", worst, Relation::Less, 1e-6));
  r.measurements.push_back(measure("min_singular_value", min_sv, Relation::Greater, 1e-6));
  r.seconds = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------

std::string to_string(Relation r) {
  switch (r) {
    case Relation::Less: return "<";
    case Relation::LessEq: return "<=";
    case Relation::Greater: return ">";
    case Relation::GreaterEq: return ">=";
    case Relation::Equal: return "==";
  }
  return "?";
}

Measurement measure(std::string name, double value, Relation relation, double threshold) {
  bool ok = false;
  switch (relation) {
    case Relation::Less: ok = value < threshold; break;
    case Relation::LessEq: ok = value <= threshold; break;
    case Relation::Greater: ok = value > threshold; break;
    case Relation::GreaterEq: ok = value >= threshold; break;
    case Relation::Equal: ok = value == threshold; break;
  }
  return Measurement{std::move(name), value, relation, threshold, ok};
}

bool CriterionResult::passed() const {
  if (measurements.empty()) return false;
  return std::all_of(measurements.begin(), measurements.end(), [](const Measurement& m) { return m.passed; });
}

bool SuiteResult::passed() const {
  return std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.passed(); });
}

const std::vector<CriterionInfo>& acceptance_criteria() {
  static const std::vector<CriterionInfo> list{
      {1, "Sphere baseline", {"focal"}},
      {2, "Umbilic self-focality", {"focal"}},
      {3, "Return map at the umbilic", {"focal"}},
      {4, "Lax isospectrality", {"lax"}},
      {5, "Moment constancy at the umbilic", {"lax", "focal"}},
      {6, "No self-focal points on [4,3,2,1]", {"focal"}},
      {7, "(1,n-2,1) self-focal point", {"focal"}},
      {8, "Moser identity", {"lax"}},
      {9, "Confocal tangency and normals", {"lax"}},
      {10, "Ellipsoidal coordinate interlacing", {"lax"}},
      {11, "Eigenvalue first variation", {"lax"}},
      {12, "Isometry invariance", {"focal"}},
      {13, "Rosochatius flow", {"rosochatius"}},
      {14, "Suite wall clock and determinism", {"suite"}},
  };
  return list;
}

std::vector<int> select_criteria(const std::string& only) {
  const auto& all = acceptance_criteria();
  std::vector<bool> chosen(all.size() + 1, only.empty());
  std::stringstream ss(only);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    bool matched = false;
    for (const auto& info : all) {
      if (item == std::to_string(info.id) ||
          std::find(info.groups.begin(), info.groups.end(), item) != info.groups.end()) {
        chosen[static_cast<size_t>(info.id)] = true;
        matched = true;
      }
    }
    if (!matched) throw Error(ErrorKind::InvalidInput, "unknown criterion or group '" + item + "'");
  }
  std::vector<int> ids;
  for (const auto& info : all)
    if (chosen[static_cast<size_t>(info.id)]) ids.push_back(info.id);
  return ids;
}

CriterionResult run_criterion(int id, const AcceptanceOptions& opts) {
  LaxVerifyOptions lax;
  lax.seed = opts.seed;
  const Ellipsoid e4321 = make_ellipsoid({4, 3, 2, 1});
  switch (id) {
    case 1: return sphere_baseline(opts);
    case 2: return umbilic_self_focality(opts);
    case 3: return return_map_structure(opts);
    case 4: return check_isospectrality(e4321, lax);
    case 5: return moment_constancy(opts);
    case 6: return multiaxial_no_focal(opts);
    case 7: return special_point(opts);
    case 8: return check_moser_identity(e4321, lax);
    case 9: return check_chasles(e4321, lax);
    case 10: return check_interlacing(e4321, lax);
    case 11: return check_first_variation(e4321, lax);
    case 12: return isometry_invariance(opts);
    case 13: return rosochatius_checks(opts);
    default: break;
  }
  throw Error(ErrorKind::InvalidInput, "no standalone criterion " + std::to_string(id));
}

SuiteResult run_acceptance(const std::vector<int>& ids, const AcceptanceOptions& opts,
                           void (*progress)(const CriterionResult&)) {
  const auto t0 = Clock::now();
  SuiteResult suite;
  bool with_suite = false;
  for (int id : ids) {
    if (id == 14) {
      with_suite = true;
      continue;
    }
    CriterionResult r;
    try {
      r = run_criterion(id, opts);
    } catch (const Error& err) {
      r = start(id);
      r.detail = err.what();
    }
    if (progress) progress(r);
    suite.results.push_back(std::move(r));
  }
  if (with_suite) {
    const auto t14 = Clock::now();
    CriterionResult r = start(14);
    const bool same = probe_report(opts) == probe_report(opts);
    r.measurements.push_back(measure("reports_identical", same ? 1.0 : 0.0, Relation::Equal, 1.0));
    r.seconds = seconds_since(t14);
    r.measurements.push_back(measure("suite_wall_clock_s", seconds_since(t0), Relation::Less, 900));
    if (ids.size() < acceptance_criteria().size()) r.detail = "wall clock covers the selected criteria only";
    if (progress) progress(r);
    suite.results.push_back(std::move(r));
  }
  suite.seconds = seconds_since(t0);
  return suite;
}

std::string summary_line(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.passed() ? "PASS" : "FAIL") << "  " << std::setw(2) << r.id << "  " << r.name << "  [";
  for (size_t k = 0; k < r.measurements.size(); ++k) {
    const auto& m = r.measurements[k];
    if (k) os << "; ";
    os << m.name << '=' << fmt(m.value) << ' ' << to_string(m.relation) << ' ' << fmt(m.threshold);
  }
  os << "]  " << std::fixed << std::setprecision(1) << r.seconds << "s";
  if (!r.detail.empty()) os << "  (" << r.detail << ')';
  return os.str();
}

}  // namespace ellfocal
