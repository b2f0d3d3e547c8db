#include "ellfocal/report.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace ellfocal {

#ifndef ELLFOCAL_VERSION
#define ELLFOCAL_VERSION "0.0.0"
#endif

std::string version_string() { return ELLFOCAL_VERSION; }

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

Json to_json(const Vec& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Json to_json(const IntegratorOptions& o) {
  return Json{{"rel_tol", o.rel_tol},         {"abs_tol", o.abs_tol},
              {"max_step", o.max_step},       {"t_max", o.t_max},
              {"projection_every", o.projection_every}, {"max_steps", o.max_steps}};
}

Json to_json(const GridOptions& g) {
  return Json{{"anchored", g.anchored}, {"random_extra", g.random_extra}, {"seed", g.seed}};
}

namespace {

Json event_json(const std::optional<ReturnEvent>& ev) {
  if (!ev) return nullptr;
  return Json{{"time", number(ev->return_time)},
              {"miss_distance", number(ev->miss_distance)},
              {"terminal_direction", to_json(ev->terminal_direction)}};
}

}  // namespace

Json to_json(const ScanReport& r) {
  Json dirs = Json::array();
  for (const auto& d : r.results) {
    dirs.push_back(Json{{"direction", to_json(d.direction)},
                        {"first_return", event_json(d.first_return)},
                        {"closest_approach", event_json(d.closest)},
                        {"representative_time", number(d.representative_time())},
                        {"angular_deviation", number(d.angular_deviation())},
                        {"integration_failed", d.integration_failed},
                        {"detail", d.detail}});
  }
  return Json{{"base_point", to_json(r.base_point)},
              {"verdict", to_string(r.verdict)},
              {"detail", r.detail},
              {"directions", static_cast<int>(r.results.size())},
              {"returned_count", r.returned_count},
              {"mean_time", number(r.mean_time)},
              {"time_spread", number(r.time_spread)},
              {"relative_spread", number(r.relative_spread)},
              {"max_miss", number(r.max_miss)},
              {"return_radius", r.return_radius},
              {"focal_tol", r.focal_tol},
              {"separation_tol", r.separation_tol},
              {"integrator", to_json(r.integrator)},
              {"grid", to_json(r.grid)},
              {"results", dirs}};
}

Json to_json(const std::vector<ReturnMapSample>& samples) {
  Json out = Json::array();
  for (const auto& s : samples) {
    out.push_back(Json{{"initial_direction", to_json(s.initial_direction)},
                       {"terminal_direction", to_json(s.terminal_direction)},
                       {"angular_deviation", number(s.angular_deviation)},
                       {"return_time", number(s.return_time)},
                       {"miss_distance", number(s.miss_distance)},
                       {"flagged", s.flagged}});
  }
  return out;
}

Json to_json(const TwistReport& r) {
  Json samples = Json::array();
  for (const auto& s : r.samples) {
    Json eigs = Json::array();
    for (const auto& mu : s.eigenvalues) eigs.push_back(Json{{"re", number(mu.real())}, {"im", number(mu.imag())}});
    Json jac = Json::array();
    for (int i = 0; i < s.jacobian.rows(); ++i) {
      Json row = Json::array();
      for (int k = 0; k < s.jacobian.cols(); ++k) row.push_back(number(s.jacobian(i, k)));
      jac.push_back(row);
    }
    samples.push_back(Json{{"direction", to_json(s.direction)},
                           {"jacobian", jac},
                           {"eigenvalues", eigs},
                           {"distance_from_one", number(s.distance_from_one)},
                           {"det_minus_identity", number(s.det_minus_identity)},
                           {"insufficient_resolution", s.insufficient_resolution}});
  }
  return Json{{"step", r.step}, {"min_distance", number(r.min_distance)}, {"untwisted", r.untwisted}, {"samples", samples}};
}

Json to_json(const UmbilicPoints& u) {
  Json pts = Json::array();
  for (const auto& p : u.points) pts.push_back(to_json(p));
  return Json{{"points", pts},
              {"max_defect", u.max_defect},
              {"max_constraint_residual", u.max_constraint_residual},
              {"closed_form_discrepancy", u.closed_form_discrepancy}};
}

Json to_json(const MomentConstancyReport& r) {
  return Json{{"directions", r.directions},
              {"spread", r.spread},
              {"mean_eigenvalues", to_json(r.mean_eigs)},
              {"eigenvalue_spread", to_json(r.eig_spread)},
              {"distance_to_axes", to_json(r.distance_to_axes)},
              {"degeneracy_anomaly", r.any_degeneracy_anomaly}};
}

Json to_json(const ExperimentReport& r) {
  Json rows = Json::array();
  for (const auto& s : r.summaries) {
    rows.push_back(Json{{"j", s.j},
                        {"energy", s.energy},
                        {"directions", s.directions},
                        {"returned_count", s.returned_count},
                        {"halted_count", s.halted_count},
                        {"mean_time", number(s.mean_time)},
                        {"time_spread", number(s.time_spread)},
                        {"relative_spread", number(s.relative_spread)},
                        {"max_miss", number(s.max_miss)}});
  }
  return Json{{"alphas", to_json(r.alphas)},
              {"umbilic", to_json(r.umbilic)},
              {"singular_index", r.singular_index},
              {"return_radius", r.return_radius},
              {"barrier_tol", r.barrier_tol},
              {"integrator", to_json(r.integrator)},
              {"j_grid", r.j_grid},
              {"summaries", rows}};
}

Json to_json(const Measurement& m) {
  return Json{{"name", m.name},
              {"value", number(m.value)},
              {"relation", to_string(m.relation)},
              {"threshold", m.threshold},
              {"passed", m.passed}};
}

Json to_json(const CriterionResult& r) {
  Json ms = Json::array();
  for (const auto& m : r.measurements) ms.push_back(to_json(m));
  return Json{{"id", r.id},
              {"name", r.name},
              {"status", r.passed() ? "PASS" : "FAIL"},
              {"seconds", r.seconds},
              {"measurements", ms},
              {"detail", r.detail}};
}

Json envelope(const std::string& command, const Json& config, const Json& seeds, const Json& tolerances,
              const Json& body) {
  return Json{{"schema_version", kSchemaVersion},
              {"version", version_string()},
              {"command", command},
              {"config", config},
              {"seeds", seeds},
              {"tolerances", tolerances},
              {"report", body}};
}

void write_scan_csv(std::ostream& os, const ScanReport& r) {
  os << "direction_index,returned,representative_time,miss_distance,angular_deviation,integration_failed\n";
  os << std::setprecision(17);
  for (size_t k = 0; k < r.results.size(); ++k) {
    const auto& d = r.results[k];
    os << k << ',' << (d.returned() ? 1 : 0) << ',' << d.representative_time() << ',' << d.representative_miss() << ','
       << d.angular_deviation() << ',' << (d.integration_failed ? 1 : 0) << '\n';
  }
}

void write_return_map_csv(std::ostream& os, const Ellipsoid& e, const Vec& x0,
                          const std::vector<ReturnMapSample>& samples) {
  os << "direction_index,angle,angular_deviation,return_time,miss_distance,flagged\n";
  os << std::setprecision(17);
  for (size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    os << k << ',';
    if (e.dim() == 3) os << circle_angle(e, x0, s.initial_direction);
    os << ',' << s.angular_deviation << ',' << s.return_time << ',' << s.miss_distance << ',' << (s.flagged ? 1 : 0)
       << '\n';
  }
}

}  // namespace ellfocal
