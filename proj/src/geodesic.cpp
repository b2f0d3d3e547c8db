#include "ellfocal/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "ellfocal/lax.hpp"

namespace ellfocal {

void GeodesicSystem::acceleration(const Vec& x, const Vec& v, Vec& a) const {
  const Vec ax = e_.apply_inverse(x);
  const double nu = v.dot(e_.apply_inverse(v)) / ax.squaredNorm();
  a = -nu * ax;
}

void GeodesicSystem::project(Vec& x, Vec& v) const {
  x /= std::sqrt(e_.constraint_value(x));
  const Vec nrm = e_.apply_inverse(x).normalized();
  v -= v.dot(nrm) * nrm;
  v.normalize();
}

GeodesicRhs geodesic_rhs(const Ellipsoid& e, const Vec& x, const Vec& y) {
  if (x.size() != e.dim() || y.size() != e.dim()) throw Error(ErrorKind::InvalidInput, "dimension mismatch");
  GeodesicRhs out;
  out.dx = y;
  GeodesicSystem(e).acceleration(x, y, out.dy);
  return out;
}

PhasePoint Trajectory::state_at(double t) const {
  if (samples.empty()) throw Error(ErrorKind::InvalidInput, "empty trajectory");
  if (t < t_begin() || t > t_end()) throw Error(ErrorKind::InvalidInput, "time outside trajectory");
  if (segments.empty()) {
    // Without dense output only sample times are available.
    for (const auto& s : samples)
      if (s.t == t) return s.point;
    throw Error(ErrorKind::InvalidInput, "trajectory kept no dense output");
  }
  auto it = std::lower_bound(segments.begin(), segments.end(), t,
                             [](const DenseSegment& s, double tt) { return s.t1 < tt; });
  if (it == segments.end()) it = std::prev(segments.end());
  const Vec y = it->eval(t);
  const int n = static_cast<int>(y.size() / 2);
  return PhasePoint{y.head(n), y.tail(n)};
}

double Trajectory::max_constraint_residual() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.constraint_residual);
  return m;
}

double Trajectory::max_speed_residual() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.speed_residual);
  return m;
}

double Trajectory::max_lax_drift() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.lax_drift);
  return m;
}

namespace {

TrajectorySample make_sample(const Ellipsoid& e, double t, const Vec& x, const Vec& v, const Vec& ref_eigs,
                             bool track_lax) {
  TrajectorySample s;
  s.t = t;
  s.point = PhasePoint{x, v};
  s.constraint_residual = e.constraint_residual(x);
  s.speed_residual = std::abs(v.norm() - 1.0);
  if (track_lax && ref_eigs.size() > 0) {
    const LaxSpectrum sp = spectrum(lax_matrix(e, x, v.normalized()));
    if (sp.nonzero_eigs.size() == ref_eigs.size()) {
      s.lax_drift = ((sp.nonzero_eigs - ref_eigs).cwiseAbs().array() / ref_eigs.cwiseAbs().array()).maxCoeff();
    } else {
      s.lax_drift = std::numeric_limits<double>::infinity();
    }
  }
  return s;
}

Vec stack(const Vec& x, const Vec& v) {
  Vec y(2 * x.size());
  y << x, v;
  return y;
}

}  // namespace

Trajectory integrate_geodesic(const Ellipsoid& e, const PhasePoint& p0, const IntegratorOptions& opts,
                              const TrajectoryOptions& topts) {
  check_phase_point(e, p0);
  const GeodesicSystem sys(e);
  const int n = e.dim();
  auto traj = std::make_shared<Trajectory>();
  Vec ref_eigs;
  if (topts.track_lax_drift) ref_eigs = spectrum(lax_matrix(e, p0.x, p0.xi)).nonzero_eigs;
  traj->samples.push_back(make_sample(e, 0.0, p0.x, p0.xi, ref_eigs, topts.track_lax_drift));
  try {
    integrate(sys, stack(p0.x, p0.xi), opts, [&](const StepView& step) {
      traj->samples.push_back(
          make_sample(e, step.t1, step.y1.head(n), step.y1.tail(n), ref_eigs, topts.track_lax_drift));
      if (topts.keep_dense_output) traj->segments.push_back(step.segment);
      return true;
    });
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::IntegrationFailure) throw IntegrationFailure(err.what(), traj);
    throw;
  }
  return std::move(*traj);
}

PhasePoint exp_map(const Ellipsoid& e, const Vec& x0, const Vec& xi0, double t, const IntegratorOptions& opts) {
  check_phase_point(e, PhasePoint{x0, xi0});
  if (t == 0.0) return PhasePoint{x0, xi0};
  const bool backward = t < 0.0;
  IntegratorOptions o = opts;
  o.t_max = std::abs(t);
  const GeodesicSystem sys(e);
  const int n = e.dim();
  const IntegrationResult r = integrate(sys, stack(x0, backward ? Vec(-xi0) : xi0), o);
  PhasePoint out{r.y_end.head(n), r.y_end.tail(n)};
  if (backward) out.xi = -out.xi;
  return out;
}

double default_return_radius(const Ellipsoid& e) { return 1e-3 * e.geometric_mean_semi_axis(); }

std::vector<ReturnEvent> first_return(const Ellipsoid& e, const Vec& x0, const Vec& xi0,
                                      const IntegratorOptions& opts, double return_radius) {
  check_phase_point(e, PhasePoint{x0, xi0});
  if (!(return_radius > 0.0)) throw Error(ErrorKind::InvalidInput, "return radius must be positive");
  ApproachOptions aopts;
  aopts.return_radius = return_radius;
  aopts.track_closest = false;
  const ApproachResult r = find_approaches(GeodesicSystem(e), stack(x0, xi0), x0, opts, aopts);
  std::vector<ReturnEvent> out;
  out.reserve(r.events.size());
  for (const auto& ev : r.events) out.push_back(ReturnEvent{ev.time, ev.v.normalized(), ev.miss});
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int n = traj.samples.empty() ? 0 : static_cast<int>(traj.samples.front().point.x.size());
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x_" << i;
  for (int i = 1; i <= n; ++i) os << ",xi_" << i;
  os << ",constraint_residual,speed_residual\n";
  os << std::setprecision(17);
  for (const auto& s : traj.samples) {
    os << s.t;
    for (int i = 0; i < n; ++i) os << ',' << s.point.x(i);
    for (int i = 0; i < n; ++i) os << ',' << s.point.xi(i);
    os << ',' << s.constraint_residual << ',' << s.speed_residual << '\n';
  }
}

}  // namespace ellfocal
