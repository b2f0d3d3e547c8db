#include "ellfocal/rosochatius.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>

#include "ellfocal/error.hpp"
#include "ellfocal/parallel.hpp"

namespace ellfocal {

namespace {

constexpr double kReductionTol = 1e-8;

Vec stack(const Vec& x, const Vec& v) {
  Vec y(2 * x.size());
  y << x, v;
  return y;
}

Vec potential_gradient(const RosochatiusSystem& sys, const Vec& x) {
  Vec g = Vec::Zero(3);
  if (sys.j != 0.0) {
    const double xs = x(sys.singular_index);
    g(sys.singular_index) = -sys.j * sys.j / (xs * xs * xs);
  }
  return g;
}

Vec constrained_acceleration(const RosochatiusSystem& sys, const Vec& x, const Vec& v) {
  const Ellipsoid& e = sys.base;
  const Vec ax = e.apply_inverse(x);
  const Vec grad = potential_gradient(sys, x);
  const double nu = (v.dot(e.apply_inverse(v)) - ax.dot(grad)) / ax.squaredNorm();
  return -grad - nu * ax;
}

}  // namespace

RosochatiusSystem make_rosochatius(const Ellipsoid& base, double j, int singular_index) {
  if (base.dim() != 3) throw Error(ErrorKind::UnsupportedDimension, "the Rosochatius system lives on a 2-D ellipsoid");
  if (!std::isfinite(j)) throw Error(ErrorKind::InvalidInput, "j must be finite");
  if (singular_index < 0 || singular_index >= 3) throw Error(ErrorKind::InvalidInput, "singular coordinate out of range");
  return RosochatiusSystem{base, j, singular_index, {}};
}

double barrier_tol(const RosochatiusSystem& sys) { return 1e-4 * sys.base.min_semi_axis(); }

double rosochatius_potential(const RosochatiusSystem& sys, const Vec& x) {
  if (sys.j == 0.0) return 0.0;
  const double xs = x(sys.singular_index);
  return sys.j * sys.j / (2.0 * xs * xs);
}

double rosochatius_energy(const RosochatiusSystem& sys, const Vec& x, const Vec& v) {
  return 0.5 * v.squaredNorm() + rosochatius_potential(sys, x);
}

GeodesicRhs rosochatius_rhs(const RosochatiusSystem& sys, const Vec& x, const Vec& v) {
  if (x.size() != 3 || v.size() != 3) throw Error(ErrorKind::InvalidInput, "dimension mismatch");
  check_on_ellipsoid(sys.base, x);
  if (sys.j != 0.0 && std::abs(x(sys.singular_index)) < barrier_tol(sys))
    throw Error(ErrorKind::BarrierProximity, "state inside the barrier of the singular coordinate");
  return GeodesicRhs{v, constrained_acceleration(sys, x, v)};
}

RosochatiusFlow::RosochatiusFlow(RosochatiusSystem sys, double energy) : sys_(std::move(sys)), energy_(energy) {}

void RosochatiusFlow::acceleration(const Vec& x, const Vec& v, Vec& a) const {
  a = constrained_acceleration(sys_, x, v);
}

void RosochatiusFlow::project(Vec& x, Vec& v) const {
  const Ellipsoid& e = sys_.base;
  x /= std::sqrt(e.constraint_value(x));
  const Vec nrm = e.apply_inverse(x).normalized();
  v -= v.dot(nrm) * nrm;
  const double kinetic = energy_ - rosochatius_potential(sys_, x);
  const double speed = v.norm();
  if (kinetic > 0.0 && speed > 0.0) v *= std::sqrt(2.0 * kinetic) / speed;
}

PhasePoint ReducedTrajectory::state_at(double t) const {
  if (samples.empty() || !dense) throw Error(ErrorKind::InvalidInput, "trajectory kept no dense output");
  if (t < t_begin() || t > t_end()) throw Error(ErrorKind::InvalidInput, "time outside trajectory");
  return dense(t);
}

double ReducedTrajectory::max_energy_drift() const {
  if (samples.empty()) return 0.0;
  const double h0 = samples.front().energy;
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, std::abs(s.energy - h0) / std::abs(h0));
  return m;
}

double ReducedTrajectory::max_constraint_residual() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.constraint_residual);
  return m;
}

double ReducedTrajectory::min_barrier_distance() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) m = std::min(m, s.barrier_distance);
  return m;
}

namespace {

ReducedSample make_sample(const RosochatiusSystem& sys, double t, const Vec& x, const Vec& v) {
  ReducedSample s;
  s.t = t;
  s.point = PhasePoint{x, v};
  s.constraint_residual = sys.base.constraint_residual(x);
  s.energy = rosochatius_energy(sys, x, v);
  s.barrier_distance = std::abs(x(sys.singular_index));
  return s;
}

void check_reduced_start(const RosochatiusSystem& sys, const PhasePoint& p0) {
  if (p0.x.size() != 3 || p0.xi.size() != 3) throw Error(ErrorKind::InvalidInput, "dimension mismatch");
  check_on_ellipsoid(sys.base, p0.x);
  const Vec nrm = unit_normal(sys.base, p0.x);
  if (std::abs(nrm.dot(p0.xi)) > 1e-9 * std::max(1.0, p0.xi.norm()))
    throw Error(ErrorKind::ConstraintViolation, "initial velocity is not tangent");
  if (sys.j != 0.0 && std::abs(p0.x(sys.singular_index)) < barrier_tol(sys))
    throw Error(ErrorKind::BarrierProximity, "initial point inside the barrier");
}

}  // namespace

ReducedTrajectory integrate_rosochatius(const RosochatiusSystem& sys, const PhasePoint& p0,
                                        const IntegratorOptions& opts) {
  check_reduced_start(sys, p0);
  const double energy = rosochatius_energy(sys, p0.x, p0.xi);
  const RosochatiusFlow flow(sys, energy);
  const double tol = barrier_tol(sys);

  ReducedTrajectory out{sys, {}, false, {}, {}};
  out.samples.push_back(make_sample(sys, 0.0, p0.x, p0.xi));
  auto segments = std::make_shared<std::vector<DenseSegment>>();
  integrate(flow, stack(p0.x, p0.xi), opts, [&](const StepView& step) {
    const Vec x = step.y1.head(3);
    out.samples.push_back(make_sample(sys, step.t1, x, step.y1.tail(3)));
    segments->push_back(step.segment);
    if (sys.j != 0.0 && std::abs(x(sys.singular_index)) < tol) {
      out.halted = true;
      out.halt_detail = "barrier reached at t = " + std::to_string(step.t1);
      return false;
    }
    return true;
  });
  out.dense = [segments](double t) {
    auto it = std::lower_bound(segments->begin(), segments->end(), t,
                               [](const DenseSegment& s, double tt) { return s.t1 < tt; });
    if (it == segments->end()) it = std::prev(segments->end());
    const Vec y = it->eval(t);
    return PhasePoint{y.head(3), y.tail(3)};
  };
  if (segments->empty()) out.dense = nullptr;
  return out;
}

Reduction211 make_reduction_211(const Ellipsoid& e4) {
  if (e4.dim() != 4) throw Error(ErrorKind::InvalidMultiplicities, "the (2,1,1) reduction needs a 4-dimensional ellipsoid");
  const auto& mult = e4.multiplicities();
  const auto doubled = std::find(mult.begin(), mult.end(), 2);
  if (mult.size() != 3 || doubled == mult.end())
    throw Error(ErrorKind::InvalidMultiplicities, "expected multiplicities (2,1,1) in some order");
  const auto& block = e4.blocks()[static_cast<size_t>(doubled - mult.begin())];
  Reduction211 red{e4, e4, {block[0], block[1]}, {}};
  int k = 0;
  for (int i = 0; i < 4; ++i)
    if (i != block[0] && i != block[1]) red.others[static_cast<size_t>(k++)] = i;
  const Vec& a = e4.alphas();
  red.base = Ellipsoid::make({a(block[0]), a(red.others[0]), a(red.others[1])});
  return red;
}

double block_momentum(const Reduction211& red, const PhasePoint& p) {
  const auto [ia, ib] = red.block;
  return p.x(ia) * p.xi(ib) - p.x(ib) * p.xi(ia);
}

PhasePoint reduce_state(const Reduction211& red, const PhasePoint& p) {
  const auto [ia, ib] = red.block;
  const double r = std::hypot(p.x(ia), p.x(ib));
  if (!(r > 0.0)) throw Error(ErrorKind::DegenerateInput, "state on the axis of the doubled block");
  Vec x(3), v(3);
  x << r, p.x(red.others[0]), p.x(red.others[1]);
  v << (p.x(ia) * p.xi(ia) + p.x(ib) * p.xi(ib)) / r, p.xi(red.others[0]), p.xi(red.others[1]);
  return PhasePoint{x, v};
}

PhasePoint lift_state(const Reduction211& red, const PhasePoint& q, double j, double angle) {
  const double r = q.x(0);
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidInput, "reduced radius must be positive");
  const double c = std::cos(angle), s = std::sin(angle);
  const auto [ia, ib] = red.block;
  Vec x(4), v(4);
  x(ia) = r * c;
  x(ib) = r * s;
  v(ia) = q.xi(0) * c - j / r * s;
  v(ib) = q.xi(0) * s + j / r * c;
  for (int k = 0; k < 2; ++k) {
    x(red.others[static_cast<size_t>(k)]) = q.x(k + 1);
    v(red.others[static_cast<size_t>(k)]) = q.xi(k + 1);
  }
  return PhasePoint{x, v};
}

ReducedTrajectory reduce_211_orbit(const Ellipsoid& e4, const Trajectory& traj) {
  const Reduction211 red = make_reduction_211(e4);
  if (traj.samples.empty()) throw Error(ErrorKind::InvalidInput, "empty trajectory");
  if (traj.samples.front().point.x.size() != 4) throw Error(ErrorKind::InvalidInput, "trajectory dimension mismatch");
  const double j0 = block_momentum(red, traj.samples.front().point);
  RosochatiusSystem sys = make_rosochatius(red.base, j0, 0);
  sys.source_indices = {-1, red.others[0], red.others[1]};

  ReducedTrajectory out{sys, {}, false, {}, {}};
  out.samples.reserve(traj.samples.size());
  for (const auto& s : traj.samples) {
    const double drift = std::abs(block_momentum(red, s.point) - j0);
    if (drift > kReductionTol)
      throw Error(ErrorKind::ReductionInconsistency,
                  "block momentum drifted by " + std::to_string(drift) + " at t = " + std::to_string(s.t));
    const PhasePoint q = reduce_state(red, s.point);
    out.samples.push_back(make_sample(sys, s.t, q.x, q.xi));
  }
  if (!traj.segments.empty()) {
    auto source = std::make_shared<const Trajectory>(traj);
    out.dense = [source, red](double t) { return reduce_state(red, source->state_at(t)); };
  }
  return out;
}

ExperimentReport umbilic_return_experiment(const std::vector<double>& alphas3, const std::vector<double>& j_grid,
                                           int num_directions, const RosochatiusExperimentOptions& opts) {
  if (j_grid.empty()) throw Error(ErrorKind::InvalidInput, "empty j grid");
  for (double j : j_grid)
    if (!std::isfinite(j)) throw Error(ErrorKind::InvalidInput, "j grid must be finite");
  if (num_directions < 1) throw Error(ErrorKind::InvalidInput, "need at least one direction");
  const Ellipsoid base = make_ellipsoid(alphas3);
  const UmbilicPoints umb = umbilic_points_2d(alphas3);

  ExperimentReport rep;
  rep.alphas = base.alphas();
  rep.umbilic = umb.points[0];
  rep.singular_index = opts.singular_index;
  if (rep.singular_index < 0) base.alphas().maxCoeff(&rep.singular_index);
  const RosochatiusSystem probe = make_rosochatius(base, 0.0, rep.singular_index);
  rep.barrier_tol = barrier_tol(probe);
  if (std::abs(rep.umbilic(rep.singular_index)) < rep.barrier_tol)
    throw Error(ErrorKind::BarrierProximity, "the umbilic lies on the barrier of the chosen coordinate");
  rep.integrator = resolve_scan_integrator(base, opts.integrator);
  rep.return_radius = resolve_return_radius(base, opts.return_radius);
  rep.j_grid = j_grid;

  const Vec& u = rep.umbilic;
  const std::vector<Vec> dirs = direction_grid(base, u, num_directions, opts.grid);
  const int per_j = static_cast<int>(dirs.size());
  rep.rows.resize(j_grid.size() * dirs.size());

  ApproachOptions aopts;
  aopts.return_radius = rep.return_radius;
  aopts.max_events = 1;
  aopts.track_closest = true;
  parallel_for(static_cast<int>(rep.rows.size()), opts.threads, [&](int idx) {
    const size_t jk = static_cast<size_t>(idx / per_j);
    const int d = idx % per_j;
    const RosochatiusSystem sys = make_rosochatius(base, j_grid[jk], rep.singular_index);
    // Unit speed at the umbilic, so H = 1/2 + V(u).
    const RosochatiusFlow flow(sys, 0.5 + rosochatius_potential(sys, u));
    ExperimentRow& row = rep.rows[static_cast<size_t>(idx)];
    row.j = sys.j;
    row.direction_index = d;
    bool halted = false;
    const double tol = rep.barrier_tol;
    const int s = rep.singular_index;
    auto barrier = [&](const StepView& step) {
      if (sys.j != 0.0 && std::abs(step.y1(s)) < tol) {
        halted = true;
        return false;
      }
      return true;
    };
    try {
      const ApproachResult ar =
          find_approaches(flow, stack(u, dirs[static_cast<size_t>(d)]), u, rep.integrator, aopts, barrier);
      row.halted = halted;
      const ApproachEvent* pick = !ar.events.empty() ? &ar.events.front() : (ar.closest ? &*ar.closest : nullptr);
      row.returned = !ar.events.empty();
      if (pick) {
        row.return_time = pick->time;
        row.miss_distance = pick->miss;
      } else {
        row.return_time = std::numeric_limits<double>::quiet_NaN();
        row.miss_distance = std::numeric_limits<double>::quiet_NaN();
      }
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::IntegrationFailure) throw;
      row.integration_failed = true;
      row.return_time = std::numeric_limits<double>::quiet_NaN();
      row.miss_distance = std::numeric_limits<double>::quiet_NaN();
    }
  });

  for (size_t jk = 0; jk < j_grid.size(); ++jk) {
    ExperimentSummary sum;
    const RosochatiusSystem sys = make_rosochatius(base, j_grid[jk], rep.singular_index);
    sum.j = sys.j;
    sum.energy = 0.5 + rosochatius_potential(sys, u);
    sum.directions = per_j;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, total = 0.0;
    int used = 0;
    for (int d = 0; d < per_j; ++d) {
      const ExperimentRow& row = rep.rows[jk * static_cast<size_t>(per_j) + static_cast<size_t>(d)];
      sum.returned_count += row.returned;
      sum.halted_count += row.halted;
      if (row.halted || row.integration_failed || std::isnan(row.return_time)) continue;
      lo = std::min(lo, row.return_time);
      hi = std::max(hi, row.return_time);
      total += row.return_time;
      sum.max_miss = std::max(sum.max_miss, row.miss_distance);
      ++used;
    }
    if (used > 0) {
      sum.mean_time = total / used;
      sum.time_spread = hi - lo;
      sum.relative_spread = sum.time_spread / sum.mean_time;
    } else {
      sum.mean_time = sum.time_spread = sum.relative_spread = std::numeric_limits<double>::quiet_NaN();
    }
    rep.summaries.push_back(sum);
  }
  return rep;
}

void write_experiment_csv(std::ostream& os, const ExperimentReport& rep) {
  os << "j,direction_index,return_time,miss_distance,halted_flag\n" << std::setprecision(17);
  for (const auto& r : rep.rows)
    os << r.j << ',' << r.direction_index << ',' << r.return_time << ',' << r.miss_distance << ',' << (r.halted ? 1 : 0)
       << '\n';
}

}  // namespace ellfocal
