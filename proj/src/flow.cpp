#include "ellfocal/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dop853_tableau.hpp"
#include "ellfocal/error.hpp"

namespace ellfocal {

namespace {

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr double kErrorExponent = -1.0 / 8.0;

using Stages = std::array<Vec, dop853::kStagesExtended>;

double rms(const Vec& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(v.size())); }

// Runs the 12 main stages; K[12] receives f(y_new).
Vec rk_step(const ConstrainedSystem& sys, const Vec& y, const Vec& f, double h, Stages& k) {
  k[0] = f;
  Vec tmp(y.size());
  for (int s = 1; s < dop853::kStages; ++s) {
    tmp = y;
    for (int j = 0; j < s; ++j)
      if (dop853::A[s][j] != 0.0) tmp.noalias() += (h * dop853::A[s][j]) * k[static_cast<size_t>(j)];
    k[static_cast<size_t>(s)] = rhs(sys, tmp);
  }
  Vec y_new = y;
  for (int j = 0; j < dop853::kStages; ++j)
    if (dop853::A[dop853::kStages][j] != 0.0)
      y_new.noalias() += (h * dop853::A[dop853::kStages][j]) * k[static_cast<size_t>(j)];
  k[dop853::kStages] = rhs(sys, y_new);
  return y_new;
}

double error_norm(const Stages& k, double h, const Vec& scale) {
  Vec err5 = Vec::Zero(scale.size());
  Vec err3 = Vec::Zero(scale.size());
  for (int j = 0; j <= dop853::kStages; ++j) {
    err5.noalias() += dop853::E5[j] * k[static_cast<size_t>(j)];
    err3.noalias() += dop853::E3[j] * k[static_cast<size_t>(j)];
  }
  err5 = err5.cwiseQuotient(scale);
  err3 = err3.cwiseQuotient(scale);
  const double e5 = err5.squaredNorm();
  const double e3 = err3.squaredNorm();
  if (e5 == 0.0 && e3 == 0.0) return 0.0;
  const double denom = e5 + 0.01 * e3;
  return std::abs(h) * e5 / std::sqrt(denom * static_cast<double>(scale.size()));
}

DenseSegment make_dense(const ConstrainedSystem& sys, double t0, double h, const Vec& y0, const Vec& y1,
                        const Vec& f1, Stages& k) {
  Vec tmp(y0.size());
  for (int s = dop853::kStages + 1; s < dop853::kStagesExtended; ++s) {
    tmp = y0;
    for (int j = 0; j < s; ++j)
      if (dop853::A[s][j] != 0.0) tmp.noalias() += (h * dop853::A[s][j]) * k[static_cast<size_t>(j)];
    k[static_cast<size_t>(s)] = rhs(sys, tmp);
  }
  DenseSegment seg;
  seg.t0 = t0;
  seg.t1 = t0 + h;
  seg.y0 = y0;
  const Vec& f0 = k[0];
  const Vec delta = y1 - y0;
  seg.coeffs[0] = delta;
  seg.coeffs[1] = h * f0 - delta;
  seg.coeffs[2] = 2.0 * delta - h * (f1 + f0);
  for (int r = 0; r < dop853::kInterpolatorPower - 3; ++r) {
    Vec c = Vec::Zero(y0.size());
    for (int j = 0; j < dop853::kStagesExtended; ++j)
      if (dop853::D[r][j] != 0.0) c.noalias() += dop853::D[r][j] * k[static_cast<size_t>(j)];
    seg.coeffs[static_cast<size_t>(3 + r)] = h * c;
  }
  return seg;
}

double initial_step(const ConstrainedSystem& sys, const Vec& y, const Vec& f, double rtol, double atol) {
  const Vec scale = (atol + rtol * y.cwiseAbs().array()).matrix();
  const double d0 = rms(y.cwiseQuotient(scale));
  const double d1 = rms(f.cwiseQuotient(scale));
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  const Vec y1 = y + h0 * f;
  const Vec f1 = rhs(sys, y1);
  const double d2 = rms((f1 - f).cwiseQuotient(scale)) / h0;
  const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                  : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
  return std::min(100.0 * h0, h1);
}

void project_state(const ConstrainedSystem& sys, Vec& y) {
  const int n = sys.dim();
  Vec x = y.head(n);
  Vec v = y.tail(n);
  sys.project(x, v);
  y.head(n) = x;
  y.tail(n) = v;
}

}  // namespace

void validate(const IntegratorOptions& opts) {
  if (!(opts.rel_tol > 0.0) || !(opts.abs_tol > 0.0))
    throw Error(ErrorKind::InvalidInput, "integrator tolerances must be positive");
  // Below ~100 eps the error estimate is rounding noise and steps collapse.
  if (opts.rel_tol < kMinRelTol) throw Error(ErrorKind::InvalidInput, "rel_tol below 1e-14 is not attainable");
  if (opts.max_steps < 1) throw Error(ErrorKind::InvalidInput, "max_steps must be positive");
  if (!(opts.t_max > 0.0)) throw Error(ErrorKind::InvalidInput, "t_max must be positive");
  if (opts.projection_every < 1) throw Error(ErrorKind::InvalidInput, "projection_every must be >= 1");
  if (opts.max_step < 0.0) throw Error(ErrorKind::InvalidInput, "max_step must be >= 0");
}

Vec DenseSegment::eval(double t) const {
  const double h = t1 - t0;
  const double s = h == 0.0 ? 0.0 : (t - t0) / h;
  Vec y = Vec::Zero(y0.size());
  for (int i = 0; i < 7; ++i) {
    y += coeffs[static_cast<size_t>(6 - i)];
    y *= (i % 2 == 0) ? s : (1.0 - s);
  }
  return y + y0;
}

Vec rhs(const ConstrainedSystem& sys, const Vec& y) {
  const int n = sys.dim();
  Vec out(2 * n);
  Vec a(n);
  sys.acceleration(y.head(n), y.tail(n), a);
  out.head(n) = y.tail(n);
  out.tail(n) = a;
  return out;
}

Vec advance(const ConstrainedSystem& sys, const Vec& y, const Vec& f, double h) {
  if (h == 0.0) return y;
  Stages k;
  return rk_step(sys, y, f, h, k);
}

IntegrationResult integrate(const ConstrainedSystem& sys, const Vec& y0, const IntegratorOptions& opts,
                            const StepObserver& observer) {
  validate(opts);
  if (y0.size() != 2 * sys.dim()) throw Error(ErrorKind::InvalidInput, "state has wrong dimension");

  IntegrationResult res;
  double t = 0.0;
  Vec y = y0;
  Vec f = rhs(sys, y);
  const double t_end = opts.t_max;
  const double max_step = opts.max_step > 0.0 ? opts.max_step : std::numeric_limits<double>::infinity();
  double h = std::min(initial_step(sys, y, f, opts.rel_tol, opts.abs_tol), max_step);
  Stages k;
  long since_projection = 0;

  while (t < t_end) {
    if (res.accepted_steps + res.rejected_steps >= opts.max_steps) {
      res.t_end = t;
      res.y_end = y;
      throw Error(ErrorKind::IntegrationFailure, "step budget exhausted");
    }
    const double min_step = 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    bool step_rejected = false;
    double h_abs = std::min(h, max_step);
    Vec y_new;
    double t_new = t;
    for (;;) {
      if (h_abs < min_step) {
        std::ostringstream os;
        os << "step size underflow at t = " << t;
        res.t_end = t;
        res.y_end = y;
        throw Error(ErrorKind::IntegrationFailure, os.str());
      }
      t_new = t + h_abs;
      if (t_new >= t_end || t_end - t_new < min_step) {
        t_new = t_end;
        h_abs = t_end - t;
      }
      y_new = rk_step(sys, y, f, h_abs, k);
      const Vec scale =
          (opts.abs_tol + opts.rel_tol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()).matrix();
      const double err = error_norm(k, h_abs, scale);
      if (err < 1.0) {
        double factor = err == 0.0 ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(err, kErrorExponent));
        if (step_rejected) factor = std::min(1.0, factor);
        h = h_abs * factor;
        break;
      }
      h_abs *= std::max(kMinFactor, kSafety * std::pow(err, kErrorExponent));
      step_rejected = true;
      ++res.rejected_steps;
    }

    const Vec f_new_raw = k[dop853::kStages];
    const Vec y_start = y;
    const Vec f_start = f;
    const double t_start = t;
    DenseSegment seg;
    if (observer) seg = make_dense(sys, t, t_new - t, y, y_new, f_new_raw, k);

    y = y_new;
    f = f_new_raw;
    if (++since_projection >= opts.projection_every) {
      project_state(sys, y);
      f = rhs(sys, y);
      since_projection = 0;
    }
    t = t_new;
    ++res.accepted_steps;

    if (observer) {
      const StepView view{seg, t_start, y_start, f_start, t, y, res.accepted_steps - 1};
      if (!observer(view)) {
        res.stopped_by_observer = true;
        break;
      }
    }
  }
  res.t_end = t;
  res.y_end = y;
  return res;
}

namespace {

struct ApproachTracker {
  const ConstrainedSystem& sys;
  const Vec& target;
  const ApproachOptions& aopts;
  ApproachResult& result;
  int n;
  double leave_radius_sq;
  double closest_coarse = std::numeric_limits<double>::infinity();

  double g_of(const Vec& y) const { return (y.head(n) - target).dot(y.tail(n)); }

  // Newton on g(t) = <x - target, v> with exact single steps from the
  // segment start; bisection whenever Newton leaves [lo, hi].
  ApproachEvent refine(const StepView& step, double lo, double hi) const {
    const DenseSegment& seg = step.segment;
    double glo = g_of(seg.eval(lo));
    for (int it = 0; it < 80 && hi - lo > aopts.time_tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double gm = g_of(seg.eval(mid));
      if ((gm < 0.0) == (glo < 0.0)) {
        lo = mid;
        glo = gm;
      } else {
        hi = mid;
      }
    }
    double t = 0.5 * (lo + hi);
    const double seg_lo = step.t0;
    const double seg_hi = step.t1;
    Vec y = advance(sys, step.y0, step.f0, t - step.t0);
    for (int it = 0; it < 8; ++it) {
      Vec a(n);
      sys.acceleration(y.head(n), y.tail(n), a);
      const Vec d = y.head(n) - target;
      const double g = d.dot(y.tail(n));
      const double dg = y.tail(n).squaredNorm() + d.dot(a);
      if (!(dg > 0.0)) break;
      double t_next = t - g / dg;
      if (t_next < seg_lo || t_next > seg_hi) break;
      const double dt = t_next - t;
      t = t_next;
      y = advance(sys, step.y0, step.f0, t - step.t0);
      if (std::abs(dt) <= aopts.time_tol) break;
    }
    ApproachEvent ev;
    ev.time = t;
    ev.x = y.head(n);
    ev.v = y.tail(n);
    ev.miss = (ev.x - target).norm();
    return ev;
  }

  void record(const ApproachEvent& ev) {
    if (aopts.track_closest && (!result.closest || ev.miss < result.closest->miss)) result.closest = ev;
    if (ev.miss >= aopts.return_radius) return;
    if (!result.events.empty() && std::abs(ev.time - result.events.back().time) < aopts.merge_window) {
      if (ev.miss < result.events.back().miss) result.events.back() = ev;
      return;
    }
    result.events.push_back(ev);
  }

  bool on_step(const StepView& step) {
    constexpr int kSub = 4;
    const DenseSegment& seg = step.segment;
    std::array<double, kSub + 1> ts{};
    std::array<Vec, kSub + 1> ys;
    for (int i = 0; i <= kSub; ++i) {
      ts[static_cast<size_t>(i)] = step.t0 + (step.t1 - step.t0) * i / kSub;
      ys[static_cast<size_t>(i)] = i == 0 ? step.y0 : seg.eval(ts[static_cast<size_t>(i)]);
    }
    for (int i = 0; i <= kSub; ++i) {
      const Vec& yi = ys[static_cast<size_t>(i)];
      if (!result.left_neighbourhood && (yi.head(n) - target).squaredNorm() > leave_radius_sq)
        result.left_neighbourhood = true;
      if (i == 0 || !result.left_neighbourhood) continue;
      const Vec& yp = ys[static_cast<size_t>(i - 1)];
      const double g0 = g_of(yp);
      const double g1 = g_of(yi);
      if (g0 < 0.0 && g1 >= 0.0) {
        const double coarse = std::min((yp.head(n) - target).norm(), (yi.head(n) - target).norm());
        // Nothing in between can be closer than the nearer node minus the
        // distance travelled over the sub-interval.
        const double reach = (ts[static_cast<size_t>(i)] - ts[static_cast<size_t>(i - 1)]) *
                             std::max(yp.tail(n).norm(), yi.tail(n).norm());
        const bool worth = coarse - reach < 4.0 * aopts.return_radius ||
                           (aopts.track_closest && coarse < 2.0 * closest_coarse + 1e-3);
        if (!worth) continue;
        closest_coarse = std::min(closest_coarse, coarse);
        record(refine(step, ts[static_cast<size_t>(i - 1)], ts[static_cast<size_t>(i)]));
        if (aopts.max_events > 0 && static_cast<int>(result.events.size()) >= aopts.max_events) return false;
      }
    }
    return true;
  }
};

}  // namespace

ApproachResult find_approaches(const ConstrainedSystem& sys, const Vec& y0, const Vec& target,
                               const IntegratorOptions& opts, const ApproachOptions& aopts,
                               const StepObserver& extra) {
  if (!(aopts.return_radius > 0.0)) throw Error(ErrorKind::InvalidInput, "return radius must be positive");
  ApproachResult result;
  const int n = sys.dim();
  ApproachTracker tracker{sys, target, aopts, result, n, 4.0 * aopts.return_radius * aopts.return_radius};
  const IntegrationResult ir = integrate(sys, y0, opts, [&](const StepView& step) {
    if (extra && !extra(step)) return false;
    return tracker.on_step(step);
  });
  result.t_end = ir.t_end;
  return result;
}

}  // namespace ellfocal
