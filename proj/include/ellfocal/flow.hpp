#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "ellfocal/linalg.hpp"

namespace ellfocal {

inline constexpr double kMinRelTol = 1e-14;

struct IntegratorOptions {
  double rel_tol = 1e-12;
  double abs_tol = 1e-13;
  double max_step = 0.0;  // 0 means unbounded
  double t_max = 50.0;
  int projection_every = 1;
  long max_steps = 5'000'000;
};

void validate(const IntegratorOptions& opts);

/// A second-order system x'' = a(x, x') living on a constraint manifold,
/// with a projection that restores the constraints after drift.
class ConstrainedSystem {
 public:
  virtual ~ConstrainedSystem() = default;
  virtual int dim() const = 0;
  virtual void acceleration(const Vec& x, const Vec& v, Vec& a) const = 0;
  virtual void project(Vec& x, Vec& v) const = 0;
};

/// Seventh-order continuous extension of one accepted DOP853 step.
/// The state vector is [x; v].
struct DenseSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  Vec y0;
  std::array<Vec, 7> coeffs;

  Vec eval(double t) const;
};

/// One accepted step as seen by observers. `y1` is the state after any
/// projection; `y0`/`f0` allow exact re-evaluation inside the step.
struct StepView {
  const DenseSegment& segment;
  double t0;
  const Vec& y0;
  const Vec& f0;
  double t1;
  const Vec& y1;
  long index;
};

/// Return false to stop integration after this step.
using StepObserver = std::function<bool(const StepView&)>;

struct IntegrationResult {
  double t_end = 0.0;
  Vec y_end;
  long accepted_steps = 0;
  long rejected_steps = 0;
  bool stopped_by_observer = false;
};

/// Adaptive DOP853 with error control per `opts`, projection every
/// `opts.projection_every` accepted steps. Integrates [0, t_max].
/// Throws integration-failure on step-size underflow or step budget
/// exhaustion; the observer has seen every accepted step by then.
IntegrationResult integrate(const ConstrainedSystem& sys, const Vec& y0, const IntegratorOptions& opts,
                            const StepObserver& observer = {});

/// Exact single DOP853 step of size h from (y, f); used to polish events.
Vec advance(const ConstrainedSystem& sys, const Vec& y, const Vec& f, double h);

Vec rhs(const ConstrainedSystem& sys, const Vec& y);

/// A refined local minimum of |x(t) - target|.
struct ApproachEvent {
  double time = 0.0;
  double miss = 0.0;
  Vec x;
  Vec v;
};

struct ApproachOptions {
  double return_radius = 1e-3;
  int max_events = 0;         // 0: collect all events up to t_max
  double merge_window = 1e-6;  // events closer than this in time are merged
  double time_tol = 1e-12;
  bool track_closest = true;   // also refine the overall closest approach
};

struct ApproachResult {
  std::vector<ApproachEvent> events;      // miss < return_radius, ordered by time
  std::optional<ApproachEvent> closest;   // smallest-miss local minimum seen
  double t_end = 0.0;
  bool left_neighbourhood = false;
};

/// Detects local minima of f(t) = |x(t) - target|^2 through sign changes of
/// f' on the dense output, then polishes each by safeguarded Newton on f'
/// with exact single steps. Minima before the trajectory first leaves the
/// ball of radius 2*return_radius around the target are ignored.
ApproachResult find_approaches(const ConstrainedSystem& sys, const Vec& y0, const Vec& target,
                               const IntegratorOptions& opts, const ApproachOptions& aopts,
                               const StepObserver& extra = {});

}  // namespace ellfocal
