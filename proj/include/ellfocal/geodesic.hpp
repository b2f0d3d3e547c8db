#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ellfocal/ellipsoid.hpp"
#include "ellfocal/error.hpp"
#include "ellfocal/flow.hpp"

namespace ellfocal {

/// Geodesic equations in ambient coordinates: x'' = -nu A^{-1} x with
/// nu = <A^{-1}y, y> / |A^{-1}x|^2. Projection rescales x radially and
/// re-orthonormalizes y to a unit tangent.
class GeodesicSystem final : public ConstrainedSystem {
 public:
  explicit GeodesicSystem(Ellipsoid e) : e_(std::move(e)) {}
  int dim() const override { return e_.dim(); }
  void acceleration(const Vec& x, const Vec& v, Vec& a) const override;
  void project(Vec& x, Vec& v) const override;
  const Ellipsoid& ellipsoid() const { return e_; }

 private:
  Ellipsoid e_;
};

struct GeodesicRhs {
  Vec dx;
  Vec dy;
};

GeodesicRhs geodesic_rhs(const Ellipsoid& e, const Vec& x, const Vec& y);

struct TrajectorySample {
  double t = 0.0;
  PhasePoint point;
  double constraint_residual = 0.0;
  double speed_residual = 0.0;
  double lax_drift = 0.0;  // max relative drift of the nonzero Lax eigenvalues
};

class Trajectory {
 public:
  std::vector<TrajectorySample> samples;
  std::vector<DenseSegment> segments;

  double t_begin() const { return samples.empty() ? 0.0 : samples.front().t; }
  double t_end() const { return samples.empty() ? 0.0 : samples.back().t; }
  /// Dense-output evaluation; t must lie in [t_begin, t_end].
  PhasePoint state_at(double t) const;

  double max_constraint_residual() const;
  double max_speed_residual() const;
  double max_lax_drift() const;
};

/// Thrown when integration fails; carries everything integrated so far.
class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, std::shared_ptr<const Trajectory> partial)
      : Error(ErrorKind::IntegrationFailure, what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return *partial_; }

 private:
  std::shared_ptr<const Trajectory> partial_;
};

struct TrajectoryOptions {
  bool keep_dense_output = true;
  bool track_lax_drift = true;
};

Trajectory integrate_geodesic(const Ellipsoid& e, const PhasePoint& p0, const IntegratorOptions& opts,
                              const TrajectoryOptions& topts = {});

/// G^t(x0, xi0). Negative t integrates the reversed direction.
PhasePoint exp_map(const Ellipsoid& e, const Vec& x0, const Vec& xi0, double t,
                   const IntegratorOptions& opts = {});

struct ReturnEvent {
  double return_time = 0.0;
  Vec terminal_direction;
  double miss_distance = 0.0;
};

double default_return_radius(const Ellipsoid& e);

/// Every local minimum of |x(t) - x0| with miss below return_radius, up to
/// opts.t_max, ordered by time. Empty when nothing returns.
std::vector<ReturnEvent> first_return(const Ellipsoid& e, const Vec& x0, const Vec& xi0,
                                      const IntegratorOptions& opts, double return_radius);

/// Columns: t, x_1..x_n, xi_1..xi_n, constraint_residual, speed_residual.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace ellfocal
