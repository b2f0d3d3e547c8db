#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ellfocal/ellipsoid.hpp"
#include "ellfocal/flow.hpp"
#include "ellfocal/focal.hpp"
#include "ellfocal/geodesic.hpp"

namespace ellfocal {

/// Motion on a 2-D ellipsoid under the potential V = j^2 / (2 x_s^2), where
/// s = singular_index. Energy is H = |v|^2 / 2 + V.
struct RosochatiusSystem {
  Ellipsoid base;
  double j = 0.0;
  int singular_index = 0;
  /// For systems obtained by reduction: source_indices[k] is the coordinate
  /// of the (2,1,1) ellipsoid that reduced coordinate k comes from, with -1
  /// at the singular coordinate (the radius of the doubled block).
  std::vector<int> source_indices;
};

/// Throws unsupported-dimension unless n = 3, invalid-input for non-finite
/// j or an out-of-range index.
RosochatiusSystem make_rosochatius(const Ellipsoid& base, double j, int singular_index = 0);

double barrier_tol(const RosochatiusSystem& sys);
double rosochatius_potential(const RosochatiusSystem& sys, const Vec& x);
double rosochatius_energy(const RosochatiusSystem& sys, const Vec& x, const Vec& v);

/// x'' = -grad V - nu A^{-1} x with
/// nu = (<A^{-1}v, v> - <A^{-1}x, grad V>) / |A^{-1}x|^2.
/// Throws barrier-proximity when j != 0 and |x_s| < barrier_tol.
GeodesicRhs rosochatius_rhs(const RosochatiusSystem& sys, const Vec& x, const Vec& v);

/// The system as an integrable ODE on a fixed energy shell. Projection puts
/// x back on the ellipsoid, v into the tangent plane, and rescales v so that
/// H equals `energy`.
class RosochatiusFlow final : public ConstrainedSystem {
 public:
  RosochatiusFlow(RosochatiusSystem sys, double energy);
  int dim() const override { return 3; }
  void acceleration(const Vec& x, const Vec& v, Vec& a) const override;
  void project(Vec& x, Vec& v) const override;
  const RosochatiusSystem& system() const { return sys_; }
  double energy() const { return energy_; }

 private:
  RosochatiusSystem sys_;
  double energy_;
};

struct ReducedSample {
  double t = 0.0;
  PhasePoint point;  // position and velocity (not normalized)
  double constraint_residual = 0.0;
  double energy = 0.0;
  double barrier_distance = 0.0;  // |x_s|
};

class ReducedTrajectory {
 public:
  RosochatiusSystem system;
  std::vector<ReducedSample> samples;
  bool halted = false;  // stopped at the barrier
  std::string halt_detail;

  double t_begin() const { return samples.empty() ? 0.0 : samples.front().t; }
  double t_end() const { return samples.empty() ? 0.0 : samples.back().t; }
  PhasePoint state_at(double t) const;

  double max_energy_drift() const;  // relative to the initial energy
  double max_constraint_residual() const;
  double min_barrier_distance() const;

  std::function<PhasePoint(double)> dense;
};

/// Integrates from p0 (x on the base ellipsoid, v tangent, any speed).
/// Reaching |x_s| < barrier_tol stops the run with `halted` set. Throws
/// barrier-proximity if p0 already lies inside the barrier.
ReducedTrajectory integrate_rosochatius(const RosochatiusSystem& sys, const PhasePoint& p0,
                                        const IntegratorOptions& opts);

// ---------------------------------------------------------------------------
// SO(2) reduction of (2,1,1) ellipsoids

struct Reduction211 {
  Ellipsoid full;
  Ellipsoid base;              // (a, b, c): doubled value first, then the others in user order
  std::array<int, 2> block{};  // user indices of the doubled block in `full`
  std::array<int, 2> others{};
};

/// Throws invalid-multiplicities unless E4 has dimension 4 with one block of
/// multiplicity 2 and two simple axes.
Reduction211 make_reduction_211(const Ellipsoid& e4);

/// J = x_a v_b - x_b v_a on the doubled block.
double block_momentum(const Reduction211& red, const PhasePoint& p);

/// (r, x_others) with r = |(x_a, x_b)| and the matching reduced velocity.
PhasePoint reduce_state(const Reduction211& red, const PhasePoint& p);

/// A state on E4 with block angle `angle` whose reduction is q and whose
/// block momentum is j. Requires q.x(0) > 0.
PhasePoint lift_state(const Reduction211& red, const PhasePoint& q, double j, double angle = 0.0);

/// Reduces a geodesic of E4. The result carries j = J(0) and evaluates its
/// dense output through the full trajectory. Throws reduction-inconsistency
/// when J drifts by more than 1e-8 along the samples.
ReducedTrajectory reduce_211_orbit(const Ellipsoid& e4, const Trajectory& traj);

// ---------------------------------------------------------------------------
// Return experiment at the umbilic

struct RosochatiusExperimentOptions {
  IntegratorOptions integrator = ScanOptions::default_scan_integrator();
  double return_radius = 0.0;  // 0: default_return_radius
  GridOptions grid;
  /// -1 picks the coordinate of the largest axis.
  int singular_index = -1;
  int threads = 1;
};

struct ExperimentRow {
  double j = 0.0;
  int direction_index = 0;
  double return_time = 0.0;   // first return within the radius, else closest approach
  double miss_distance = 0.0;
  bool returned = false;
  bool halted = false;
  bool integration_failed = false;
};

struct ExperimentSummary {
  double j = 0.0;
  double energy = 0.0;
  int directions = 0;
  int returned_count = 0;
  int halted_count = 0;
  double mean_time = 0.0;
  double time_spread = 0.0;
  double relative_spread = 0.0;
  double max_miss = 0.0;
};

struct ExperimentReport {
  Vec alphas;
  Vec umbilic;
  int singular_index = 0;
  double return_radius = 0.0;
  double barrier_tol = 0.0;
  IntegratorOptions integrator;
  std::vector<double> j_grid;
  std::vector<ExperimentRow> rows;  // j-major, then direction index
  std::vector<ExperimentSummary> summaries;
};

/// From the (+,+) umbilic of alphas3, launches num_directions unit
/// directions for every j (so H = 1/2 + j^2 / (2 x_s^2) in each row) and
/// records the return to the umbilic. Barrier halts are recorded per row.
ExperimentReport umbilic_return_experiment(const std::vector<double>& alphas3, const std::vector<double>& j_grid,
                                           int num_directions, const RosochatiusExperimentOptions& opts = {});

/// Columns: j, direction_index, return_time, miss_distance, halted_flag.
void write_experiment_csv(std::ostream& os, const ExperimentReport& rep);

}  // namespace ellfocal
