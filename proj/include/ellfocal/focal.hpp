#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ellfocal/ellipsoid.hpp"
#include "ellfocal/flow.hpp"
#include "ellfocal/geodesic.hpp"

namespace ellfocal {

// ---------------------------------------------------------------------------
// Direction grids on S*_{x0}

struct GridOptions {
  /// On the circle (n = 3): place sample k at angle 2 pi k / count instead of
  /// 2 pi (k + 1/2) / count. Angle 0 is the first vector of tangent_frame.
  bool anchored = false;
  int random_extra = 0;  // seeded random directions appended after the grid
  std::uint64_t seed = 0;
};

/// Deterministic unit tangent directions at x0: an equally spaced circle for
/// n = 3, a golden-angle spiral on S^2 for n = 4, and Halton points pushed
/// through Box-Muller for n >= 5, all in tangent_frame coordinates.
std::vector<Vec> direction_grid(const Ellipsoid& e, const Vec& x0, int count, const GridOptions& grid = {});

/// Angle of a tangent direction in the frame of tangent_frame (n = 3 only).
double circle_angle(const Ellipsoid& e, const Vec& x0, const Vec& xi);

// ---------------------------------------------------------------------------
// Self-focality scans

enum class Verdict { SelfFocalEvidence, NotSelfFocal, Inconclusive };
std::string to_string(Verdict v);

inline constexpr double kFocalTol = 1e-5;
inline constexpr double kSeparationTol = 1e-2;

struct ScanOptions {
  IntegratorOptions integrator = default_scan_integrator();
  double return_radius = 0.0;  // 0: default_return_radius(E)
  double focal_tol = kFocalTol;
  double separation_tol = kSeparationTol;
  GridOptions grid;
  int threads = 1;

  /// t_max = 0 means 4 pi times the largest semi-axis, resolved per scan.
  static IntegratorOptions default_scan_integrator() {
    IntegratorOptions o;
    o.t_max = 0.0;
    return o;
  }
};

/// Integrator options with the t_max = 0 default resolved for E.
IntegratorOptions resolve_scan_integrator(const Ellipsoid& e, const IntegratorOptions& opts);
double resolve_return_radius(const Ellipsoid& e, double radius);

struct DirectionResult {
  Vec direction;
  /// First approach within the return radius.
  std::optional<ReturnEvent> first_return;
  /// Closest approach seen before t_max (refined local minimum), used when
  /// nothing came within the radius.
  std::optional<ReturnEvent> closest;
  bool integration_failed = false;
  std::string detail;

  bool returned() const { return first_return.has_value(); }
  /// First-return time, or the closest-approach time when nothing returned.
  double representative_time() const;
  double representative_miss() const;
  /// Angle between the initial direction and the direction on return.
  double angular_deviation() const;
};

struct ScanReport {
  Vec base_point;
  std::vector<Vec> directions;
  std::vector<DirectionResult> results;
  int returned_count = 0;
  double mean_time = 0.0;
  double time_spread = 0.0;      // max - min of representative times
  double relative_spread = 0.0;  // time_spread / mean_time
  double max_miss = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  std::string detail;

  double return_radius = 0.0;
  IntegratorOptions integrator;
  double focal_tol = kFocalTol;
  double separation_tol = kSeparationTol;
  GridOptions grid;
};

/// Scans num_directions grid directions (plus grid.random_extra random ones).
/// Verdict: self-focal-evidence when every direction returned within the
/// radius and relative_spread < focal_tol; not-self-focal when
/// relative_spread > separation_tol, where directions that never returned
/// contribute their closest-approach times; inconclusive otherwise.
ScanReport self_focality_scan(const Ellipsoid& e, const Vec& x0, int num_directions, const ScanOptions& opts = {});
ScanReport self_focality_scan(const Ellipsoid& e, const Vec& x0, const std::vector<Vec>& directions,
                              const ScanOptions& opts = {});

// ---------------------------------------------------------------------------
// First return map

struct ReturnMapSample {
  Vec initial_direction;
  Vec terminal_direction;
  double angular_deviation = 0.0;
  double return_time = 0.0;
  double miss_distance = 0.0;
  /// No event within the radius near T_common; the closest approach is
  /// reported instead.
  bool flagged = false;
};

struct ReturnMapOptions {
  IntegratorOptions integrator;  // t_max is replaced by 1.05 T_common
  double return_radius = 0.0;
  int threads = 1;
};

/// Terminal direction at the return event nearest T_common for each
/// direction of the grid.
std::vector<ReturnMapSample> return_map(const Ellipsoid& e, const Vec& x0, double t_common,
                                        const std::vector<Vec>& grid, const ReturnMapOptions& opts = {});

/// Number of samples with deviation below tol.
int count_fixed_directions(const std::vector<ReturnMapSample>& samples, double tol);

// ---------------------------------------------------------------------------
// Twistedness

struct TwistSample {
  Vec direction;
  Mat jacobian;  // DPhi in an orthonormal frame of T_xi S*_{x0}, transported back
  std::vector<std::complex<double>> eigenvalues;
  double distance_from_one = 0.0;  // min_i |mu_i - 1|
  double det_minus_identity = 0.0;
  bool insufficient_resolution = false;
};

struct TwistReport {
  std::vector<TwistSample> samples;
  double min_distance = 0.0;
  double step = 0.0;
  /// Samples whose |det(DPhi - I)| falls below untwisted_tol.
  std::vector<int> untwisted;
};

struct TwistOptions {
  double step = 1e-4;       // angular step of the central stencil
  double untwisted_tol = 1e-3;
  ReturnMapOptions map;
};

/// Central-difference DPhi at each probe direction. Each column perturbs
/// the probe by +-step along one frame vector of T_xi S*_{x0}. The terminal
/// differences are carried back from T_Phi(xi) to T_xi by the rotation in
/// the plane of xi and Phi(xi). A sample is marked insufficient-resolution
/// when the stencils at step and step/2 disagree by more than 1e-3 relative.
TwistReport twistedness_report(const Ellipsoid& e, const Vec& x0, double t_common, const std::vector<Vec>& probes,
                               const TwistOptions& opts = {});

/// The same measure from an ordered, equally spaced circle sample (n = 3):
/// DPhi is the derivative of the terminal angle by central differences.
/// Throws insufficient-resolution when consecutive terminal angles jump by
/// more than 0.5 rad or fewer than 8 samples are given.
TwistReport twistedness_report(const Ellipsoid& e, const Vec& x0, const std::vector<ReturnMapSample>& circle);

// ---------------------------------------------------------------------------
// Umbilics, coordinate slices, special points

struct UmbilicPoints {
  std::array<Vec, 4> points;  // user coordinate order, sign patterns (+,+), (+,-), (-,+), (-,-)
  double max_defect = 0.0;
  double max_constraint_residual = 0.0;
  /// Distance between the oracle point and the closed form
  /// x_max^2 = a_max (a_max - a_mid) / (a_max - a_min),
  /// x_min^2 = a_min (a_mid - a_min) / (a_max - a_min).
  double closed_form_discrepancy = 0.0;
};

/// Locates the umbilics of a triaxial ellipsoid on the slice through the
/// largest and smallest axes by bisection on the difference of the two
/// principal curvatures. Throws no-umbilic-found for repeated axes.
UmbilicPoints umbilic_points_2d(const std::vector<double>& alphas3);

/// Isometric coordinate embedding of the sub-ellipsoid on `indices`.
class SliceEmbedding {
 public:
  SliceEmbedding(Ellipsoid ambient, std::vector<int> indices);
  const Ellipsoid& ambient() const { return ambient_; }
  const Ellipsoid& slice() const { return slice_; }
  const std::vector<int>& indices() const { return indices_; }
  Vec embed(const Vec& y) const;
  Vec restrict(const Vec& x) const;
  PhasePoint embed(const PhasePoint& p) const { return PhasePoint{embed(p.x), embed(p.xi)}; }

 private:
  Ellipsoid ambient_;
  std::vector<int> indices_;
  Ellipsoid slice_;
};

/// Throws invalid-input for repeated or out-of-range indices, fewer than two.
SliceEmbedding embed_slice(const Ellipsoid& e, const std::vector<int>& indices);

/// Umbilic candidates of every three-axis coordinate slice with distinct
/// axes, embedded in E.
std::vector<Vec> slice_umbilic_candidates(const Ellipsoid& e);

/// The point (x_1, 0, ..., 0, x_n) for multiplicities (1, n-2, 1): the
/// (+,+) umbilic of (a_max, a_mid, a_min) embedded with a zero middle block.
/// Throws invalid-multiplicities for any other pattern.
Vec special_point_1_n2_1(const Ellipsoid& e);

// ---------------------------------------------------------------------------
// Isometries

/// Rotation by `angle` in the (i, j) coordinate plane (0-based indices).
struct BlockRotation {
  int i = 0;
  int j = 1;
  double angle = 0.0;
};

/// Product of the rotations; throws invalid-isometry unless each plane lies
/// inside one block of equal axes.
Mat isometry_matrix(const Ellipsoid& e, const std::vector<BlockRotation>& rotations);

/// Throws invalid-isometry unless g is orthogonal and commutes with A.
void check_isometry(const Ellipsoid& e, const Mat& g);

struct IsometryOrbitReport {
  ScanReport at_x0;
  ScanReport at_gx0;
  double mean_time_difference = 0.0;
  double max_time_difference = 0.0;  // per direction, paired by index
  bool verdicts_agree = false;
  bool agrees = false;  // verdicts agree and mean times within 1e-6
};

/// Scans x0 with a grid and g x0 with the rotated grid.
IsometryOrbitReport isometry_orbit_check(const Ellipsoid& e, const Vec& x0, const Mat& g, int num_directions,
                                         const ScanOptions& opts = {});

// ---------------------------------------------------------------------------
// Moment map on S*_{x0}

struct MomentConstancyReport {
  int directions = 0;
  double spread = 0.0;  // max over components of max - min of e_j
  Vec mean_eigs;
  Vec eig_spread;
  /// For each mean eigenvalue, the distance to the nearest axis value.
  Vec distance_to_axes;
  bool any_degeneracy_anomaly = false;
};

MomentConstancyReport moment_constancy_check(const Ellipsoid& e, const Vec& x0, int num_directions,
                                             const GridOptions& grid = {});

}  // namespace ellfocal
