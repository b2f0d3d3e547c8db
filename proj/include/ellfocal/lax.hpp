#pragma once

#include <cstdint>
#include <vector>

#include "ellfocal/ellipsoid.hpp"

namespace ellfocal {

/// L(x, xi) = P_xi (A - x x^T) P_xi with P_xi = I - xi xi^T.
struct LaxMatrix {
  Mat entries;
};

struct LaxSpectrum {
  Vec eigenvalues;   // all n, ascending
  Mat eigenvectors;  // matching columns, orthonormal
  Vec nonzero_eigs;  // ascending; n-2 entries on shell
  Mat nonzero_vectors;
  Mat kernel_vectors;
  int kernel_dim = 0;
  double kernel_tol = 0.0;
  /// Kernel dimension differs from 2. Reported, never thrown.
  bool degeneracy_anomaly = false;
};

struct MomentValue {
  Vec e;  // e_1..e_{n-2} of the nonzero eigenvalues
  Vec eigs;
  bool degeneracy_anomaly = false;
};

inline constexpr double kKernelRelTol = 1e-10;
inline constexpr double kClusterRelTol = 1e-8;
inline constexpr double kPoleTol = 1e-12;

LaxMatrix lax_matrix(const Ellipsoid& e, const Vec& x, const Vec& xi);

/// Moser's B(x, y)_ij = -(x_i y_j - x_j y_i) / (alpha_i alpha_j).
Mat b_matrix(const Ellipsoid& e, const Vec& x, const Vec& y);

/// Time derivative of L along the unit-speed geodesic flow predicted by
/// the Lax pair: [B, L] / |A^{-1}x|^2 (the pair is stated in the time
/// ds = dt / |A^{-1}x|^2).
Mat lax_flow_derivative(const Ellipsoid& e, const Vec& x, const Vec& xi);

/// Cyclic Jacobi eigendecomposition; |lambda| < 1e-10 ||L||_F is kernel.
LaxSpectrum spectrum(const LaxMatrix& lax);

MomentValue moment_map(const Ellipsoid& e, const Vec& x, const Vec& xi);

/// Q_z(x, y) = <(z - A)^{-1} x, y>. Throws pole-of-Q near an eigenvalue of A.
double q_form(const Ellipsoid& e, double z, const Vec& x, const Vec& y);

/// Phi_z(x, xi) = |xi|^2 det(L - z) / (z det(A - z)), evaluated through
/// the nonzero spectrum as |xi|^2 z prod(lambda_j - z) / prod(alpha_j - z).
double phi_z(const Ellipsoid& e, double z, const Vec& x, const Vec& xi);
double phi_z(const Ellipsoid& e, double z, const Vec& xi, const LaxSpectrum& sp);

/// Right-hand side of Moser's identity, Q_z(xi)(1 + Q_z(x)) - Q_z(x, xi)^2.
double moser_identity_rhs(const Ellipsoid& e, double z, const Vec& x, const Vec& xi);

/// Confocal quadric {y : <(A - lambda)^{-1} y, y> = 1}. Along y = x + t xi the
/// quadric equation is a t^2 + 2 b t + c = 0; `value` is the quarter
/// discriminant b^2 - a c, zero iff the line is tangent. With this
/// constant, value = -Phi_lambda(x, xi).
struct TangencyResidual {
  double value = 0.0;
  double scale = 1.0;  // max(b^2, |a c|, 1)
};

TangencyResidual confocal_tangency_residual(const Ellipsoid& e, double lambda, const Vec& x, const Vec& xi);

struct ContactPoint {
  double t_star = 0.0;
  Vec point;
  Vec normal;
  /// 1 - |<normal, phi>| against the lambda-eigenvector of L(x, xi) when
  /// lambda is a simple nonzero eigenvalue; negative when not applicable.
  double eigenvector_misalignment = -1.0;
};

/// Throws no-contact when the residual exceeds tol * scale.
ContactPoint contact_point_and_normal(const Ellipsoid& e, double lambda, const Vec& x, const Vec& xi,
                                      double tol = 1e-7);

struct EllipsoidalCoords {
  Vec zeta;  // n-1 roots, ascending
};

/// Jacobi ellipsoidal coordinates: the roots z != 0 of
/// sum_i x_i^2 / (alpha_i - z) = <A^{-1}x, x>, i.e. the roots of
/// R(z; x) = sum_i (x_i^2 / alpha_i) prod_{j != i} (alpha_j - z). Repeated axes
/// and vanishing coordinates contribute roots at the axis values; the rest
/// come from bisection on the secular function between consecutive axes.
EllipsoidalCoords ellipsoidal_coordinates(const Ellipsoid& e, const Vec& x);

/// Largest violation of alpha_j <= zeta_j <= alpha_{j+1} (sorted axes).
double interlacing_violation(const Ellipsoid& e, const EllipsoidalCoords& zc);

/// Number of roots of the numerator polynomial of Phi_z (namely 0 and the
/// nonzero Lax eigenvalues) in (-inf, zeta_1), [zeta_1, zeta_2], ...
std::vector<int> audin_root_counts(const Ellipsoid& e, const Vec& x, const Vec& xi, double tol = 1e-10);

struct EigenvalueVariation {
  Vec rates;  // d lambda_j / dt for the ascending nonzero eigenvalues
  bool clustered = false;  // some gap below cluster tolerance; rates averaged inside clusters
};

/// lambda_dot = -2 (<xi_dot, phi><(A - x x^T) phi, xi> + <x_dot, phi><x, phi>).
EigenvalueVariation eigenvalue_variation(const Ellipsoid& e, const Vec& x, const Vec& xi, const Vec& xdot,
                                         const Vec& xidot);

/// Residuals of the linearized phase-space constraints for (x_dot, xi_dot).
double variation_admissibility_residual(const Ellipsoid& e, const Vec& x, const Vec& xi, const Vec& xdot,
                                        const Vec& xidot);

struct PhaseVariation {
  Vec xdot;
  Vec xidot;
};

/// Basis of T_(x,xi) S*E (2n-3 variations): horizontal ones with the xi
/// correction -<A^{-1}u, xi>/|A^{-1}x|^2 A^{-1}x, then vertical ones.
std::vector<PhaseVariation> admissible_variation_basis(const Ellipsoid& e, const Vec& x, const Vec& xi);

/// Curve through (x, xi) with tangent (x_dot, xi_dot) when the variation is
/// admissible: x(s) = radial projection of x + s x_dot, xi(s) = normalized
/// tangential projection of xi + s xi_dot.
PhasePoint retract_variation(const Ellipsoid& e, const Vec& x, const Vec& xi, const PhaseVariation& var, double s);

/// Permutation p with new column p[k] continuing old column k, chosen by
/// greedy maximal |overlap|.
std::vector<int> match_branches(const Mat& previous_vectors, const Mat& current_vectors);

struct SpectralSample {
  Vec x;
  Vec xi;
  Vec eigs;
  Vec moment;
  double kernel_residual = 0.0;  // max(|L xi|, |L n|)
  double eigen_residual = 0.0;   // max ||L v - lambda v||
  double identity_residual = 0.0;
  bool degeneracy_anomaly = false;
};

SpectralSample spectral_sample(const Ellipsoid& e, const Vec& x, const Vec& xi);
std::vector<SpectralSample> spectral_scan(const Ellipsoid& e, int count, std::uint64_t seed);

}  // namespace ellfocal
