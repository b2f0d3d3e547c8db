#include "ellfocal/lax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ellfocal/error.hpp"

namespace ellfocal {

LaxMatrix lax_matrix(const Ellipsoid& e, const Vec& x, const Vec& xi) {
  const int n = e.dim();
  if (x.size() != n || xi.size() != n) throw Error(ErrorKind::InvalidInput, "dimension mismatch");
  const Mat p = Mat::Identity(n, n) - xi * xi.transpose();
  Mat core = -x * x.transpose();
  core.diagonal() += e.alphas();
  Mat l = p * core * p;
  // Symmetrize to rounding.
  return LaxMatrix{0.5 * (l + l.transpose())};
}

Mat b_matrix(const Ellipsoid& e, const Vec& x, const Vec& y) {
  const Vec ax = e.apply_inverse(x);
  const Vec ay = e.apply_inverse(y);
  return -(ax * ay.transpose() - ay * ax.transpose());
}

Mat lax_flow_derivative(const Ellipsoid& e, const Vec& x, const Vec& xi) {
  const Mat b = b_matrix(e, x, xi);
  const Mat l = lax_matrix(e, x, xi).entries;
  return (b * l - l * b) / e.apply_inverse(x).squaredNorm();
}

LaxSpectrum spectrum(const LaxMatrix& lax) {
  const Mat& l = lax.entries;
  if (l.rows() != l.cols()) throw Error(ErrorKind::InvalidInput, "Lax matrix not square");
  if ((l - l.transpose()).norm() > 1e-12 * std::max(1.0, l.norm()))
    throw Error(ErrorKind::InvalidInput, "Lax matrix not symmetric");
  const SymmetricEigen eig = jacobi_eigen(l, 1e-13 * std::max(1.0, l.norm()));
  LaxSpectrum sp;
  sp.eigenvalues = eig.values;
  sp.eigenvectors = eig.vectors;
  sp.kernel_tol = kKernelRelTol * l.norm();
  const Eigen::Index n = l.rows();
  std::vector<Eigen::Index> kernel;
  std::vector<Eigen::Index> nonzero;
  for (Eigen::Index k = 0; k < n; ++k)
    (std::abs(eig.values(k)) < sp.kernel_tol ? kernel : nonzero).push_back(k);
  sp.kernel_dim = static_cast<int>(kernel.size());
  sp.degeneracy_anomaly = sp.kernel_dim != 2;
  sp.nonzero_eigs.resize(static_cast<Eigen::Index>(nonzero.size()));
  sp.nonzero_vectors.resize(n, static_cast<Eigen::Index>(nonzero.size()));
  for (size_t k = 0; k < nonzero.size(); ++k) {
    sp.nonzero_eigs(static_cast<Eigen::Index>(k)) = eig.values(nonzero[k]);
    sp.nonzero_vectors.col(static_cast<Eigen::Index>(k)) = eig.vectors.col(nonzero[k]);
  }
  sp.kernel_vectors.resize(n, static_cast<Eigen::Index>(kernel.size()));
  for (size_t k = 0; k < kernel.size(); ++k)
    sp.kernel_vectors.col(static_cast<Eigen::Index>(k)) = eig.vectors.col(kernel[k]);
  return sp;
}

MomentValue moment_map(const Ellipsoid& e, const Vec& x, const Vec& xi) {
  const LaxSpectrum sp = spectrum(lax_matrix(e, x, xi));
  MomentValue mv;
  mv.eigs = sp.nonzero_eigs;
  mv.e = elementary_symmetric(sp.nonzero_eigs);
  mv.degeneracy_anomaly = sp.degeneracy_anomaly;
  return mv;
}

namespace {

void check_pole(const Ellipsoid& e, double z) {
  for (int j = 0; j < e.dim(); ++j) {
    if (std::abs(z - e.alphas()(j)) < kPoleTol * std::max(1.0, e.alphas()(j))) {
      std::ostringstream os;
      os << "z = " << z << " coincides with axis value " << e.alphas()(j);
      throw Error(ErrorKind::PoleOfQ, os.str());
    }
  }
}

}  // namespace

double q_form(const Ellipsoid& e, double z, const Vec& x, const Vec& y) {
  check_pole(e, z);
  double s = 0.0;
  for (int i = 0; i < e.dim(); ++i) s += x(i) * y(i) / (z - e.alphas()(i));
  return s;
}

double phi_z(const Ellipsoid& e, double z, const Vec& xi, const LaxSpectrum& sp) {
  check_pole(e, z);
  if (z == 0.0) throw Error(ErrorKind::InvalidInput, "Phi_z is not defined at z = 0");
  double num = xi.squaredNorm() * z;
  if (!sp.degeneracy_anomaly) {
    for (Eigen::Index j = 0; j < sp.nonzero_eigs.size(); ++j) num *= sp.nonzero_eigs(j) - z;
  } else {
    // Fall back to det(L - z)/z^2 over the full spectrum.
    for (Eigen::Index j = 0; j < sp.eigenvalues.size(); ++j) num *= sp.eigenvalues(j) - z;
    num /= z * z;
  }
  double den = 1.0;
  for (int j = 0; j < e.dim(); ++j) den *= e.alphas()(j) - z;
  return num / den;
}

double phi_z(const Ellipsoid& e, double z, const Vec& x, const Vec& xi) {
  return phi_z(e, z, xi, spectrum(lax_matrix(e, x, xi)));
}

double moser_identity_rhs(const Ellipsoid& e, double z, const Vec& x, const Vec& xi) {
  const double qxx = q_form(e, z, x, x);
  const double qxi = q_form(e, z, xi, xi);
  const double qx_xi = q_form(e, z, x, xi);
  return qxi * (1.0 + qxx) - qx_xi * qx_xi;
}

namespace {

struct LineQuadratic {
  double a, b, c;  // a t^2 + 2 b t + c
};

LineQuadratic line_quadratic(const Ellipsoid& e, double lambda, const Vec& x, const Vec& xi) {
  check_pole(e, lambda);
  LineQuadratic q{0.0, 0.0, -1.0};
  for (int i = 0; i < e.dim(); ++i) {
    const double w = 1.0 / (e.alphas()(i) - lambda);
    q.a += w * xi(i) * xi(i);
    q.b += w * x(i) * xi(i);
    q.c += w * x(i) * x(i);
  }
  return q;
}

}  // namespace

TangencyResidual confocal_tangency_residual(const Ellipsoid& e, double lambda, const Vec& x, const Vec& xi) {
  const LineQuadratic q = line_quadratic(e, lambda, x, xi);
  TangencyResidual r;
  r.value = q.b * q.b - q.a * q.c;
  r.scale = std::max({1.0, q.b * q.b, std::abs(q.a * q.c)});
  return r;
}

ContactPoint contact_point_and_normal(const Ellipsoid& e, double lambda, const Vec& x, const Vec& xi,
                                      double tol) {
  const TangencyResidual res = confocal_tangency_residual(e, lambda, x, xi);
  const LineQuadratic q = line_quadratic(e, lambda, x, xi);
  if (std::abs(res.value) > tol * res.scale || std::abs(q.a) < 1e-300) {
    std::ostringstream os;
    os << "line is not tangent to the confocal quadric at lambda = " << lambda << " (residual " << res.value
       << ")";
    throw Error(ErrorKind::NoContact, os.str());
  }
  ContactPoint cp;
  cp.t_star = -q.b / q.a;
  cp.point = x + cp.t_star * xi;
  Vec grad(e.dim());
  for (int i = 0; i < e.dim(); ++i) grad(i) = cp.point(i) / (e.alphas()(i) - lambda);
  cp.normal = grad.normalized();

  const LaxSpectrum sp = spectrum(lax_matrix(e, x, xi));
  const double gap_tol = kClusterRelTol * std::max(1.0, sp.nonzero_eigs.cwiseAbs().maxCoeff());
  Eigen::Index best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < sp.nonzero_eigs.size(); ++j) {
    const double d = std::abs(sp.nonzero_eigs(j) - lambda);
    if (d < best_dist) {
      best_dist = d;
      best = j;
    }
  }
  if (best >= 0 && best_dist < 1e-6 * std::max(1.0, std::abs(lambda))) {
    bool simple = true;
    for (Eigen::Index j = 0; j < sp.nonzero_eigs.size(); ++j)
      if (j != best && std::abs(sp.nonzero_eigs(j) - sp.nonzero_eigs(best)) < gap_tol) simple = false;
    if (simple) cp.eigenvector_misalignment = std::max(0.0, 1.0 - std::abs(cp.normal.dot(sp.nonzero_vectors.col(best))));
  }
  return cp;
}

EllipsoidalCoords ellipsoidal_coordinates(const Ellipsoid& e, const Vec& x) {
  if (x.size() != e.dim()) throw Error(ErrorKind::InvalidInput, "dimension mismatch");
  const double norm2 = x.squaredNorm();
  if (!(norm2 > 0.0)) throw Error(ErrorKind::InvalidInput, "ellipsoidal coordinates need x != 0");

  std::vector<double> roots;
  std::vector<double> values;  // distinct axes carrying weight
  std::vector<double> weights;
  const auto& distinct = e.distinct_alphas();
  const auto& blocks = e.blocks();
  for (size_t g = 0; g < distinct.size(); ++g) {
    double w = 0.0;
    for (int idx : blocks[g]) w += x(idx) * x(idx) / distinct[g];
    for (size_t k = 1; k < blocks[g].size(); ++k) roots.push_back(distinct[g]);
    if (w <= 1e-28 * norm2) {
      roots.push_back(distinct[g]);
    } else {
      values.push_back(distinct[g]);
      weights.push_back(w);
    }
  }
  // sum_g w_g / (d_g - z) = 0 is sum x_i^2 / (alpha_i - z) = <A^{-1}x, x> with
  // the root z = 0 divided out. It increases from -inf to +inf on each (d_k, d_{k+1}).
  auto secular = [&](double z) {
    double s = 0.0;
    for (size_t g = 0; g < values.size(); ++g) s += weights[g] / (values[g] - z);
    return s;
  };
  for (size_t k = 0; k + 1 < values.size(); ++k) {
    double lo = values[k];
    double hi = values[k + 1];
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (secular(mid) < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  }
  if (static_cast<int>(roots.size()) != e.dim() - 1) {
    std::ostringstream os;
    os << "found " << roots.size() << " ellipsoidal coordinates, expected " << e.dim() - 1;
    throw Error(ErrorKind::NumericalFailure, os.str());
  }
  std::sort(roots.begin(), roots.end());
  EllipsoidalCoords out;
  out.zeta = Eigen::Map<const Vec>(roots.data(), static_cast<Eigen::Index>(roots.size()));
  return out;
}

double interlacing_violation(const Ellipsoid& e, const EllipsoidalCoords& zc) {
  const Vec& a = e.sorted_alphas();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < zc.zeta.size(); ++j) {
    worst = std::max(worst, a(j) - zc.zeta(j));
    worst = std::max(worst, zc.zeta(j) - a(j + 1));
  }
  return worst;
}

std::vector<int> audin_root_counts(const Ellipsoid& e, const Vec& x, const Vec& xi, double tol) {
  const EllipsoidalCoords zc = ellipsoidal_coordinates(e, x);
  const LaxSpectrum sp = spectrum(lax_matrix(e, x, xi));
  std::vector<double> roots{0.0};
  for (Eigen::Index j = 0; j < sp.nonzero_eigs.size(); ++j) roots.push_back(sp.nonzero_eigs(j));
  const Eigen::Index m = zc.zeta.size();
  std::vector<int> counts(static_cast<size_t>(m), 0);
  for (double r : roots) {
    if (r < zc.zeta(0)) ++counts[0];
    for (Eigen::Index j = 1; j < m; ++j)
      if (r >= zc.zeta(j - 1) - tol && r <= zc.zeta(j) + tol) ++counts[static_cast<size_t>(j)];
  }
  return counts;
}

EigenvalueVariation eigenvalue_variation(const Ellipsoid& e, const Vec& x, const Vec& xi, const Vec& xdot,
                                         const Vec& xidot) {
  const LaxMatrix lax = lax_matrix(e, x, xi);
  const LaxSpectrum sp = spectrum(lax);
  Mat core = -x * x.transpose();
  core.diagonal() += e.alphas();
  const Eigen::Index m = sp.nonzero_eigs.size();
  EigenvalueVariation out;
  out.rates.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Vec phi = sp.nonzero_vectors.col(j);
    out.rates(j) = -2.0 * (xidot.dot(phi) * (core * phi).dot(xi) + xdot.dot(phi) * x.dot(phi));
  }
  const double cluster_tol = kClusterRelTol * lax.entries.norm();
  Eigen::Index start = 0;
  for (Eigen::Index j = 1; j <= m; ++j) {
    if (j < m && sp.nonzero_eigs(j) - sp.nonzero_eigs(j - 1) < cluster_tol) continue;
    if (j - start > 1) {
      out.clustered = true;
      out.rates.segment(start, j - start).setConstant(out.rates.segment(start, j - start).mean());
    }
    start = j;
  }
  return out;
}

double variation_admissibility_residual(const Ellipsoid& e, const Vec& x, const Vec& xi, const Vec& xdot,
                                        const Vec& xidot) {
  const double r1 = std::abs(e.apply_inverse(x).dot(xdot));
  const double r2 = std::abs(e.apply_inverse(x).dot(xidot) + e.apply_inverse(xdot).dot(xi));
  const double r3 = std::abs(xidot.dot(xi));
  return std::max({r1, r2, r3});
}

std::vector<PhaseVariation> admissible_variation_basis(const Ellipsoid& e, const Vec& x, const Vec& xi) {
  const int n = e.dim();
  const Mat frame = tangent_frame(e, x);
  const Vec ax = e.apply_inverse(x);
  std::vector<PhaseVariation> basis;
  for (int k = 0; k < n - 1; ++k) {
    const Vec u = frame.col(k);
    const Vec xidot = -(e.apply_inverse(u).dot(xi) / ax.squaredNorm()) * ax;
    basis.push_back({u, xidot});
  }
  // Vertical directions: T_x E intersected with xi^perp.
  Mat vertical(n, 0);
  for (int k = 0; k < n - 1; ++k) {
    Vec w = frame.col(k) - frame.col(k).dot(xi) * xi;
    for (Eigen::Index j = 0; j < vertical.cols(); ++j) w -= w.dot(vertical.col(j)) * vertical.col(j);
    if (w.norm() > 1e-6 && vertical.cols() < n - 2) {
      vertical.conservativeResize(n, vertical.cols() + 1);
      vertical.col(vertical.cols() - 1) = w.normalized();
    }
  }
  for (Eigen::Index j = 0; j < vertical.cols(); ++j) basis.push_back({Vec::Zero(n), vertical.col(j)});
  return basis;
}

PhasePoint retract_variation(const Ellipsoid& e, const Vec& x, const Vec& xi, const PhaseVariation& var,
                             double s) {
  const Vec xs = project_to_ellipsoid(e, x + s * var.xdot);
  const Vec nrm = e.apply_inverse(xs).normalized();
  Vec v = xi + s * var.xidot;
  v -= v.dot(nrm) * nrm;
  return PhasePoint{xs, v.normalized()};
}

std::vector<int> match_branches(const Mat& previous_vectors, const Mat& current_vectors) {
  const Eigen::Index m = previous_vectors.cols();
  if (current_vectors.cols() != m) throw Error(ErrorKind::InvalidInput, "branch count changed");
  const Mat overlap = (previous_vectors.transpose() * current_vectors).cwiseAbs();
  std::vector<int> perm(static_cast<size_t>(m), -1);
  std::vector<bool> used_row(static_cast<size_t>(m), false);
  std::vector<bool> used_col(static_cast<size_t>(m), false);
  for (Eigen::Index round = 0; round < m; ++round) {
    double best = -1.0;
    Eigen::Index bi = 0;
    Eigen::Index bj = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (used_row[static_cast<size_t>(i)]) continue;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (used_col[static_cast<size_t>(j)]) continue;
        if (overlap(i, j) > best) {
          best = overlap(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    perm[static_cast<size_t>(bi)] = static_cast<int>(bj);
    used_row[static_cast<size_t>(bi)] = true;
    used_col[static_cast<size_t>(bj)] = true;
  }
  return perm;
}

SpectralSample spectral_sample(const Ellipsoid& e, const Vec& x, const Vec& xi) {
  check_phase_point(e, PhasePoint{x, xi});
  const LaxMatrix lax = lax_matrix(e, x, xi);
  const LaxSpectrum sp = spectrum(lax);
  SpectralSample s;
  s.x = x;
  s.xi = xi;
  s.eigs = sp.nonzero_eigs;
  s.moment = elementary_symmetric(sp.nonzero_eigs);
  s.degeneracy_anomaly = sp.degeneracy_anomaly;
  const Vec nrm = unit_normal(e, x);
  s.kernel_residual = std::max((lax.entries * xi).norm(), (lax.entries * nrm).norm());
  for (Eigen::Index k = 0; k < sp.eigenvalues.size(); ++k)
    s.eigen_residual = std::max(
        s.eigen_residual, (lax.entries * sp.eigenvectors.col(k) - sp.eigenvalues(k) * sp.eigenvectors.col(k)).norm());
  const double z = 0.5 * e.sorted_alphas()(0);
  const double phi = phi_z(e, z, xi, sp);
  s.identity_residual = std::abs(phi - moser_identity_rhs(e, z, x, xi)) / std::max(1.0, std::abs(phi));
  return s;
}

std::vector<SpectralSample> spectral_scan(const Ellipsoid& e, int count, std::uint64_t seed) {
  if (count < 0) throw Error(ErrorKind::InvalidInput, "sample count must be non-negative");
  std::vector<SpectralSample> out;
  out.reserve(static_cast<size_t>(count));
  std::mt19937_64 seeder(seed);
  for (int i = 0; i < count; ++i) {
    const Vec x = random_point(e, seeder());
    const Vec xi = random_unit_tangent(e, x, seeder());
    out.push_back(spectral_sample(e, x, xi));
  }
  return out;
}

}  // namespace ellfocal
