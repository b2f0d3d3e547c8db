#include "ellfocal/ellipsoid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "ellfocal/error.hpp"

namespace ellfocal {

namespace {

constexpr double kDistinctRelTol = 1e-12;

Vec gaussian_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

}  // namespace

Ellipsoid::Ellipsoid(const std::vector<double>& alphas, double tol, int min_dim) : tol_(tol) {
  if (alphas.empty()) throw Error(ErrorKind::InvalidInput, "no axes given");
  for (double a : alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      std::ostringstream os;
      os << "axis value " << a << " is not a positive finite number";
      throw Error(ErrorKind::InvalidInput, os.str());
    }
  }
  if (static_cast<int>(alphas.size()) < min_dim) {
    std::ostringstream os;
    os << "dimension n = " << alphas.size() << " (need n >= " << min_dim << ")";
    throw Error(ErrorKind::UnsupportedDimension, os.str());
  }
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidInput, "constraint tolerance must be positive");

  const int n = static_cast<int>(alphas.size());
  alphas_ = Eigen::Map<const Vec>(alphas.data(), n);
  inv_alphas_ = alphas_.cwiseInverse();

  perm_.resize(static_cast<size_t>(n));
  std::iota(perm_.begin(), perm_.end(), 0);
  std::stable_sort(perm_.begin(), perm_.end(), [&](int i, int j) { return alphas_(i) < alphas_(j); });
  sorted_.resize(n);
  for (int k = 0; k < n; ++k) sorted_(k) = alphas_(perm_[static_cast<size_t>(k)]);

  block_of_.assign(static_cast<size_t>(n), 0);
  for (int k = 0; k < n; ++k) {
    const double a = sorted_(k);
    const int user = perm_[static_cast<size_t>(k)];
    if (distinct_.empty() || std::abs(a - distinct_.back()) > kDistinctRelTol * a) {
      distinct_.push_back(a);
      mult_.push_back(1);
      blocks_.push_back({user});
    } else {
      ++mult_.back();
      blocks_.back().push_back(user);
    }
    block_of_[static_cast<size_t>(user)] = static_cast<int>(distinct_.size()) - 1;
  }
}

Ellipsoid Ellipsoid::make(const std::vector<double>& alphas, double constraint_tol) {
  return Ellipsoid(alphas, constraint_tol, 3);
}

Ellipsoid Ellipsoid::make_slice(const std::vector<double>& alphas, double constraint_tol) {
  return Ellipsoid(alphas, constraint_tol, 2);
}

double Ellipsoid::geometric_mean_semi_axis() const {
  return std::exp(0.5 * alphas_.array().log().mean());
}

void check_on_ellipsoid(const Ellipsoid& e, const Vec& x) {
  if (x.size() != e.dim()) throw Error(ErrorKind::InvalidInput, "point has wrong dimension");
  const double r = e.constraint_residual(x);
  if (!(r <= e.constraint_tol())) {
    std::ostringstream os;
    os << "point off ellipsoid: |<A^-1 x,x> - 1| = " << r;
    throw Error(ErrorKind::ConstraintViolation, os.str());
  }
}

void check_phase_point(const Ellipsoid& e, const PhasePoint& p) {
  check_on_ellipsoid(e, p.x);
  if (p.xi.size() != e.dim()) throw Error(ErrorKind::InvalidInput, "direction has wrong dimension");
  const double tangency = std::abs(e.apply_inverse(p.x).dot(p.xi));
  const double speed = std::abs(p.xi.norm() - 1.0);
  if (!(tangency <= e.constraint_tol()) || !(speed <= e.constraint_tol())) {
    std::ostringstream os;
    os << "direction not a unit tangent: |<A^-1 x, xi>| = " << tangency << ", ||xi| - 1| = " << speed;
    throw Error(ErrorKind::ConstraintViolation, os.str());
  }
}

Vec unit_normal(const Ellipsoid& e, const Vec& x) {
  check_on_ellipsoid(e, x);
  return e.apply_inverse(x).normalized();
}

Vec project_to_ellipsoid(const Ellipsoid& e, const Vec& y) {
  if (y.size() != e.dim()) throw Error(ErrorKind::InvalidInput, "point has wrong dimension");
  const double q = e.constraint_value(y);
  if (!(q > 0.0)) throw Error(ErrorKind::DegenerateInput, "cannot project the origin onto the ellipsoid");
  return y / std::sqrt(q);
}

Vec project_to_tangent(const Ellipsoid& e, const Vec& x, const Vec& v) {
  const Vec n = unit_normal(e, x);
  return v - v.dot(n) * n;
}

Mat tangent_frame(const Ellipsoid& e, const Vec& x) {
  const int n = e.dim();
  const Vec nrm = unit_normal(e, x);
  Mat frame(n, n - 1);
  int found = 0;
  for (int i = 0; i < n && found < n - 1; ++i) {
    Vec v = Vec::Unit(n, i);
    v -= v.dot(nrm) * nrm;
    for (int k = 0; k < found; ++k) v -= v.dot(frame.col(k)) * frame.col(k);
    // Second pass keeps the basis orthonormal to rounding.
    v -= v.dot(nrm) * nrm;
    for (int k = 0; k < found; ++k) v -= v.dot(frame.col(k)) * frame.col(k);
    const double len = v.norm();
    if (len > 1e-8) frame.col(found++) = v / len;
  }
  if (found != n - 1) throw Error(ErrorKind::NumericalFailure, "could not build a tangent frame");
  return frame;
}

ShapeReport shape_operator(const Ellipsoid& e, const Vec& x) {
  check_on_ellipsoid(e, x);
  // Defining function F = <A^{-1}x,x> - 1: grad = 2A^{-1}x, Hess = 2A^{-1};
  // the second fundamental form w.r.t. the outward normal is Hess/|grad| on T_x.
  const Mat frame = tangent_frame(e, x);
  const double grad_scale = e.apply_inverse(x).norm();
  const Mat restricted = frame.transpose() * e.inv_alphas().asDiagonal() * frame / grad_scale;
  const SymmetricEigen eig = jacobi_eigen(restricted, 1e-15);
  ShapeReport rep;
  rep.principal_curvatures = eig.values;
  rep.umbilic_defect = eig.values(eig.values.size() - 1) - eig.values(0);
  rep.principal_directions = frame * eig.vectors;
  return rep;
}

Vec random_unit_tangent(const Ellipsoid& e, const Vec& x, std::uint64_t seed) {
  const Vec nrm = unit_normal(e, x);
  std::mt19937_64 rng(seed);
  for (;;) {
    Vec v = gaussian_vector(e.dim(), rng);
    v -= v.dot(nrm) * nrm;
    const double len = v.norm();
    if (len > 1e-12) {
      v /= len;
      v -= v.dot(nrm) * nrm;
      return v.normalized();
    }
  }
}

Vec random_point(const Ellipsoid& e, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (;;) {
    const Vec v = gaussian_vector(e.dim(), rng);
    if (v.norm() > 1e-12) return project_to_ellipsoid(e, v);
  }
}

}  // namespace ellfocal
