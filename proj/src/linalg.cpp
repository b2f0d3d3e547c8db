#include "ellfocal/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ellfocal/error.hpp"

namespace ellfocal {

namespace {

double off_norm(const Mat& m) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen jacobi_eigen(const Mat& symmetric, double off_tol, int max_sweeps) {
  const Eigen::Index n = symmetric.rows();
  if (n != symmetric.cols()) throw Error(ErrorKind::InvalidInput, "jacobi_eigen: matrix not square");

  Mat a = 0.5 * (symmetric + symmetric.transpose());
  Mat v = Mat::Identity(n, n);
  SymmetricEigen out;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const double off = off_norm(a);
    out.off_diagonal_norm = off;
    if (off < off_tol) break;
    out.sweeps = sweep + 1;
    bool rotated = false;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Rutishauser's formulation: t = tan(theta) is the smaller root.
        const double theta = (aqq - app) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        if (s == 0.0) continue;
        rotated = true;
        const double tau = s / (1.0 + c);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = arp - s * (arq + tau * arp);
          a(p, r) = a(r, p);
          a(r, q) = arq + s * (arp - tau * arq);
          a(q, r) = a(r, q);
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = vrp - s * (vrq + tau * vrp);
          v(r, q) = vrq + s * (vrp - tau * vrq);
        }
      }
    }
    if (!rotated) {
      out.off_diagonal_norm = off_norm(a);
      break;
    }
  }
  out.off_diagonal_norm = off_norm(a);

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[static_cast<size_t>(k)], order[static_cast<size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<size_t>(k)]);
  }
  return out;
}

Vec elementary_symmetric(const Vec& values) {
  const Eigen::Index m = values.size();
  // e[k] accumulates the k-th elementary symmetric polynomial.
  Vec e = Vec::Zero(m + 1);
  e(0) = 1.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index k = i + 1; k >= 1; --k) e(k) += values(i) * e(k - 1);
  return e.tail(m);
}

double angle_between(const Vec& a, const Vec& b) {
  const Vec ua = a.normalized();
  const Vec ub = b.normalized();
  return 2.0 * std::atan2((ua - ub).norm(), (ua + ub).norm());
}

}  // namespace ellfocal
