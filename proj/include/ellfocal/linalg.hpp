#pragma once

#include <Eigen/Dense>

namespace ellfocal {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Eigendecomposition of a real symmetric matrix. Eigenvalues ascending,
/// eigenvectors in the matching columns.
struct SymmetricEigen {
  Vec values;
  Mat vectors;
  int sweeps = 0;
  double off_diagonal_norm = 0.0;
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below `off_tol` (absolute) or no rotation changes the matrix.
SymmetricEigen jacobi_eigen(const Mat& symmetric, double off_tol = 1e-13, int max_sweeps = 100);

/// Elementary symmetric functions e_1..e_m of the entries of `values`.
Vec elementary_symmetric(const Vec& values);

/// Angle between two vectors, accurate near 0 and pi.
double angle_between(const Vec& a, const Vec& b);

}  // namespace ellfocal
