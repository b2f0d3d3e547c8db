#pragma once

#include <cstdint>
#include <vector>

#include "ellfocal/linalg.hpp"

namespace ellfocal {

inline constexpr double kDefaultConstraintTol = 1e-9;

/// The ellipsoid <A^{-1}x, x> = 1 for diagonal positive A.
///
/// Coordinates are always in the user's order; `alphas()` are the diagonal
/// entries of A (squared semi-axes) in that order. The non-decreasing sorted
/// copy, its permutation back to user indices, and the multiplicity table of
/// distinct values are cached at construction.
class Ellipsoid {
 public:
  /// Throws invalid-input for non-positive or non-finite entries and
  /// unsupported-dimension for n < 3.
  static Ellipsoid make(const std::vector<double>& alphas, double constraint_tol = kDefaultConstraintTol);
  /// Same validation, but admits n = 2 (ellipses), used for coordinate slices.
  static Ellipsoid make_slice(const std::vector<double>& alphas, double constraint_tol = kDefaultConstraintTol);

  int dim() const { return static_cast<int>(alphas_.size()); }
  const Vec& alphas() const { return alphas_; }
  const Vec& inv_alphas() const { return inv_alphas_; }
  Vec semi_axes() const { return alphas_.cwiseSqrt(); }

  const Vec& sorted_alphas() const { return sorted_; }
  /// permutation()[k] is the user index of sorted_alphas()(k).
  const std::vector<int>& permutation() const { return perm_; }
  /// Distinct axis values, ascending, with their multiplicities.
  const std::vector<double>& distinct_alphas() const { return distinct_; }
  const std::vector<int>& multiplicities() const { return mult_; }
  /// User indices belonging to each distinct value (same order as distinct_alphas()).
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  /// Index into distinct_alphas() for a user coordinate.
  int block_of(int user_index) const { return block_of_[static_cast<size_t>(user_index)]; }

  bool is_sphere() const { return distinct_.size() == 1; }
  bool all_distinct() const { return static_cast<int>(distinct_.size()) == dim(); }
  double constraint_tol() const { return tol_; }
  double min_semi_axis() const { return std::sqrt(sorted_(0)); }
  double max_semi_axis() const { return std::sqrt(sorted_(sorted_.size() - 1)); }
  double geometric_mean_semi_axis() const;

  Vec apply_inverse(const Vec& x) const { return inv_alphas_.cwiseProduct(x); }
  double constraint_value(const Vec& x) const { return x.dot(apply_inverse(x)); }
  double constraint_residual(const Vec& x) const { return std::abs(constraint_value(x) - 1.0); }

 private:
  Ellipsoid(const std::vector<double>& alphas, double tol, int min_dim);

  Vec alphas_;
  Vec inv_alphas_;
  Vec sorted_;
  std::vector<int> perm_;
  std::vector<double> distinct_;
  std::vector<int> mult_;
  std::vector<std::vector<int>> blocks_;
  std::vector<int> block_of_;
  double tol_;
};

inline Ellipsoid make_ellipsoid(const std::vector<double>& alphas) { return Ellipsoid::make(alphas); }

struct PhasePoint {
  Vec x;
  Vec xi;
};

/// Throws constraint-violation unless x lies on E, xi is tangent and unit.
void check_phase_point(const Ellipsoid& e, const PhasePoint& p);
void check_on_ellipsoid(const Ellipsoid& e, const Vec& x);

Vec unit_normal(const Ellipsoid& e, const Vec& x);
/// Radial rescaling y / sqrt(<A^{-1}y, y>).
Vec project_to_ellipsoid(const Ellipsoid& e, const Vec& y);
Vec project_to_tangent(const Ellipsoid& e, const Vec& x, const Vec& v);
/// Orthonormal basis of T_x E as columns, obtained by projecting the
/// coordinate axes in order and applying Gram-Schmidt.
Mat tangent_frame(const Ellipsoid& e, const Vec& x);

struct ShapeReport {
  Vec principal_curvatures;  // ascending, n-1 entries, outward normal
  double umbilic_defect = 0.0;
  Mat principal_directions;  // columns, ambient coordinates
};

ShapeReport shape_operator(const Ellipsoid& e, const Vec& x);

/// Gaussian sample projected to T_x and normalized; deterministic per seed.
Vec random_unit_tangent(const Ellipsoid& e, const Vec& x, std::uint64_t seed);

/// Random point on E (radially projected Gaussian), deterministic per seed.
Vec random_point(const Ellipsoid& e, std::uint64_t seed);

}  // namespace ellfocal
