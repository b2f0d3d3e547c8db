#include <gtest/gtest.h>

#include <cmath>

#include "ellfocal/ellipsoid.hpp"
#include "ellfocal/error.hpp"
#include "test_support.hpp"

namespace ellfocal {
namespace {

using testing::random_phase_point;
using testing::umbilic_321;

void expect_error(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

TEST(MakeEllipsoid, DistinctAxes) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  EXPECT_EQ(e.dim(), 3);
  EXPECT_EQ(e.multiplicities(), (std::vector<int>{1, 1, 1}));
  EXPECT_TRUE(e.all_distinct());
  EXPECT_EQ(e.sorted_alphas(), (Vec(3) << 1, 2, 3).finished());
  // Sorted entry k lives at user index permutation()[k].
  EXPECT_EQ(e.permutation(), (std::vector<int>{2, 1, 0}));
}

TEST(MakeEllipsoid, SphereAndTriaxialMultiplicities) {
  const Ellipsoid sphere = make_ellipsoid({1, 1, 1, 1});
  EXPECT_TRUE(sphere.is_sphere());
  EXPECT_EQ(sphere.multiplicities(), std::vector<int>{4});

  const Ellipsoid tri = make_ellipsoid({3, 2, 2, 1});
  EXPECT_EQ(tri.multiplicities(), (std::vector<int>{1, 2, 1}));
  EXPECT_EQ(tri.blocks()[1], (std::vector<int>{1, 2}));
  EXPECT_EQ(tri.block_of(2), 1);
  int total = 0;
  for (int m : tri.multiplicities()) total += m;
  EXPECT_EQ(total, tri.dim());
}

TEST(MakeEllipsoid, Errors) {
  expect_error(ErrorKind::InvalidInput, [] { make_ellipsoid({3, 0, 1}); });
  expect_error(ErrorKind::InvalidInput, [] { make_ellipsoid({3, -2, 1}); });
  expect_error(ErrorKind::InvalidInput, [] { make_ellipsoid({}); });
  expect_error(ErrorKind::UnsupportedDimension, [] { make_ellipsoid({2, 1}); });
}

TEST(UnitNormal, Examples) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const Vec vertex = (Vec(3) << std::sqrt(3.0), 0, 0).finished();
  EXPECT_LT((unit_normal(e, vertex) - Vec::Unit(3, 0)).norm(), 1e-15);

  const Ellipsoid sphere = make_ellipsoid({1, 1, 1});
  const Vec x = (Vec(3) << 0.6, 0.0, 0.8).finished();
  EXPECT_LT((unit_normal(sphere, x) - x).norm(), 1e-15);

  const Vec u = umbilic_321();
  const Vec expected = (Vec(3) << std::sqrt(1.5) / 3.0, 0.0, std::sqrt(0.5)).finished().normalized();
  const Vec n = unit_normal(e, u);
  EXPECT_LT((n - expected).norm(), 1e-15);
  for (std::uint64_t s = 0; s < 10; ++s) EXPECT_LT(std::abs(n.dot(random_unit_tangent(e, u, s))), 1e-14);

  expect_error(ErrorKind::ConstraintViolation, [&] { unit_normal(e, Vec::Ones(3)); });
}

TEST(ProjectToEllipsoid, Examples) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const Vec u = umbilic_321();
  EXPECT_LT((project_to_ellipsoid(e, u) - u).norm(), 1e-15);
  const Ellipsoid sphere = make_ellipsoid({1, 1, 1});
  EXPECT_LT((project_to_ellipsoid(sphere, 2.0 * Vec::Unit(3, 0)) - Vec::Unit(3, 0)).norm(), 1e-15);
  // <A^{-1}y,y> = 4/3 for y = 2 e1, so the scale is sqrt(3)/2.
  EXPECT_LT((project_to_ellipsoid(e, 2.0 * Vec::Unit(3, 0)) - std::sqrt(3.0) * Vec::Unit(3, 0)).norm(), 1e-15);
  expect_error(ErrorKind::DegenerateInput, [&] { project_to_ellipsoid(e, Vec::Zero(3)); });
}

TEST(ProjectToTangent, Examples) {
  const Ellipsoid e = make_ellipsoid({4, 3, 2, 1});
  const PhasePoint p = random_phase_point(e, 11);
  const Vec n = unit_normal(e, p.x);
  EXPECT_LT(project_to_tangent(e, p.x, n).norm(), 1e-15);
  EXPECT_LT((project_to_tangent(e, p.x, p.xi) - p.xi).norm(), 1e-15);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int k = 0; k < 100; ++k) {
    Vec v(4);
    for (int i = 0; i < 4; ++i) v(i) = normal(rng);
    EXPECT_LT(std::abs(project_to_tangent(e, p.x, v).dot(e.apply_inverse(p.x))), 1e-14);
  }
}

TEST(ProjectionProperties, NormalOrthogonalAndIdempotent) {
  for (const auto& axes : {std::vector<double>{3, 2, 1}, {4, 3, 2, 1}, {5, 2, 2, 0.5, 0.1}}) {
    const Ellipsoid e = make_ellipsoid(axes);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    for (int k = 0; k < 200; ++k) {
      Vec y(e.dim());
      for (int i = 0; i < e.dim(); ++i) y(i) = normal(rng);
      const Vec x = project_to_ellipsoid(e, y);
      EXPECT_LT(e.constraint_residual(x), 1e-15);
      EXPECT_LT((project_to_ellipsoid(e, x) - x).norm(), 1e-15);
      Vec v(e.dim());
      for (int i = 0; i < e.dim(); ++i) v(i) = normal(rng);
      EXPECT_LT(std::abs(unit_normal(e, x).dot(project_to_tangent(e, x, v))), 1e-12);
    }
  }
}

TEST(TangentFrame, IsOrthonormalAndTangent) {
  const Ellipsoid e = make_ellipsoid({4, 3, 2, 1});
  const Vec x = random_point(e, 3);
  const Mat f = tangent_frame(e, x);
  EXPECT_LT((f.transpose() * f - Mat::Identity(3, 3)).norm(), 1e-14);
  EXPECT_LT((f.transpose() * unit_normal(e, x)).norm(), 1e-14);
}

// Oracle: normal curvatures from second differences of the radially
// projected curve x + s u, assembled into the quadratic form by polarization.
Vec normal_section_curvatures(const Ellipsoid& e, const Vec& x) {
  const Mat frame = tangent_frame(e, x);
  const Vec n = unit_normal(e, x);
  const double h = 1e-4;
  auto kappa = [&](const Vec& u) {
    const Vec cp = project_to_ellipsoid(e, x + h * u);
    const Vec cm = project_to_ellipsoid(e, x - h * u);
    return -((cp - 2.0 * x + cm) / (h * h)).dot(n);
  };
  const int m = static_cast<int>(frame.cols());
  Mat s(m, m);
  for (int i = 0; i < m; ++i) s(i, i) = kappa(frame.col(i));
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      s(i, j) = s(j, i) = kappa((frame.col(i) + frame.col(j)) / std::sqrt(2.0)) - 0.5 * (s(i, i) + s(j, j));
  return Eigen::SelfAdjointEigenSolver<Mat>(s).eigenvalues();
}

TEST(ShapeOperator, SphereHasUnitCurvature) {
  const Ellipsoid sphere = make_ellipsoid({1, 1, 1});
  const ShapeReport r = shape_operator(sphere, Vec::Unit(3, 2));
  EXPECT_LT((r.principal_curvatures - Vec::Ones(2)).norm(), 1e-14);
  EXPECT_LT(r.umbilic_defect, 1e-14);

  const Ellipsoid s4 = make_ellipsoid({1, 1, 1, 1});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ShapeReport rs = shape_operator(s4, random_point(s4, seed));
    EXPECT_LT(rs.umbilic_defect, 1e-12);
    EXPECT_NEAR(rs.principal_curvatures(0), 1.0, 1e-12);
  }
}

TEST(ShapeOperator, UmbilicAndVertexOf321) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  EXPECT_LT(shape_operator(e, umbilic_321()).umbilic_defect, 1e-10);
  const Vec vertex = (Vec(3) << std::sqrt(3.0), 0, 0).finished();
  EXPECT_GT(shape_operator(e, vertex).umbilic_defect, 0.1);
}

TEST(ShapeOperator, AgreesWithNormalSectionOracle) {
  for (const auto& axes : {std::vector<double>{3, 2, 1}, {4, 3, 2, 1}, {3, 2, 2, 1}}) {
    const Ellipsoid e = make_ellipsoid(axes);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Vec x = random_point(e, seed);
      const Vec oracle = normal_section_curvatures(e, x);
      EXPECT_LT((shape_operator(e, x).principal_curvatures - oracle).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(ShapeOperator, DefectInvariantUnderBlockRotations) {
  const Ellipsoid e = make_ellipsoid({3, 2, 2, 1});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Vec x = random_point(e, seed);
    const double angle = 0.3 + 0.2 * static_cast<double>(seed);
    Mat g = Mat::Identity(4, 4);
    g(1, 1) = std::cos(angle);
    g(1, 2) = -std::sin(angle);
    g(2, 1) = std::sin(angle);
    g(2, 2) = std::cos(angle);
    EXPECT_NEAR(shape_operator(e, x).umbilic_defect, shape_operator(e, g * x).umbilic_defect, 1e-10);
  }
}

TEST(RandomUnitTangent, UnitTangentDeterministicIsotropic) {
  const Ellipsoid e = make_ellipsoid({4, 3, 2, 1});
  const Vec x = random_point(e, 1);
  const Vec v = random_unit_tangent(e, x, 42);
  EXPECT_NEAR(v.norm(), 1.0, 1e-14);
  EXPECT_LT(std::abs(e.apply_inverse(x).dot(v)), 1e-14);
  EXPECT_EQ(v, random_unit_tangent(e, x, 42));

  Vec mean = Vec::Zero(4);
  const int count = 10000;
  for (int s = 0; s < count; ++s) mean += random_unit_tangent(e, x, 1000 + static_cast<std::uint64_t>(s));
  mean /= count;
  EXPECT_LT(mean.norm(), 0.05);
}

}  // namespace
}  // namespace ellfocal
