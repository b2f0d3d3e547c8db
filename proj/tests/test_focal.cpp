#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ellfocal/focal.hpp"
#include "ellfocal/lax.hpp"
#include "test_support.hpp"

namespace ellfocal {
namespace {

using testing::umbilic_321;

constexpr double kPi = std::numbers::pi;

template <class Fn>
void expect_error(ErrorKind kind, Fn&& fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(kind);
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), kind) << err.what();
  }
}

TEST(DirectionGrid, UnitTangentAndDeterministic) {
  for (const auto& axes : {std::vector<double>{3, 2, 1}, {4, 3, 2, 1}, {5, 4, 3, 2, 1}}) {
    const Ellipsoid e = make_ellipsoid(axes);
    const Vec x = random_point(e, 2);
    GridOptions g;
    g.random_extra = 3;
    g.seed = 11;
    const auto dirs = direction_grid(e, x, 20, g);
    ASSERT_EQ(dirs.size(), 23u);
    for (const auto& d : dirs) EXPECT_NO_THROW(check_phase_point(e, PhasePoint{x, d}));
    const auto again = direction_grid(e, x, 20, g);
    for (size_t k = 0; k < dirs.size(); ++k) EXPECT_EQ(dirs[k], again[k]);
  }
}

TEST(DirectionGrid, CircleSpacingAndAnchoring) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const Vec u = umbilic_321();
  GridOptions anchored;
  anchored.anchored = true;
  const auto a = direction_grid(e, u, 16, anchored);
  const auto h = direction_grid(e, u, 16);
  EXPECT_NEAR(circle_angle(e, u, a[0]), 0.0, 1e-14);
  EXPECT_NEAR(circle_angle(e, u, h[0]), kPi / 16, 1e-14);
  for (size_t k = 1; k < a.size(); ++k) EXPECT_NEAR(angle_between(a[k - 1], a[k]), 2 * kPi / 16, 1e-12);
}

TEST(DirectionGrid, SphereGridIsRoughlyBalanced) {
  const Ellipsoid e = make_ellipsoid({4, 3, 2, 1});
  const Vec x = random_point(e, 1);
  const auto dirs = direction_grid(e, x, 200);
  Vec mean = Vec::Zero(4);
  for (const auto& d : dirs) mean += d;
  EXPECT_LT((mean / 200.0).norm(), 0.02);
}

TEST(SelfFocalityScan, SphereIsPole) {
  const Ellipsoid e = make_ellipsoid({1, 1, 1, 1});
  const ScanReport r = self_focality_scan(e, random_point(e, 3), 32);
  EXPECT_EQ(r.verdict, Verdict::SelfFocalEvidence);
  EXPECT_NEAR(r.mean_time, 2 * kPi, 1e-8);
  for (const auto& d : r.results) EXPECT_LT(d.angular_deviation(), 1e-8);
}

TEST(SelfFocalityScan, UmbilicIsSelfFocalButNotPole) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const ScanReport r = self_focality_scan(e, umbilic_321(), 32);
  EXPECT_EQ(r.verdict, Verdict::SelfFocalEvidence);
  EXPECT_LT(r.relative_spread, 1e-5);
  EXPECT_EQ(r.returned_count, 32);
  int large = 0;
  for (const auto& d : r.results) large += d.angular_deviation() > 0.1;
  EXPECT_GE(large, 28);
}

// The common return time equals the length of the closed geodesic
// x_2 = 0, which passes through the umbilic.
TEST(SelfFocalityScan, UmbilicReturnTimeIsEllipseCircumference) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const int steps = 200000;
  double length = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double s = 2 * kPi * (k + 0.5) / steps;
    length += std::hypot(std::sqrt(3.0) * std::sin(s), std::cos(s)) * 2 * kPi / steps;
  }
  const ScanReport r = self_focality_scan(e, umbilic_321(), 8);
  EXPECT_NEAR(r.mean_time, length, 1e-9);
}

TEST(SelfFocalityScan, GenericPointsOfMultiAxialEllipsoidAreNotFocal) {
  const Ellipsoid e = make_ellipsoid({4, 3, 2, 1});
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const ScanReport r = self_focality_scan(e, random_point(e, seed), 16);
    EXPECT_EQ(r.verdict, Verdict::NotSelfFocal);
    EXPECT_GT(r.relative_spread, 1e-2);
  }
}

TEST(SelfFocalityScan, VerdictStableUnderDoubling) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const Vec generic = random_point(e, 5);
  for (const Vec& x : {Vec(umbilic_321()), generic}) {
    EXPECT_EQ(self_focality_scan(e, x, 16).verdict, self_focality_scan(e, x, 32).verdict);
  }
}

TEST(SelfFocalityScan, ThreadCountDoesNotChangeResults) {
  const Ellipsoid e = make_ellipsoid({4, 3, 2, 1});
  const Vec x = random_point(e, 9);
  ScanOptions one, four;
  four.threads = 4;
  const ScanReport a = self_focality_scan(e, x, 12, one);
  const ScanReport b = self_focality_scan(e, x, 12, four);
  ASSERT_EQ(a.results.size(), b.results.size());
  for (size_t k = 0; k < a.results.size(); ++k)
    EXPECT_EQ(a.results[k].representative_time(), b.results[k].representative_time());
}

TEST(SelfFocalityScan, Errors) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  expect_error(ErrorKind::InvalidInput, [&] { self_focality_scan(e, umbilic_321(), 4); });
  expect_error(ErrorKind::ConstraintViolation, [&] { self_focality_scan(e, Vec::Ones(3), 8); });
}

TEST(ReturnMap, SphereIsIdentity) {
  const Ellipsoid e = make_ellipsoid({1, 1, 1});
  const Vec x = random_point(e, 1);
  const auto samples = return_map(e, x, 2 * kPi, direction_grid(e, x, 16));
  for (const auto& s : samples) {
    EXPECT_FALSE(s.flagged);
    EXPECT_LT(s.angular_deviation, 1e-8);
  }
}

TEST(ReturnMap, UmbilicHasTwoFixedDirections) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const Vec u = umbilic_321();
  const double t = self_focality_scan(e, u, 8).mean_time;
  GridOptions anchored;
  anchored.anchored = true;
  const auto samples = return_map(e, u, t, direction_grid(e, u, 64, anchored));
  EXPECT_EQ(count_fixed_directions(samples, 1e-6), 2);
  // The fixed directions are the two orientations of the x_2 = 0 ellipse.
  EXPECT_LT(samples[0].angular_deviation, 1e-6);
  EXPECT_LT(samples[32].angular_deviation, 1e-6);
  EXPECT_LT(std::abs(samples[0].initial_direction(1)), 1e-15);
  for (const auto& s : samples) {
    EXPECT_NEAR(s.terminal_direction.norm(), 1.0, 1e-8);
    EXPECT_LT(std::abs(e.apply_inverse(u).dot(s.terminal_direction)), 1e-8);
  }
}

TEST(Twistedness, SphereMapIsIdentity) {
  const Ellipsoid e = make_ellipsoid({1, 1, 1, 1});
  const Vec x = random_point(e, 4);
  const TwistReport r = twistedness_report(e, x, 2 * kPi, direction_grid(e, x, 4));
  for (const auto& s : r.samples) {
    EXPECT_LT((s.jacobian - Mat::Identity(2, 2)).norm(), 1e-6);
    EXPECT_LT(s.distance_from_one, 1e-6);
  }
}

TEST(Twistedness, UmbilicGenericDirectionsAreTwisted) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const Vec u = umbilic_321();
  const double t = self_focality_scan(e, u, 8).mean_time;
  const Mat frame = tangent_frame(e, u);
  std::vector<Vec> probes;
  for (int k = 0; k < 8; ++k) {
    const double th = 2 * kPi * (k + 0.25) / 8;
    probes.push_back(std::cos(th) * frame.col(0) + std::sin(th) * frame.col(1));
  }
  const TwistReport r = twistedness_report(e, u, t, probes);
  for (const auto& s : r.samples) {
    EXPECT_FALSE(s.insufficient_resolution);
    EXPECT_GT(s.distance_from_one, 0.01);
  }
}

// Oracle for the probe stencil: derivative of the terminal angle on a fine
// circle grid.
TEST(Twistedness, ProbeStencilAgreesWithCircleSamples) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const Vec u = umbilic_321();
  const double t = self_focality_scan(e, u, 8).mean_time;
  GridOptions anchored;
  anchored.anchored = true;
  const auto grid = direction_grid(e, u, 512, anchored);
  const TwistReport circle = twistedness_report(e, u, return_map(e, u, t, grid));
  const TwistReport probe = twistedness_report(e, u, t, {grid[40], grid[100], grid[300]});
  const std::array<int, 3> idx{40, 100, 300};
  for (size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(probe.samples[k].jacobian(0, 0), circle.samples[static_cast<size_t>(idx[k])].jacobian(0, 0), 1e-3);
  }
}

TEST(Twistedness, CoarseCircleIsRejected) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const Vec u = umbilic_321();
  const double t = self_focality_scan(e, u, 8).mean_time;
  const auto samples = return_map(e, u, t, direction_grid(e, u, 6));
  expect_error(ErrorKind::InsufficientResolution, [&] { twistedness_report(e, u, samples); });
}

TEST(UmbilicPoints2d, Triaxial321) {
  const UmbilicPoints r = umbilic_points_2d({3, 2, 1});
  EXPECT_LT((r.points[0] - umbilic_321()).norm(), 1e-12);
  EXPECT_LT(r.max_defect, 1e-10);
  EXPECT_LT(r.max_constraint_residual, 1e-12);
  EXPECT_LT(r.closed_form_discrepancy, 1e-12);
  for (const auto& p : r.points) {
    EXPECT_EQ(p(1), 0.0);
    EXPECT_NEAR(std::abs(p(0)), std::sqrt(1.5), 1e-12);
    EXPECT_NEAR(std::abs(p(2)), std::sqrt(0.5), 1e-12);
  }
}

TEST(UmbilicPoints2d, NearlySphericalAndUserOrder) {
  const double eps = 0.1;
  const UmbilicPoints r = umbilic_points_2d({1 - eps, 1 + eps, 1});
  EXPECT_LT(r.max_defect, 1e-10);
  // Largest axis is the second coordinate here, the smallest the first.
  for (const auto& p : r.points) EXPECT_EQ(p(2), 0.0);
  EXPECT_LT((r.points[0] + r.points[3]).norm(), 1e-15);
  EXPECT_LT((r.points[1] + r.points[2]).norm(), 1e-15);
  EXPECT_LT(r.closed_form_discrepancy, 1e-12);
}

TEST(UmbilicPoints2d, RepeatedAxesHaveNoIsolatedUmbilic) {
  expect_error(ErrorKind::NoUmbilicFound, [] { umbilic_points_2d({1, 1, 1}); });
  expect_error(ErrorKind::NoUmbilicFound, [] { umbilic_points_2d({3, 2, 2}); });
}

TEST(EmbedSlice, SliceGeodesicsAreAmbientGeodesics) {
  const Ellipsoid e = make_ellipsoid({3, 2, 2, 1});
  const SliceEmbedding emb = embed_slice(e, {0, 1, 3});
  EXPECT_EQ(emb.slice().alphas(), (Vec(3) << 3, 2, 1).finished());
  const Ellipsoid& s = emb.slice();
  const Vec y = random_point(s, 3);
  const Vec v = random_unit_tangent(s, y, 4);
  IntegratorOptions opts;
  opts.t_max = 20.0;
  const Trajectory slice_traj = integrate_geodesic(s, PhasePoint{y, v}, opts);
  const Trajectory ambient_traj = integrate_geodesic(e, emb.embed(PhasePoint{y, v}), opts);
  for (double t = 0.0; t <= 20.0; t += 0.5) {
    EXPECT_LT((emb.embed(slice_traj.state_at(t).x) - ambient_traj.state_at(t).x).norm(), 1e-9);
  }
  EXPECT_EQ(emb.restrict(emb.embed(y)), y);
}

TEST(EmbedSlice, SphereSliceIsLowerSphereAndErrors) {
  const Ellipsoid e = make_ellipsoid({1, 1, 1, 1});
  EXPECT_TRUE(embed_slice(e, {0, 2, 3}).slice().is_sphere());
  expect_error(ErrorKind::InvalidInput, [&] { embed_slice(e, {0, 0, 1}); });
  expect_error(ErrorKind::InvalidInput, [&] { embed_slice(e, {0, 4}); });
  expect_error(ErrorKind::InvalidInput, [&] { embed_slice(e, {1}); });
}

TEST(SliceUmbilicCandidates, FourPerDistinctTriple) {
  const Ellipsoid e = make_ellipsoid({4, 3, 2, 1});
  const auto c = slice_umbilic_candidates(e);
  EXPECT_EQ(c.size(), 16u);
  for (const auto& p : c) EXPECT_LT(e.constraint_residual(p), 1e-12);
  EXPECT_EQ(slice_umbilic_candidates(make_ellipsoid({3, 2, 2, 1})).size(), 8u);
}

TEST(SpecialPoint, Form121) {
  const Ellipsoid e = make_ellipsoid({3, 2, 2, 1});
  const Vec u = special_point_1_n2_1(e);
  EXPECT_LT((u - (Vec(4) << std::sqrt(1.5), 0, 0, std::sqrt(0.5)).finished()).norm(), 1e-12);
  const Ellipsoid e5 = make_ellipsoid({1, 2, 2, 2, 3});
  const Vec u5 = special_point_1_n2_1(e5);
  EXPECT_NEAR(std::abs(u5(4)), std::sqrt(1.5), 1e-12);
  EXPECT_NEAR(std::abs(u5(0)), std::sqrt(0.5), 1e-12);
  expect_error(ErrorKind::InvalidMultiplicities, [] { special_point_1_n2_1(make_ellipsoid({4, 3, 2, 1})); });
  expect_error(ErrorKind::InvalidMultiplicities, [] { special_point_1_n2_1(make_ellipsoid({3, 3, 2, 1})); });
}

TEST(SpecialPoint, IsSelfFocalAndIsolated) {
  const Ellipsoid e = make_ellipsoid({3, 2, 2, 1});
  const Vec u = special_point_1_n2_1(e);
  const ScanReport r = self_focality_scan(e, u, 24);
  EXPECT_EQ(r.verdict, Verdict::SelfFocalEvidence);
  EXPECT_LT(r.relative_spread, 1e-6);
  // Nearby geodesics come back close to the moved point on the first lap
  // (misses of order 0.1) but never within the radius; a few directions
  // come closest on the second lap, which is what separates the times.
  const Vec moved = project_to_ellipsoid(e, u + 0.05 * random_unit_tangent(e, u, 1));
  const ScanReport m = self_focality_scan(e, moved, 64);
  EXPECT_EQ(m.returned_count, 0);
  EXPECT_GT(m.max_miss, 10 * m.return_radius);
  EXPECT_EQ(m.verdict, Verdict::NotSelfFocal);
}

TEST(Isometry, MatrixAndValidation) {
  const Ellipsoid e = make_ellipsoid({3, 2, 2, 1});
  const Mat g = isometry_matrix(e, {{1, 2, kPi / 3}});
  EXPECT_NO_THROW(check_isometry(e, g));
  EXPECT_NEAR(g(1, 1), 0.5, 1e-15);
  expect_error(ErrorKind::InvalidIsometry, [&] { isometry_matrix(e, {{0, 1, 0.3}}); });
  Mat bad = Mat::Identity(4, 4);
  bad(0, 3) = 0.1;
  expect_error(ErrorKind::InvalidIsometry, [&] { check_isometry(e, bad); });
}

TEST(Isometry, SphereRotationAgrees) {
  const Ellipsoid e = make_ellipsoid({1, 1, 1});
  const Mat g = isometry_matrix(e, {{0, 1, 0.7}, {1, 2, -1.1}});
  const IsometryOrbitReport r = isometry_orbit_check(e, random_point(e, 2), g, 8);
  EXPECT_TRUE(r.agrees);
}

TEST(Isometry, OrbitOfSpecialPointAndGenericPoint) {
  const Ellipsoid e = make_ellipsoid({3, 2, 2, 1});
  const Mat g = isometry_matrix(e, {{1, 2, kPi / 3}});
  const Vec u = special_point_1_n2_1(e);
  EXPECT_LT((g * u - u).norm(), 1e-15);
  const IsometryOrbitReport at_u = isometry_orbit_check(e, u, g, 8);
  EXPECT_TRUE(at_u.agrees);
  EXPECT_EQ(at_u.at_x0.verdict, Verdict::SelfFocalEvidence);

  const IsometryOrbitReport generic = isometry_orbit_check(e, random_point(e, 8), g, 8);
  EXPECT_TRUE(generic.verdicts_agree);
  EXPECT_LT(generic.mean_time_difference, 1e-6);
}

TEST(MomentConstancy, UmbilicGenericAndSphere) {
  const Ellipsoid e = make_ellipsoid({3, 2, 1});
  const MomentConstancyReport at_u = moment_constancy_check(e, umbilic_321(), 64);
  EXPECT_LT(at_u.spread, 1e-8);
  EXPECT_NEAR(at_u.mean_eigs(0), 2.0, 1e-8);
  EXPECT_LT(at_u.distance_to_axes(0), 1e-8);

  EXPECT_GT(moment_constancy_check(e, random_point(e, 3), 64).spread, 1e-3);

  const Ellipsoid s = make_ellipsoid({1, 1, 1, 1});
  EXPECT_LT(moment_constancy_check(s, random_point(s, 1), 32).spread, 1e-14);
}

// A point reported self-focal has constant moments that sit on the axes.
TEST(MomentConstancy, HoldsAtSelfFocalPoints) {
  const Ellipsoid e = make_ellipsoid({3, 2, 2, 1});
  const Vec u = special_point_1_n2_1(e);
  const MomentConstancyReport r = moment_constancy_check(e, u, 32);
  EXPECT_LT(r.spread, 1e-6);
  EXPECT_LT(r.distance_to_axes.maxCoeff(), 1e-6);
}

}  // namespace
}  // namespace ellfocal
