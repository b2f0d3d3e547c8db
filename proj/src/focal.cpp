#include "ellfocal/focal.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ellfocal/error.hpp"
#include "ellfocal/lax.hpp"
#include "ellfocal/parallel.hpp"

namespace ellfocal {

namespace {

constexpr double kPi = std::numbers::pi;

double radical_inverse(std::uint64_t k, int base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (k > 0) {
    r += f * static_cast<double>(k % static_cast<std::uint64_t>(base));
    k /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

constexpr std::array<int, 12> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

// Unit vector in R^m from the k-th Halton point (1-based to skip the origin).
Vec halton_direction(int m, std::uint64_t k) {
  if (m > 2 * static_cast<int>(kPrimes.size())) throw Error(ErrorKind::UnsupportedDimension, "dimension too large for grid");
  Vec g(m);
  for (int i = 0; i < m; i += 2) {
    const double u1 = std::max(radical_inverse(k, kPrimes[static_cast<size_t>(i)]), 1e-300);
    const double u2 = i + 1 < m ? radical_inverse(k, kPrimes[static_cast<size_t>(i + 1)]) : 0.25;
    const double r = std::sqrt(-2.0 * std::log(u1));
    g(i) = r * std::cos(2.0 * kPi * u2);
    if (i + 1 < m) g(i + 1) = r * std::sin(2.0 * kPi * u2);
  }
  return g.normalized();
}

Vec stack(const Vec& x, const Vec& v) {
  Vec y(2 * x.size());
  y << x, v;
  return y;
}

ReturnEvent to_return_event(const ApproachEvent& ev) { return ReturnEvent{ev.time, ev.v.normalized(), ev.miss}; }

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a;
}

}  // namespace

std::vector<Vec> direction_grid(const Ellipsoid& e, const Vec& x0, int count, const GridOptions& grid) {
  check_on_ellipsoid(e, x0);
  if (count < 0 || grid.random_extra < 0) throw Error(ErrorKind::InvalidInput, "direction counts must be non-negative");
  const Mat frame = tangent_frame(e, x0);
  const int m = static_cast<int>(frame.cols());
  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(count + grid.random_extra));
  const double offset = grid.anchored ? 0.0 : 0.5;
  for (int k = 0; k < count; ++k) {
    Vec c(m);
    if (m == 2) {
      const double th = 2.0 * kPi * (k + offset) / count;
      c << std::cos(th), std::sin(th);
    } else if (m == 3) {
      const double golden = kPi * (3.0 - std::sqrt(5.0));
      const double z = 1.0 - 2.0 * (k + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * k;
      c << r * std::cos(phi), r * std::sin(phi), z;
    } else {
      c = halton_direction(m, static_cast<std::uint64_t>(k) + 1);
    }
    out.push_back((frame * c).normalized());
  }
  for (int k = 0; k < grid.random_extra; ++k) {
    out.push_back(random_unit_tangent(e, x0, grid.seed + static_cast<std::uint64_t>(k)));
  }
  return out;
}

double circle_angle(const Ellipsoid& e, const Vec& x0, const Vec& xi) {
  if (e.dim() != 3) throw Error(ErrorKind::UnsupportedDimension, "circle angles need n = 3");
  const Mat frame = tangent_frame(e, x0);
  return std::atan2(frame.col(1).dot(xi), frame.col(0).dot(xi));
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::SelfFocalEvidence:
      return "self-focal-evidence";
    case Verdict::NotSelfFocal:
      return "not-self-focal";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

IntegratorOptions resolve_scan_integrator(const Ellipsoid& e, const IntegratorOptions& opts) {
  IntegratorOptions o = opts;
  if (o.t_max == 0.0) o.t_max = 4.0 * kPi * e.max_semi_axis();
  validate(o);
  return o;
}

double resolve_return_radius(const Ellipsoid& e, double radius) {
  if (radius == 0.0) return default_return_radius(e);
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidInput, "return radius must be positive");
  return radius;
}

double DirectionResult::representative_time() const {
  if (first_return) return first_return->return_time;
  if (closest) return closest->return_time;
  return std::numeric_limits<double>::quiet_NaN();
}

double DirectionResult::representative_miss() const {
  if (first_return) return first_return->miss_distance;
  if (closest) return closest->miss_distance;
  return std::numeric_limits<double>::quiet_NaN();
}

double DirectionResult::angular_deviation() const {
  const ReturnEvent* ev = first_return ? &*first_return : (closest ? &*closest : nullptr);
  if (!ev) return std::numeric_limits<double>::quiet_NaN();
  return angle_between(direction, ev->terminal_direction);
}

ScanReport self_focality_scan(const Ellipsoid& e, const Vec& x0, int num_directions, const ScanOptions& opts) {
  if (num_directions < 8) throw Error(ErrorKind::InvalidInput, "a scan needs at least 8 directions");
  return self_focality_scan(e, x0, direction_grid(e, x0, num_directions, opts.grid), opts);
}

ScanReport self_focality_scan(const Ellipsoid& e, const Vec& x0, const std::vector<Vec>& directions,
                              const ScanOptions& opts) {
  check_on_ellipsoid(e, x0);
  if (directions.empty()) throw Error(ErrorKind::InvalidInput, "no scan directions");
  for (const auto& d : directions) check_phase_point(e, PhasePoint{x0, d});

  ScanReport rep;
  rep.base_point = x0;
  rep.directions = directions;
  rep.integrator = resolve_scan_integrator(e, opts.integrator);
  rep.return_radius = resolve_return_radius(e, opts.return_radius);
  rep.focal_tol = opts.focal_tol;
  rep.separation_tol = opts.separation_tol;
  rep.grid = opts.grid;
  rep.results.resize(directions.size());

  ApproachOptions aopts;
  aopts.return_radius = rep.return_radius;
  aopts.max_events = 1;
  aopts.track_closest = true;
  const GeodesicSystem sys(e);
  parallel_for(static_cast<int>(directions.size()), opts.threads, [&](int k) {
    DirectionResult& r = rep.results[static_cast<size_t>(k)];
    r.direction = directions[static_cast<size_t>(k)];
    try {
      const ApproachResult ar = find_approaches(sys, stack(x0, r.direction), x0, rep.integrator, aopts);
      if (!ar.events.empty()) r.first_return = to_return_event(ar.events.front());
      if (ar.closest) r.closest = to_return_event(*ar.closest);
      if (!r.first_return && !r.closest) r.detail = "no approach to the base point before t_max";
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::IntegrationFailure) throw;
      r.integration_failed = true;
      r.detail = err.what();
    }
  });

  std::vector<double> times;
  int unusable = 0;
  for (const auto& r : rep.results) {
    if (r.returned()) ++rep.returned_count;
    const double t = r.representative_time();
    if (r.integration_failed || std::isnan(t)) {
      ++unusable;
      continue;
    }
    times.push_back(t);
    rep.max_miss = std::max(rep.max_miss, r.representative_miss());
  }
  std::ostringstream detail;
  if (times.empty()) {
    rep.verdict = Verdict::Inconclusive;
    rep.detail = "no direction produced a usable approach time";
    return rep;
  }
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  double sum = 0.0;
  for (double t : times) sum += t;
  rep.mean_time = sum / static_cast<double>(times.size());
  rep.time_spread = *hi - *lo;
  rep.relative_spread = rep.time_spread / rep.mean_time;

  const int n_dir = static_cast<int>(directions.size());
  if (rep.returned_count == n_dir && rep.relative_spread < rep.focal_tol) {
    rep.verdict = Verdict::SelfFocalEvidence;
  } else if (rep.relative_spread > rep.separation_tol) {
    rep.verdict = Verdict::NotSelfFocal;
  } else {
    rep.verdict = Verdict::Inconclusive;
  }
  detail << rep.returned_count << " of " << n_dir << " directions returned within " << rep.return_radius;
  if (rep.returned_count < n_dir) detail << "; closest approaches used for the rest";
  if (unusable > 0) detail << "; " << unusable << " directions unusable";
  rep.detail = detail.str();
  return rep;
}

namespace {

ReturnMapSample map_direction(const Ellipsoid& e, const Vec& x0, double t_common, const Vec& xi,
                              const IntegratorOptions& integ, double radius) {
  ApproachOptions aopts;
  aopts.return_radius = radius;
  aopts.track_closest = true;
  const ApproachResult ar = find_approaches(GeodesicSystem(e), stack(x0, xi), x0, integ, aopts);
  ReturnMapSample s;
  s.initial_direction = xi;
  const ApproachEvent* pick = nullptr;
  for (const auto& ev : ar.events)
    if (!pick || std::abs(ev.time - t_common) < std::abs(pick->time - t_common)) pick = &ev;
  if (!pick) {
    s.flagged = true;
    if (!ar.closest) throw Error(ErrorKind::NumericalFailure, "no approach to the base point while mapping a direction");
    pick = &*ar.closest;
  }
  s.terminal_direction = pick->v.normalized();
  s.return_time = pick->time;
  s.miss_distance = pick->miss;
  s.angular_deviation = angle_between(xi, s.terminal_direction);
  return s;
}

IntegratorOptions map_integrator(const ReturnMapOptions& opts, double t_common) {
  if (!(t_common > 0.0)) throw Error(ErrorKind::InvalidInput, "common return time must be positive");
  IntegratorOptions o = opts.integrator;
  o.t_max = 1.05 * t_common;
  validate(o);
  return o;
}

}  // namespace

std::vector<ReturnMapSample> return_map(const Ellipsoid& e, const Vec& x0, double t_common,
                                        const std::vector<Vec>& grid, const ReturnMapOptions& opts) {
  check_on_ellipsoid(e, x0);
  const IntegratorOptions integ = map_integrator(opts, t_common);
  const double radius = resolve_return_radius(e, opts.return_radius);
  for (const auto& d : grid) check_phase_point(e, PhasePoint{x0, d});
  std::vector<ReturnMapSample> out(grid.size());
  parallel_for(static_cast<int>(grid.size()), opts.threads, [&](int k) {
    out[static_cast<size_t>(k)] = map_direction(e, x0, t_common, grid[static_cast<size_t>(k)], integ, radius);
  });
  return out;
}

int count_fixed_directions(const std::vector<ReturnMapSample>& samples, double tol) {
  int c = 0;
  for (const auto& s : samples)
    if (!s.flagged && s.angular_deviation < tol) ++c;
  return c;
}

namespace {

// Orthonormal basis (columns) of the complement of xi inside T_{x0}E.
Mat sphere_tangent_basis(const Ellipsoid& e, const Vec& x0, const Vec& xi) {
  const Mat frame = tangent_frame(e, x0);
  const Vec c = frame.transpose() * xi;
  const int m = static_cast<int>(frame.cols());
  // Householder reflection sending c to e_1; its other columns span c-perp.
  Eigen::HouseholderQR<Mat> qr(c);
  const Mat q = qr.householderQ() * Mat::Identity(m, m);
  return frame * q.rightCols(m - 1);
}

// Rotation in span{from, to} taking `from` onto `to`, applied to v.
Vec rotate_onto(const Vec& from, const Vec& to, const Vec& v) {
  const double c = std::clamp(from.dot(to), -1.0, 1.0);
  Vec w = to - c * from;
  const double s = w.norm();
  if (s < 1e-15) return v;
  w /= s;
  const double a = from.dot(v);
  const double b = w.dot(v);
  // In the plane: from -> c from + s w, w -> -s from + c w.
  return v + (c - 1.0) * (a * from + b * w) + s * (a * w - b * from);
}

Mat stencil_jacobian(const Ellipsoid& e, const Vec& x0, double t_common, const Vec& xi, const Mat& basis,
                     const Vec& phi_xi, double h, const IntegratorOptions& integ, double radius, bool& flagged) {
  const int m = static_cast<int>(basis.cols());
  Mat jac(m, m);
  for (int c = 0; c < m; ++c) {
    const Vec plus = std::cos(h) * xi + std::sin(h) * basis.col(c);
    const Vec minus = std::cos(h) * xi - std::sin(h) * basis.col(c);
    const ReturnMapSample sp = map_direction(e, x0, t_common, plus.normalized(), integ, radius);
    const ReturnMapSample sm = map_direction(e, x0, t_common, minus.normalized(), integ, radius);
    flagged = flagged || sp.flagged || sm.flagged;
    const Vec d = (sp.terminal_direction - sm.terminal_direction) / (2.0 * h);
    const Vec back = rotate_onto(phi_xi, xi, d);
    jac.col(c) = basis.transpose() * back;
  }
  return jac;
}

void finish_sample(TwistSample& s) {
  const int m = static_cast<int>(s.jacobian.rows());
  const Mat shifted = s.jacobian - Mat::Identity(m, m);
  s.det_minus_identity = shifted.determinant();
  Eigen::EigenSolver<Mat> es(s.jacobian, false);
  s.eigenvalues.clear();
  s.distance_from_one = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    const std::complex<double> mu = es.eigenvalues()(i);
    s.eigenvalues.push_back(mu);
    s.distance_from_one = std::min(s.distance_from_one, std::abs(mu - 1.0));
  }
}

void summarize(TwistReport& rep, double untwisted_tol) {
  rep.min_distance = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < rep.samples.size(); ++k) {
    rep.min_distance = std::min(rep.min_distance, rep.samples[k].distance_from_one);
    if (std::abs(rep.samples[k].det_minus_identity) < untwisted_tol) rep.untwisted.push_back(static_cast<int>(k));
  }
}

}  // namespace

TwistReport twistedness_report(const Ellipsoid& e, const Vec& x0, double t_common, const std::vector<Vec>& probes,
                               const TwistOptions& opts) {
  check_on_ellipsoid(e, x0);
  if (!(opts.step > 0.0 && opts.step < 0.1)) throw Error(ErrorKind::InvalidInput, "twist step must lie in (0, 0.1)");
  const IntegratorOptions integ = map_integrator(opts.map, t_common);
  const double radius = resolve_return_radius(e, opts.map.return_radius);
  TwistReport rep;
  rep.step = opts.step;
  rep.samples.resize(probes.size());
  parallel_for(static_cast<int>(probes.size()), opts.map.threads, [&](int k) {
    const Vec& xi = probes[static_cast<size_t>(k)];
    check_phase_point(e, PhasePoint{x0, xi});
    TwistSample& s = rep.samples[static_cast<size_t>(k)];
    s.direction = xi;
    const ReturnMapSample center = map_direction(e, x0, t_common, xi, integ, radius);
    const Mat basis = sphere_tangent_basis(e, x0, xi);
    bool flagged = center.flagged;
    s.jacobian = stencil_jacobian(e, x0, t_common, xi, basis, center.terminal_direction, opts.step, integ, radius,
                                  flagged);
    const Mat half = stencil_jacobian(e, x0, t_common, xi, basis, center.terminal_direction, 0.5 * opts.step, integ,
                                      radius, flagged);
    const double scale = std::max(1.0, s.jacobian.norm());
    s.insufficient_resolution = flagged || (s.jacobian - half).norm() > 1e-3 * scale;
    // Richardson combination of the two central stencils.
    s.jacobian = (4.0 * half - s.jacobian) / 3.0;
    finish_sample(s);
  });
  summarize(rep, opts.untwisted_tol);
  return rep;
}

TwistReport twistedness_report(const Ellipsoid& e, const Vec& x0, const std::vector<ReturnMapSample>& circle) {
  if (e.dim() != 3) throw Error(ErrorKind::UnsupportedDimension, "sampled twistedness needs a circle of directions");
  const int m = static_cast<int>(circle.size());
  if (m < 8) throw Error(ErrorKind::InsufficientResolution, "fewer than 8 circle samples");
  std::vector<double> theta(static_cast<size_t>(m)), image(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) {
    theta[static_cast<size_t>(k)] = circle_angle(e, x0, circle[static_cast<size_t>(k)].initial_direction);
    image[static_cast<size_t>(k)] = circle_angle(e, x0, circle[static_cast<size_t>(k)].terminal_direction);
  }
  TwistReport rep;
  rep.samples.resize(static_cast<size_t>(m));
  double step = 0.0;
  for (int k = 0; k < m; ++k) {
    const size_t prev = static_cast<size_t>((k + m - 1) % m);
    const size_t next = static_cast<size_t>((k + 1) % m);
    const double d_in = wrap_angle(theta[next] - theta[prev]);
    const double d_out_fwd = wrap_angle(image[next] - image[static_cast<size_t>(k)]);
    const double d_out_bwd = wrap_angle(image[static_cast<size_t>(k)] - image[prev]);
    if (std::abs(d_out_fwd) > 0.5 || std::abs(d_out_bwd) > 0.5) {
      std::ostringstream os;
      os << "terminal angle jumps by more than 0.5 rad near sample " << k;
      throw Error(ErrorKind::InsufficientResolution, os.str());
    }
    step = std::max(step, 0.5 * std::abs(d_in));
    TwistSample& s = rep.samples[static_cast<size_t>(k)];
    s.direction = circle[static_cast<size_t>(k)].initial_direction;
    s.jacobian = Mat::Constant(1, 1, (d_out_fwd + d_out_bwd) / d_in);
    s.insufficient_resolution = circle[static_cast<size_t>(k)].flagged;
    finish_sample(s);
  }
  rep.step = step;
  summarize(rep, 1e-3);
  return rep;
}

UmbilicPoints umbilic_points_2d(const std::vector<double>& alphas3) {
  if (alphas3.size() != 3) throw Error(ErrorKind::InvalidInput, "umbilic_points_2d takes three axes");
  const Ellipsoid e = Ellipsoid::make(alphas3);
  if (!e.all_distinct()) throw Error(ErrorKind::NoUmbilicFound, "repeated axes: umbilics are not isolated points");
  const int imin = e.permutation()[0];
  const int imid = e.permutation()[1];
  const int imax = e.permutation()[2];
  const double amax = alphas3[static_cast<size_t>(imax)];
  const double amid = alphas3[static_cast<size_t>(imid)];
  const double amin = alphas3[static_cast<size_t>(imin)];

  // On the slice through the largest and smallest axes one principal
  // direction is the middle axis; compare its curvature with the slice one.
  auto curvature_gap = [&](double s) {
    const double tx = -std::sqrt(amax) * std::sin(s);
    const double tz = std::sqrt(amin) * std::cos(s);
    return 1.0 / amid - (tx * tx / amax + tz * tz / amin) / (tx * tx + tz * tz);
  };
  double lo = 0.0;
  double hi = 0.5 * kPi;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (curvature_gap(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double s = 0.5 * (lo + hi);
  const double xmax = std::sqrt(amax) * std::cos(s);
  const double xmin = std::sqrt(amin) * std::sin(s);

  UmbilicPoints out;
  const std::array<std::array<double, 2>, 4> signs{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
  for (size_t k = 0; k < 4; ++k) {
    Vec p = Vec::Zero(3);
    p(imax) = signs[k][0] * xmax;
    p(imin) = signs[k][1] * xmin;
    p = project_to_ellipsoid(e, p);
    out.points[k] = p;
    out.max_defect = std::max(out.max_defect, shape_operator(e, p).umbilic_defect);
    out.max_constraint_residual = std::max(out.max_constraint_residual, e.constraint_residual(p));
  }
  if (out.max_defect > 1e-8) {
    std::ostringstream os;
    os << "umbilic defect minimum " << out.max_defect << " exceeds 1e-8";
    throw Error(ErrorKind::NoUmbilicFound, os.str());
  }
  const double cmax = std::sqrt(amax * (amax - amid) / (amax - amin));
  const double cmin = std::sqrt(amin * (amid - amin) / (amax - amin));
  out.closed_form_discrepancy = std::hypot(out.points[0](imax) - cmax, out.points[0](imin) - cmin);
  return out;
}

namespace {

std::vector<double> slice_alphas(const Ellipsoid& e, const std::vector<int>& indices) {
  if (indices.size() < 2) throw Error(ErrorKind::InvalidInput, "a slice needs at least two indices");
  std::vector<bool> seen(static_cast<size_t>(e.dim()), false);
  std::vector<double> out;
  for (int i : indices) {
    if (i < 0 || i >= e.dim()) throw Error(ErrorKind::InvalidInput, "slice index out of range");
    if (seen[static_cast<size_t>(i)]) throw Error(ErrorKind::InvalidInput, "repeated slice index");
    seen[static_cast<size_t>(i)] = true;
    out.push_back(e.alphas()(i));
  }
  return out;
}

}  // namespace

SliceEmbedding::SliceEmbedding(Ellipsoid ambient, std::vector<int> indices)
    : ambient_(std::move(ambient)),
      indices_(std::move(indices)),
      slice_(Ellipsoid::make_slice(slice_alphas(ambient_, indices_), ambient_.constraint_tol())) {}

Vec SliceEmbedding::embed(const Vec& y) const {
  if (y.size() != static_cast<Eigen::Index>(indices_.size()))
    throw Error(ErrorKind::InvalidInput, "slice vector has the wrong dimension");
  Vec x = Vec::Zero(ambient_.dim());
  for (size_t k = 0; k < indices_.size(); ++k) x(indices_[k]) = y(static_cast<Eigen::Index>(k));
  return x;
}

Vec SliceEmbedding::restrict(const Vec& x) const {
  if (x.size() != ambient_.dim()) throw Error(ErrorKind::InvalidInput, "ambient vector has the wrong dimension");
  Vec y(static_cast<Eigen::Index>(indices_.size()));
  for (size_t k = 0; k < indices_.size(); ++k) y(static_cast<Eigen::Index>(k)) = x(indices_[k]);
  return y;
}

SliceEmbedding embed_slice(const Ellipsoid& e, const std::vector<int>& indices) { return SliceEmbedding(e, indices); }

std::vector<Vec> slice_umbilic_candidates(const Ellipsoid& e) {
  std::vector<Vec> out;
  const int n = e.dim();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c) {
        const std::vector<int> idx{a, b, c};
        const SliceEmbedding emb = embed_slice(e, idx);
        if (!emb.slice().all_distinct()) continue;
        const UmbilicPoints u = umbilic_points_2d(slice_alphas(e, idx));
        for (const auto& p : u.points) out.push_back(emb.embed(p));
      }
  return out;
}

Vec special_point_1_n2_1(const Ellipsoid& e) {
  const auto& mult = e.multiplicities();
  if (mult.size() != 3 || mult[0] != 1 || mult[2] != 1) {
    std::ostringstream os;
    os << "multiplicities (";
    for (size_t k = 0; k < mult.size(); ++k) os << (k ? "," : "") << mult[k];
    os << ") are not of the form (1, n-2, 1)";
    throw Error(ErrorKind::InvalidMultiplicities, os.str());
  }
  const auto& d = e.distinct_alphas();
  const UmbilicPoints u = umbilic_points_2d({d[2], d[1], d[0]});
  Vec p = Vec::Zero(e.dim());
  p(e.blocks()[2][0]) = u.points[0](0);
  p(e.blocks()[0][0]) = u.points[0](2);
  return project_to_ellipsoid(e, p);
}

Mat isometry_matrix(const Ellipsoid& e, const std::vector<BlockRotation>& rotations) {
  const int n = e.dim();
  Mat g = Mat::Identity(n, n);
  for (const auto& r : rotations) {
    if (r.i < 0 || r.j < 0 || r.i >= n || r.j >= n || r.i == r.j)
      throw Error(ErrorKind::InvalidIsometry, "rotation plane indices out of range");
    if (e.block_of(r.i) != e.block_of(r.j)) {
      std::ostringstream os;
      os << "plane (" << r.i << "," << r.j << ") mixes different axes";
      throw Error(ErrorKind::InvalidIsometry, os.str());
    }
    Mat q = Mat::Identity(n, n);
    q(r.i, r.i) = q(r.j, r.j) = std::cos(r.angle);
    q(r.i, r.j) = -std::sin(r.angle);
    q(r.j, r.i) = std::sin(r.angle);
    g = q * g;
  }
  return g;
}

void check_isometry(const Ellipsoid& e, const Mat& g) {
  const int n = e.dim();
  if (g.rows() != n || g.cols() != n) throw Error(ErrorKind::InvalidIsometry, "isometry has the wrong shape");
  const double orth = (g.transpose() * g - Mat::Identity(n, n)).norm();
  const Mat a = e.alphas().asDiagonal();
  const double comm = (g * a - a * g).norm() / e.sorted_alphas().maxCoeff();
  if (orth > 1e-12 * n || comm > 1e-12 * n) {
    std::ostringstream os;
    os << "not a block rotation: orthogonality defect " << orth << ", commutator " << comm;
    throw Error(ErrorKind::InvalidIsometry, os.str());
  }
}

IsometryOrbitReport isometry_orbit_check(const Ellipsoid& e, const Vec& x0, const Mat& g, int num_directions,
                                         const ScanOptions& opts) {
  check_isometry(e, g);
  check_on_ellipsoid(e, x0);
  const std::vector<Vec> dirs = direction_grid(e, x0, num_directions, opts.grid);
  std::vector<Vec> moved;
  moved.reserve(dirs.size());
  for (const auto& d : dirs) moved.push_back(g * d);
  IsometryOrbitReport rep;
  rep.at_x0 = self_focality_scan(e, x0, dirs, opts);
  rep.at_gx0 = self_focality_scan(e, project_to_ellipsoid(e, g * x0), moved, opts);
  rep.mean_time_difference = std::abs(rep.at_x0.mean_time - rep.at_gx0.mean_time);
  for (size_t k = 0; k < dirs.size(); ++k) {
    const double d = std::abs(rep.at_x0.results[k].representative_time() - rep.at_gx0.results[k].representative_time());
    rep.max_time_difference = std::max(rep.max_time_difference, d);
  }
  rep.verdicts_agree = rep.at_x0.verdict == rep.at_gx0.verdict;
  rep.agrees = rep.verdicts_agree && rep.mean_time_difference < 1e-6;
  return rep;
}

MomentConstancyReport moment_constancy_check(const Ellipsoid& e, const Vec& x0, int num_directions,
                                             const GridOptions& grid) {
  const std::vector<Vec> dirs = direction_grid(e, x0, num_directions, grid);
  if (dirs.empty()) throw Error(ErrorKind::InvalidInput, "no directions");
  MomentConstancyReport rep;
  rep.directions = static_cast<int>(dirs.size());
  Vec emin, emax, lmin, lmax, lsum;
  for (const auto& d : dirs) {
    const MomentValue mv = moment_map(e, x0, d);
    rep.any_degeneracy_anomaly = rep.any_degeneracy_anomaly || mv.degeneracy_anomaly;
    if (emin.size() == 0) {
      emin = emax = mv.e;
      lmin = lmax = lsum = mv.eigs;
      continue;
    }
    if (mv.e.size() != emin.size()) {
      rep.any_degeneracy_anomaly = true;
      continue;
    }
    emin = emin.cwiseMin(mv.e);
    emax = emax.cwiseMax(mv.e);
    lmin = lmin.cwiseMin(mv.eigs);
    lmax = lmax.cwiseMax(mv.eigs);
    lsum += mv.eigs;
  }
  rep.spread = emin.size() ? (emax - emin).maxCoeff() : 0.0;
  rep.mean_eigs = lsum / static_cast<double>(dirs.size());
  rep.eig_spread = lmax - lmin;
  rep.distance_to_axes.resize(rep.mean_eigs.size());
  for (Eigen::Index j = 0; j < rep.mean_eigs.size(); ++j)
    rep.distance_to_axes(j) = (e.sorted_alphas().array() - rep.mean_eigs(j)).abs().minCoeff();
  return rep;
}

}  // namespace ellfocal
