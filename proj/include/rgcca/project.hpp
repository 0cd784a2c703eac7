#pragma once

// Projections onto the per-block feasible set W = P ∩ S, with
//   P = { x : ||x||_1 <= s }            (l1 ball)
//   S = { x : x^T M x <= c }            (RGCCA ellipsoid)

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "rgcca/core.hpp"
#include "rgcca/error.hpp"

namespace rgcca {

inline Vector soft_threshold(const Vector& x, double lambda) {
  detail::require(lambda >= 0.0, "soft_threshold: lambda must be nonnegative");
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double v = x[i];
    out[i] = v > lambda ? v - lambda : (v < -lambda ? v + lambda : 0.0);
  }
  return out;
}

struct L1Projection {
  Vector point;
  double lambda = 0.0;  // threshold used; 0 when x was already inside the ball
  bool active = false;
};

/// Euclidean projection onto the l1 ball of radius s. The threshold solves
/// sum_i (|x_i| - lambda)_+ = s, found by locating the breakpoint interval
/// among the sorted |x_i| and interpolating linearly inside it.
inline L1Projection project_l1_report(const Vector& x, double s) {
  detail::require(s > 0.0, "project_l1: radius s must be positive");
  L1Projection result;
  const double norm1 = x.lpNorm<1>();
  if (norm1 <= s) {
    result.point = x;
    return result;
  }
  std::vector<double> mags(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(x[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());

  // On [mags[j], mags[j-1]] the residual is (cumsum_j - s) - j * lambda.
  double cumsum = 0.0;
  double lambda = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    cumsum += mags[j];
    const double candidate = (cumsum - s) / static_cast<double>(j + 1);
    const double next = j + 1 < mags.size() ? mags[j + 1] : 0.0;
    if (candidate >= next) {
      lambda = candidate;
      break;
    }
  }
  result.lambda = lambda;
  result.point = soft_threshold(x, lambda);
  result.active = true;
  return result;
}

inline Vector project_l1(const Vector& x, double s) { return project_l1_report(x, s).point; }

/// Ellipsoid { y : y^T M y <= c } with M held implicitly through a block SVD.
struct EllipsoidSpec {
  ConstraintMatrix m;
  double c = 1.0;

  EllipsoidSpec() = default;
  EllipsoidSpec(ConstraintMatrix matrix, double radius) : m(std::move(matrix)), c(radius) {
    detail::require(c > 0.0, "EllipsoidSpec: radius c must be positive");
  }
  EllipsoidSpec(const Block& block, double tau, double radius = 1.0)
      : EllipsoidSpec(ConstraintMatrix(block, tau), radius) {}
};

struct NewtonOptions {
  double tolerance = 5e-16;  // on |gamma_{s+1} - gamma_s|
  int max_iterations = 200;
};

struct EllipsoidProjection {
  Vector point;
  double gamma = 0.0;
  int iterations = 0;
  double last_step = 0.0;
  bool interior = false;
  bool converged = true;
  std::vector<double> gamma_trace;  // Newton iterates, gamma^(0) = 0 first
  std::vector<double> f_trace;      // f(gamma^(s)) for each iterate
};

/// Projection onto the ellipsoid via the Lagrange multiplier gamma of
/// y = (I + 2 gamma M)^{-1} x. gamma is the root of
///   f(gamma) = sum_i xt_i^2 lambda_i / (1 + 2 gamma lambda_i)^2 - c,
/// where the p - r eigenvalues beyond the SVD rank all equal tau and are
/// accounted for through the tail mass ||x||^2 - sum_{i<=r} xt_i^2.
inline EllipsoidProjection project_ellipsoid_report(const Vector& x, const EllipsoidSpec& e,
                                                    const NewtonOptions& opts = {}) {
  const ConstraintMatrix& m = e.m;
  detail::require(x.size() == m.dimension(), "project_ellipsoid: dimension mismatch");
  const Matrix& v = m.svd().right_vectors;
  const Vector lambdas = m.leading_eigenvalues();
  const double tau = m.tail_eigenvalue();
  if (tau == 0.0 && (lambdas.size() == 0 || lambdas.maxCoeff() == 0.0)) {
    throw InvalidArgument("project_ellipsoid: constraint matrix M is zero (tau = 0 and X = 0)");
  }

  const Vector coords = v.transpose() * x;
  const Vector coords_sq = coords.array().square().matrix();
  const double tail_mass =
      m.tail_multiplicity() > 0 ? std::max(x.squaredNorm() - coords_sq.sum(), 0.0) : 0.0;

  EllipsoidProjection result;
  const double quad0 = coords_sq.dot(lambdas) + tau * tail_mass;
  if (quad0 <= e.c) {
    result.point = x;
    result.interior = true;
    return result;
  }

  // f and f' are accumulated in extended precision: near the root their
  // rounding error in double would move gamma by about half an ulp, which
  // leaves Newton oscillating between neighbouring doubles.
  using Wide = long double;
  auto f = [&](double gamma) {
    Wide sum = 0;
    for (Index i = 0; i < lambdas.size(); ++i) {
      const Wide d = 1 + 2 * static_cast<Wide>(gamma) * lambdas[i];
      sum += static_cast<Wide>(coords_sq[i]) * lambdas[i] / (d * d);
    }
    const Wide t = 1 + 2 * static_cast<Wide>(gamma) * tau;
    return sum + static_cast<Wide>(tau) / (t * t) * tail_mass - static_cast<Wide>(e.c);
  };
  auto df = [&](double gamma) {
    Wide sum = 0;
    for (Index i = 0; i < lambdas.size(); ++i) {
      const Wide d = 1 + 2 * static_cast<Wide>(gamma) * lambdas[i];
      sum += static_cast<Wide>(coords_sq[i]) * lambdas[i] * lambdas[i] / (d * d * d);
    }
    const Wide t = 1 + 2 * static_cast<Wide>(gamma) * tau;
    return -4 * sum - 4 * static_cast<Wide>(tau) * tau / (t * t * t) * tail_mass;
  };

  double gamma = 0.0;
  Wide fval = static_cast<Wide>(quad0) - static_cast<Wide>(e.c);
  result.gamma_trace.push_back(gamma);
  result.f_trace.push_back(static_cast<double>(fval));
  result.converged = false;
  int stalled = 0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Wide slope = df(gamma);
    if (slope == 0) break;
    const double next = static_cast<double>(gamma - fval / slope);
    result.last_step = std::abs(next - gamma);
    result.iterations = it;
    gamma = next;
    fval = f(gamma);
    result.gamma_trace.push_back(gamma);
    result.f_trace.push_back(static_cast<double>(fval));
    if (result.last_step < opts.tolerance) {
      result.converged = true;
      break;
    }
    // Steps of a few ulps that keep recurring mean gamma is as exact as a
    // double can hold it.
    const double ulp = std::nextafter(gamma, std::numeric_limits<double>::infinity()) - gamma;
    stalled = result.last_step <= 4.0 * ulp ? stalled + 1 : 0;
    if (stalled >= 3) {
      result.converged = true;
      break;
    }
  }
  result.gamma = gamma;

  const Eigen::ArrayXd shrink = 1.0 / (1.0 + 2.0 * gamma * lambdas.array());
  const Vector in_span = v * coords;
  result.point = v * (coords.array() * shrink).matrix() + (x - in_span) / (1.0 + 2.0 * gamma * tau);
  return result;
}

inline Vector project_ellipsoid(const Vector& x, const EllipsoidSpec& e) {
  return project_ellipsoid_report(x, e).point;
}

struct ProjectionReport {
  Vector point;
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
  bool l1_active = false;
  bool ellipsoid_active = false;
};

/// Dykstra's alternating projection onto P ∩ S. Stops when the iterate is
/// within eps of both sets (max of the two set distances) and the correction
/// vectors p, q changed by at most eps during the last cycle. Their increments
/// are x^{s-1} - y^s and y^s - x^s, so both vanish only at a fixed point, which
/// is the projection of x0. Feasibility alone is not enough: an iterate can lie
/// in both sets, and even repeat for a cycle, while still far from the
/// projection.
template <class ProjP, class ProjS>
ProjectionReport dykstra(const Vector& x0, ProjP&& proj_p, ProjS&& proj_s, double eps,
                         int max_iter) {
  detail::require(eps > 0.0, "dykstra: eps must be positive");
  detail::require(max_iter >= 1, "dykstra: max_iter must be positive");
  ProjectionReport report;
  Vector x = x0;
  Vector p = Vector::Zero(x0.size());
  Vector q = Vector::Zero(x0.size());
  report.converged = false;
  for (int s = 1; s <= max_iter; ++s) {
    const Vector y = proj_p(x + p);
    const double dp = (x - y).norm();
    p = x + p - y;
    Vector x_next = proj_s(y + q);
    const double dq = (y - x_next).norm();
    q = y + q - x_next;
    x = std::move(x_next);
    report.iterations = s;
    report.residual = std::max((x - proj_p(x)).norm(), (x - proj_s(x)).norm());
    if (report.residual <= eps && dp <= eps && dq <= eps) {
      report.converged = true;
      break;
    }
  }
  report.point = std::move(x);
  return report;
}

/// Projection onto W = P ∩ S for one block. Without an l1 radius this is the
/// ellipsoid projection alone. When one exact projection already lands in the
/// other set it is the projection onto the intersection and Dykstra is skipped.
inline ProjectionReport project_W(const Vector& x, const BlockConstraint& constraint,
                                  const EllipsoidSpec& e, double eps, int max_iter = 10000) {
  detail::require(eps > 0.0, "project_W: eps must be positive");
  ProjectionReport report;
  auto finish = [&](ProjectionReport r) {
    const double quad = e.m.quadratic(r.point);
    r.ellipsoid_active = std::abs(quad - e.c) <= 1e-8 * std::max(1.0, e.c);
    if (constraint.s) {
      r.l1_active = std::abs(r.point.lpNorm<1>() - *constraint.s) <= 1e-8 * std::max(1.0, *constraint.s);
    }
    return r;
  };

  if (!constraint.s) {
    report.point = project_ellipsoid(x, e);
    report.iterations = 1;
    return finish(std::move(report));
  }

  const double s = *constraint.s;
  const Vector on_s = project_ellipsoid(x, e);
  if (on_s.lpNorm<1>() <= s) {
    report.point = on_s;
    report.iterations = 1;
    return finish(std::move(report));
  }
  const Vector on_p = project_l1(x, s);
  if (e.m.quadratic(on_p) <= e.c) {
    report.point = on_p;
    report.iterations = 1;
    return finish(std::move(report));
  }
  report = dykstra(
      x, [s](const Vector& z) { return project_l1(z, s); },
      [&e](const Vector& z) { return project_ellipsoid(z, e); }, eps, max_iter);
  return finish(std::move(report));
}

}  // namespace rgcca
