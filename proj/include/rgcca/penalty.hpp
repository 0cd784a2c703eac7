#pragma once

// Group-structured linear operators and their Nesterov-smoothed penalties.
//
// A structured penalty is written as Omega(w) = sum_G ||A_G w||_2 where the
// operator A stacks the group blocks A_G row-wise. Smoothing replaces each
// group norm by its mu-regularised dual maximum, which gives a differentiable
// surrogate with gradient A^T alpha* and Lipschitz constant ||A||_2^2 / mu.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rgcca/error.hpp"

namespace rgcca {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Half-open row range [begin, end) of one group inside a LinearOperator.
struct GroupRange {
  Index begin = 0;
  Index end = 0;

  Index size() const { return end - begin; }
};

/// Result of the spectral norm computation. `value` is what the solver uses:
/// the converged power-iteration estimate, or the Holder upper bound
/// sqrt(||A||_1 ||A||_inf) when power iteration did not converge.
struct SpectralNormEstimate {
  double value = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct PowerIterationOptions {
  double tolerance = 1e-6;
  int max_iterations = 10000;
  std::uint64_t seed = 0x5eedULL;
};

namespace detail {

inline double holder_upper_bound(const SparseRowMatrix& a) {
  Vector col_sums = Vector::Zero(a.cols());
  double max_row = 0.0;
  for (Index r = 0; r < a.outerSize(); ++r) {
    double row_sum = 0.0;
    for (SparseRowMatrix::InnerIterator it(a, r); it; ++it) {
      row_sum += std::abs(it.value());
      col_sums[it.col()] += std::abs(it.value());
    }
    max_row = std::max(max_row, row_sum);
  }
  const double max_col = col_sums.size() > 0 ? col_sums.maxCoeff() : 0.0;
  return std::sqrt(max_col * max_row);
}

// Power iteration on A^T A. Stops once the eigen-residual ||Bv - theta v||
// drops below tolerance * theta.
inline SpectralNormEstimate estimate_spectral_norm(const SparseRowMatrix& a,
                                                   const PowerIterationOptions& opts) {
  SpectralNormEstimate est;
  est.upper_bound = holder_upper_bound(a);
  if (a.nonZeros() == 0 || est.upper_bound == 0.0) {
    est.converged = true;
    return est;
  }

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector v(a.cols());
  for (Index i = 0; i < v.size(); ++i) v[i] = unif(rng);
  v.normalize();

  double theta = 0.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Vector av = a * v;
    const Vector bv = a.transpose() * av;
    theta = av.squaredNorm();
    est.iterations = it;
    const double residual = (bv - theta * v).norm();
    if (residual <= opts.tolerance * theta) {
      est.converged = true;
      break;
    }
    const double bv_norm = bv.norm();
    if (bv_norm == 0.0) break;
    v = bv / bv_norm;
  }
  est.lower_bound = std::sqrt(theta);
  est.value = est.converged ? std::min(est.lower_bound, est.upper_bound) : est.upper_bound;
  return est;
}

}  // namespace detail

/// Sparse operator A partitioned into row groups; only the l2 group norm
/// (q = q' = 2) is supported.
class LinearOperator {
 public:
  LinearOperator() = default;

  LinearOperator(SparseRowMatrix rows, std::vector<GroupRange> groups,
                 const PowerIterationOptions& opts = {})
      : rows_(std::move(rows)), groups_(std::move(groups)) {
    rows_.makeCompressed();
    Index expected = 0;
    for (const auto& g : groups_) {
      detail::require(g.begin == expected && g.end > g.begin,
                      "LinearOperator: group ranges must partition the rows without gaps");
      expected = g.end;
    }
    detail::require(expected == rows_.rows(),
                    "LinearOperator: group ranges must cover every row");
    norm_ = detail::estimate_spectral_norm(rows_, opts);
  }

  Index rows() const { return rows_.rows(); }
  Index cols() const { return rows_.cols(); }
  Index num_groups() const { return static_cast<Index>(groups_.size()); }
  const std::vector<GroupRange>& groups() const { return groups_; }
  const SparseRowMatrix& matrix() const { return rows_; }

  double spectral_norm() const { return norm_.value; }
  const SpectralNormEstimate& spectral_norm_estimate() const { return norm_; }

  Vector apply(const Vector& w) const { return rows_ * w; }
  Vector apply_transpose(const Vector& alpha) const { return rows_.transpose() * alpha; }

 private:
  SparseRowMatrix rows_;
  std::vector<GroupRange> groups_;
  SpectralNormEstimate norm_;
};

/// Group l1,2 operator: for each group, a gamma_G-scaled selector of its
/// variables. Groups may overlap, in which case rows are duplicated.
inline LinearOperator build_group_l12(const std::vector<std::vector<Index>>& groups, Index p,
                                      const std::optional<std::vector<double>>& group_weights = {}) {
  detail::require(p >= 1, "build_group_l12: p must be positive");
  detail::require(!groups.empty(), "build_group_l12: at least one group is required");
  if (group_weights) {
    detail::require(group_weights->size() == groups.size(),
                    "build_group_l12: one weight per group is required");
  }

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<GroupRange> ranges;
  Index row = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    detail::require(!groups[g].empty(), "build_group_l12: group " + std::to_string(g) + " is empty");
    const double gamma = group_weights ? (*group_weights)[g] : 1.0;
    detail::require(gamma > 0.0 && std::isfinite(gamma),
                    "build_group_l12: group weights must be positive");
    const Index start = row;
    for (Index idx : groups[g]) {
      detail::require(idx >= 0 && idx < p, "build_group_l12: index " + std::to_string(idx) +
                                               " out of range [0, " + std::to_string(p) + ")");
      triplets.emplace_back(row++, idx, gamma);
    }
    ranges.push_back({start, row});
  }
  SparseRowMatrix a(row, p);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return LinearOperator(std::move(a), std::move(ranges));
}

/// 1D total variation: (p-1) x p first differences, one group per row.
inline LinearOperator build_tv1d(Index p) {
  detail::require(p >= 2, "build_tv1d: p must be at least 2");
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(2 * (p - 1)));
  std::vector<GroupRange> ranges;
  ranges.reserve(static_cast<std::size_t>(p - 1));
  for (Index i = 0; i + 1 < p; ++i) {
    triplets.emplace_back(i, i, -1.0);
    triplets.emplace_back(i, i + 1, 1.0);
    ranges.push_back({i, i + 1});
  }
  SparseRowMatrix a(p - 1, p);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return LinearOperator(std::move(a), std::move(ranges));
}

/// Exact (non-smoothed) penalty sum_G ||A_G w||_2.
inline double penalty_value(const LinearOperator& op, const Vector& w) {
  const Vector aw = op.apply(w);
  double total = 0.0;
  for (const auto& g : op.groups()) total += aw.segment(g.begin, g.size()).norm();
  return total;
}

/// Maximiser of <alpha | Aw> - (mu/2) ||alpha||^2 over the product of unit
/// l2 balls, one per group.
inline Vector alpha_star(const LinearOperator& op, const Vector& w, double mu) {
  detail::require(mu > 0.0, "alpha_star: mu must be positive");
  Vector alpha = op.apply(w) / mu;
  for (const auto& g : op.groups()) {
    auto block = alpha.segment(g.begin, g.size());
    const double norm = block.norm();
    if (norm > 1.0) block /= norm;
  }
  return alpha;
}

inline double smoothed_value(const LinearOperator& op, const Vector& w, double mu) {
  const Vector alpha = alpha_star(op, w, mu);
  return alpha.dot(op.apply(w)) - 0.5 * mu * alpha.squaredNorm();
}

inline Vector smoothed_gradient(const LinearOperator& op, const Vector& w, double mu) {
  return op.apply_transpose(alpha_star(op, w, mu));
}

inline double lipschitz(const LinearOperator& op, double mu) {
  detail::require(mu > 0.0, "lipschitz: mu must be positive");
  const double norm = op.spectral_norm();
  return norm * norm / mu;
}

}  // namespace rgcca
