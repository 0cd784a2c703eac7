#pragma once

// Data model for multiblock RGCCA: preprocessed blocks with their cached thin
// SVD, the block design, per-block constraints and penalties, and the smoothed
// objective with its partial gradients under Horst's scheme g(x) = x.

#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "rgcca/error.hpp"
#include "rgcca/penalty.hpp"

namespace rgcca {

/// Thin SVD of a block, X = U diag(sigma) V^T with r = min(n, p) columns.
struct SvdCache {
  Vector singular_values;
  Matrix right_vectors;  // p x r

  Index rank_dimension() const { return singular_values.size(); }
};

/// Record of the column transformation applied to a raw block.
struct Preprocessing {
  bool centered = false;
  bool scaled = false;
  Vector means;  // empty when not centered
  Vector scales;  // empty when not scaled; 1 for constant columns
};

namespace detail {

inline std::shared_ptr<const SvdCache> compute_svd(const Matrix& x) {
  auto cache = std::make_shared<SvdCache>();
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinV);
  cache->singular_values = svd.singularValues();
  cache->right_vectors = svd.matrixV();
  return cache;
}

inline bool all_finite(const Matrix& x) { return x.allFinite(); }

}  // namespace detail

/// One n x p data matrix. Immutable once built; copies share the SVD cache.
class Block {
 public:
  Block() = default;

  explicit Block(Matrix data, Preprocessing preprocessing = {})
      : data_(std::move(data)), preprocessing_(std::move(preprocessing)) {
    detail::require(data_.rows() >= 2, "Block: at least 2 samples are required, got " +
                                           std::to_string(data_.rows()));
    detail::require(data_.cols() >= 1, "Block: at least one variable is required");
    detail::require(detail::all_finite(data_), "Block: data contains non-finite values");
    svd_ = detail::compute_svd(data_);
  }

  const Matrix& data() const { return data_; }
  Index n() const { return data_.rows(); }
  Index p() const { return data_.cols(); }
  const SvdCache& svd() const { return *svd_; }
  std::shared_ptr<const SvdCache> svd_ptr() const { return svd_; }
  const Preprocessing& preprocessing() const { return preprocessing_; }

 private:
  Matrix data_;
  Preprocessing preprocessing_;
  std::shared_ptr<const SvdCache> svd_;
};

/// Centre (and optionally scale to unit sd, 1/(n-1) convention) the columns of
/// a raw matrix. Constant columns are centred to zero and never scaled.
inline Block preprocess(const Matrix& raw, bool center = true, bool scale = false) {
  detail::require(raw.rows() >= 2, "preprocess: at least 2 samples are required");
  detail::require(detail::all_finite(raw), "preprocess: input contains non-finite values");
  Matrix x = raw;
  Preprocessing pp;
  pp.centered = center;
  pp.scaled = scale;
  if (center) {
    pp.means = x.colwise().mean().transpose();
    x.rowwise() -= pp.means.transpose();
  }
  if (scale) {
    const double denom = static_cast<double>(x.rows() - 1);
    pp.scales = Vector::Ones(x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
      const Vector col = x.col(j);
      const double mean = center ? 0.0 : col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / denom);
      // Constant columns (sd at rounding level) keep scale 1.
      if (sd > 1e-12 * (1.0 + std::abs(mean))) {
        pp.scales[j] = sd;
        x.col(j) /= sd;
      }
    }
  }
  return Block(std::move(x), std::move(pp));
}

/// Apply a previously fitted preprocessing record to new rows.
inline Matrix apply_preprocessing(const Matrix& raw, const Preprocessing& pp) {
  Matrix x = raw;
  if (pp.centered) x.rowwise() -= pp.means.transpose();
  if (pp.scaled) x.array().rowwise() /= pp.scales.transpose().array();
  return x;
}

/// Implicit M = tau I + ((1 - tau)/(n - 1)) X^T X, evaluated through the
/// block's thin SVD so that the p x p matrix is never formed.
class ConstraintMatrix {
 public:
  ConstraintMatrix() = default;
  ConstraintMatrix(const Block& block, double tau)
      : tau_(tau), n_(block.n()), p_(block.p()), svd_(block.svd_ptr()) {
    detail::require(tau >= 0.0 && tau <= 1.0, "ConstraintMatrix: tau must lie in [0, 1]");
  }

  double tau() const { return tau_; }
  Index n() const { return n_; }
  Index dimension() const { return p_; }
  const SvdCache& svd() const { return *svd_; }

  double data_weight() const { return (1.0 - tau_) / static_cast<double>(n_ - 1); }

  /// Leading eigenvalues lambda_i for i <= r; the remaining p - r equal tau.
  Vector leading_eigenvalues() const {
    return (data_weight() * svd_->singular_values.array().square() + tau_).matrix();
  }
  double tail_eigenvalue() const { return tau_; }
  Index tail_multiplicity() const { return p_ - svd_->rank_dimension(); }

  Vector apply(const Vector& y) const {
    const Vector coords = svd_->right_vectors.transpose() * y;
    const Vector scaled = (svd_->singular_values.array().square() * coords.array()).matrix();
    return tau_ * y + data_weight() * (svd_->right_vectors * scaled);
  }

  double quadratic(const Vector& y) const {
    const Vector coords = svd_->right_vectors.transpose() * y;
    const double data_term =
        (svd_->singular_values.array().square() * coords.array().square()).sum();
    return tau_ * y.squaredNorm() + data_weight() * data_term;
  }

  /// Dense M, for small problems and tests only.
  Matrix dense() const {
    const Matrix& v = svd_->right_vectors;
    Matrix m = tau_ * Matrix::Identity(p_, p_);
    m += data_weight() * v * svd_->singular_values.array().square().matrix().asDiagonal() *
         v.transpose();
    return m;
  }

 private:
  double tau_ = 1.0;
  Index n_ = 0;
  Index p_ = 0;
  std::shared_ptr<const SvdCache> svd_;
};

inline ConstraintMatrix constraint_matrix(const Block& block, double tau) {
  return ConstraintMatrix(block, tau);
}

/// Symmetric 0/1 adjacency between blocks.
class Design {
 public:
  Design() = default;
  explicit Design(Matrix c) : c_(std::move(c)) { validate(); }

  Index size() const { return c_.rows(); }
  double operator()(Index k, Index j) const { return c_(k, j); }
  const Matrix& matrix() const { return c_; }

  bool connected(Index k) const { return c_.row(k).sum() > 0.0; }

  static Design fully_connected(Index k) {
    Matrix c = Matrix::Ones(k, k);
    c.diagonal().setZero();
    return Design(std::move(c));
  }

 private:
  void validate() const {
    detail::require(c_.rows() == c_.cols() && c_.rows() >= 1, "Design: C must be square");
    std::ostringstream bad;
    bool any_link = false;
    for (Index k = 0; k < c_.rows(); ++k) {
      for (Index j = 0; j < c_.cols(); ++j) {
        const double v = c_(k, j);
        if (v != 0.0 && v != 1.0) bad << " (" << k << "," << j << ") not in {0,1};";
        if (k == j && v != 0.0) bad << " (" << k << "," << j << ") diagonal must be 0;";
        if (j > k && v != c_(j, k)) {
          bad << " (" << k << "," << j << ")=" << v << " vs (" << j << "," << k
              << ")=" << c_(j, k) << " not symmetric;";
        }
        if (k != j && v == 1.0) any_link = true;
      }
    }
    detail::require(bad.str().empty(), "Design: invalid entries:" + bad.str());
    detail::require(any_link, "Design: at least one pair of blocks must be connected");
  }

  Matrix c_;
};

struct BlockConstraint {
  double tau = 1.0;
  std::optional<double> s;  // l1 radius; absent means no l1 constraint
  double c = 1.0;

  void validate() const {
    detail::require(tau >= 0.0 && tau <= 1.0, "BlockConstraint: tau must lie in [0, 1]");
    detail::require(!s || (*s > 0.0 && std::isfinite(*s)), "BlockConstraint: s must be positive");
    detail::require(c > 0.0 && std::isfinite(c), "BlockConstraint: c must be positive");
  }
};

struct PenaltyAttachment {
  LinearOperator op;
  double omega = 0.0;
  double mu = 5e-4;
  std::string label;
};

enum class Scheme { Horst, Centroid, Factorial };

struct Tolerances {
  double eps_outer = 1e-6;
  double eps_inner = 1e-6;
  double eps_dykstra0 = 1e-3;
  double eps_dykstra_floor = 1e-12;
  int max_iter_inner = 5000;
  int max_iter_outer = 500;
  int max_iter_dykstra = 10000;
};

struct ModelSpec {
  Design design;
  std::vector<BlockConstraint> constraints;
  std::vector<std::vector<PenaltyAttachment>> penalties;
  int n_components = 1;
  Tolerances tolerances;
  Scheme scheme = Scheme::Horst;

  Index num_blocks() const { return design.size(); }

  void validate(const std::vector<Block>& blocks) const {
    const auto k = static_cast<std::size_t>(design.size());
    detail::require(scheme == Scheme::Horst,
                    "ModelSpec: only Horst's scheme g(x) = x keeps the per-block problem convex; "
                    "centroid and factorial schemes are not supported");
    detail::require(blocks.size() == k, "ModelSpec: design has " + std::to_string(k) +
                                            " blocks but " + std::to_string(blocks.size()) +
                                            " were supplied");
    detail::require(constraints.size() == k, "ModelSpec: one constraint per block is required");
    detail::require(penalties.size() == k, "ModelSpec: one penalty list per block is required");
    detail::require(n_components >= 1, "ModelSpec: n_components must be at least 1");
    const Index n = blocks.front().n();
    for (std::size_t b = 0; b < k; ++b) {
      detail::require(blocks[b].n() == n, "ModelSpec: all blocks must share the same samples");
      constraints[b].validate();
      detail::require(n_components <= std::min(blocks[b].n(), blocks[b].p()),
                      "ModelSpec: n_components exceeds min(n, p) of block " + std::to_string(b));
      for (const auto& pen : penalties[b]) {
        detail::require(pen.op.cols() == blocks[b].p(),
                        "ModelSpec: penalty operator width does not match block " +
                            std::to_string(b));
        detail::require(pen.omega >= 0.0 && std::isfinite(pen.omega),
                        "ModelSpec: omega must be nonnegative");
        detail::require(pen.mu > 0.0 && std::isfinite(pen.mu), "ModelSpec: mu must be positive");
      }
    }
    const auto& t = tolerances;
    detail::require(t.eps_outer > 0 && t.eps_inner > 0 && t.eps_dykstra0 > 0 &&
                        t.eps_dykstra_floor > 0,
                    "ModelSpec: tolerances must be positive");
    detail::require(t.max_iter_inner > 0 && t.max_iter_outer > 0 && t.max_iter_dykstra > 0,
                    "ModelSpec: iteration caps must be positive");
  }
};

/// Unbiased sample covariance (1/(n-1)) wk^T Xk^T Xj wj of two block scores.
inline double covariance(const Block& xk, const Vector& wk, const Block& xj, const Vector& wj) {
  detail::require(xk.n() == xj.n(), "covariance: blocks have different sample counts");
  detail::require(wk.size() == xk.p() && wj.size() == xj.p(), "covariance: weight size mismatch");
  const Vector yk = xk.data() * wk;
  const Vector yj = xj.data() * wj;
  return yk.dot(yj) / static_cast<double>(xk.n() - 1);
}

/// phi = -sum_k sum_j c_kj Cov(X_k w_k, X_j w_j); each linked pair counts twice.
inline double phi(const std::vector<Block>& blocks, const Design& design,
                  const std::vector<Vector>& weights) {
  const Index k_count = design.size();
  std::vector<Vector> scores(static_cast<std::size_t>(k_count));
  for (Index k = 0; k < k_count; ++k) scores[k] = blocks[k].data() * weights[k];
  const double denom = static_cast<double>(blocks.front().n() - 1);
  double value = 0.0;
  for (Index k = 0; k < k_count; ++k) {
    for (Index j = 0; j < k_count; ++j) {
      if (design(k, j) != 0.0) value -= design(k, j) * scores[k].dot(scores[j]) / denom;
    }
  }
  return value;
}

inline double block_penalty_value(const std::vector<PenaltyAttachment>& penalties,
                                  const Vector& w) {
  double value = 0.0;
  for (const auto& pen : penalties) {
    if (pen.omega != 0.0) value += pen.omega * smoothed_value(pen.op, w, pen.mu);
  }
  return value;
}

inline Vector block_penalty_gradient(const std::vector<PenaltyAttachment>& penalties,
                                     const Vector& w) {
  Vector grad = Vector::Zero(w.size());
  for (const auto& pen : penalties) {
    if (pen.omega != 0.0) grad += pen.omega * smoothed_gradient(pen.op, w, pen.mu);
  }
  return grad;
}

/// Smoothed objective f = phi + sum_k sum_attachments omega * Omega_hat(mu, w_k).
inline double objective(const std::vector<Block>& blocks, const Design& design,
                        const std::vector<Vector>& weights,
                        const std::vector<std::vector<PenaltyAttachment>>& penalties) {
  double value = phi(blocks, design, weights);
  for (std::size_t k = 0; k < penalties.size(); ++k) {
    value += block_penalty_value(penalties[k], weights[k]);
  }
  return value;
}

/// Partial gradient of phi with respect to w_k: -(2/(n-1)) sum_j c_kj X_k^T X_j w_j.
/// Constant in w_k itself.
inline Vector gradient_phi(const std::vector<Block>& blocks, const Design& design,
                           const std::vector<Vector>& weights, Index k) {
  const Index n = blocks[k].n();
  Vector acc = Vector::Zero(n);
  for (Index j = 0; j < design.size(); ++j) {
    if (design(k, j) != 0.0) acc += design(k, j) * (blocks[j].data() * weights[j]);
  }
  return (-2.0 / static_cast<double>(n - 1)) * (blocks[k].data().transpose() * acc);
}

}  // namespace rgcca
