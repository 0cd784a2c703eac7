#pragma once

// Block-relaxation accelerated projected gradient solver for the smoothed,
// constrained RGCCA problem, with deflation for multiple components.
//
// Each block update runs FISTA on f restricted to w_k (other blocks fixed),
// projecting onto W_k = P_k ∩ S_k with a tolerance that shrinks as i_k^-5 in
// the cumulative FISTA counter of the block. Sweeps over the blocks repeat
// until every block's gradient map is below eps_outer.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rgcca/core.hpp"
#include "rgcca/penalty.hpp"
#include "rgcca/project.hpp"

namespace rgcca {

/// Blocks plus a validated model spec, with the per-block ellipsoids built.
class Problem {
 public:
  Problem(std::vector<Block> blocks, ModelSpec spec)
      : blocks_(std::move(blocks)), spec_(std::move(spec)) {
    spec_.validate(blocks_);
    ellipsoids_.reserve(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      ellipsoids_.emplace_back(blocks_[k], spec_.constraints[k].tau, spec_.constraints[k].c);
    }
  }

  Index num_blocks() const { return static_cast<Index>(blocks_.size()); }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(Index k) const { return blocks_[static_cast<std::size_t>(k)]; }
  const ModelSpec& spec() const { return spec_; }
  const EllipsoidSpec& ellipsoid(Index k) const { return ellipsoids_[static_cast<std::size_t>(k)]; }
  const BlockConstraint& constraint(Index k) const {
    return spec_.constraints[static_cast<std::size_t>(k)];
  }
  const std::vector<PenaltyAttachment>& penalties(Index k) const {
    return spec_.penalties[static_cast<std::size_t>(k)];
  }

  ProjectionReport project(Index k, const Vector& x, double eps) const {
    return project_W(x, constraint(k), ellipsoid(k), eps, spec_.tolerances.max_iter_dykstra);
  }

  double objective(const std::vector<Vector>& weights) const {
    return rgcca::objective(blocks_, spec_.design, weights, spec_.penalties);
  }

  Vector phi_gradient(Index k, const std::vector<Vector>& weights) const {
    return gradient_phi(blocks_, spec_.design, weights, k);
  }

  /// Full partial gradient of the smoothed objective with respect to w_k.
  Vector gradient(Index k, const std::vector<Vector>& weights) const {
    return phi_gradient(k, weights) +
           block_penalty_gradient(penalties(k), weights[static_cast<std::size_t>(k)]);
  }

  /// Objective restricted to w_k, up to a constant: phi is linear in w_k with
  /// slope `phi_grad`.
  double block_objective(Index k, const Vector& w, const Vector& phi_grad) const {
    return phi_grad.dot(w) + block_penalty_value(penalties(k), w);
  }

  double penalty_lipschitz(Index k) const {
    double total = 0.0;
    for (const auto& pen : penalties(k)) total += pen.omega * lipschitz(pen.op, pen.mu);
    return total;
  }

 private:
  std::vector<Block> blocks_;
  ModelSpec spec_;
  std::vector<EllipsoidSpec> ellipsoids_;
};

struct StepSize {
  double t = 1.0;
  bool backtracked = false;
  int shrinks = 0;
};

/// Step size t_k = 1 / (L(grad phi) + sum omega ||A||^2 / mu). phi is linear
/// in w_k so L(grad phi) = 0; without penalties the sum vanishes and the step
/// comes from backtracking from t = 1 with factor 0.5 on the smooth part.
inline StepSize step_size(Index k, const Problem& problem, const std::vector<Vector>& weights) {
  StepSize result;
  const double lip = problem.penalty_lipschitz(k);
  if (lip > 0.0) {
    result.t = 1.0 / lip;
    return result;
  }
  result.backtracked = true;
  const Vector& y = weights[static_cast<std::size_t>(k)];
  const Vector phi_grad = problem.phi_gradient(k, weights);
  const Vector grad = problem.gradient(k, weights);
  const double f_y = problem.block_objective(k, y, phi_grad);
  const double eps = problem.spec().tolerances.eps_dykstra_floor;
  double t = 1.0;
  for (int i = 0; i < 60; ++i) {
    const Vector x = problem.project(k, y - t * grad, eps).point;
    const Vector d = x - y;
    const double bound = f_y + grad.dot(d) + d.squaredNorm() / (2.0 * t);
    if (problem.block_objective(k, x, phi_grad) <= bound + 1e-12 * (1.0 + std::abs(f_y))) break;
    t *= 0.5;
    ++result.shrinks;
  }
  result.t = t;
  return result;
}

struct SolverState {
  std::vector<Vector> weights;
  std::vector<double> step_sizes;
  std::vector<long> fista_counters;  // cumulative i_k per block
  int outer_sweep = 0;
  std::vector<double> objective_trace;
};

struct BlockUpdate {
  Vector w;
  long iterations = 0;
  bool converged = false;
  long inexact_projections = 0;  // Dykstra hit its iteration cap
  bool reverted_to_best = false;
};

/// Tolerance for the projection at cumulative FISTA iteration i.
inline double projection_tolerance(const Tolerances& tol, long i) {
  const double ii = static_cast<double>(std::max<long>(i, 1));
  return std::max(tol.eps_dykstra0 / (ii * ii * ii * ii * ii), tol.eps_dykstra_floor);
}

/// FISTA on block k with all other blocks fixed.
inline BlockUpdate fista_block(Index k, SolverState& state, const Problem& problem) {
  const auto kk = static_cast<std::size_t>(k);
  const Tolerances& tol = problem.spec().tolerances;
  const double t = state.step_sizes[kk];
  const Vector phi_grad = problem.phi_gradient(k, state.weights);
  const auto& penalties = problem.penalties(k);

  BlockUpdate update;
  Vector w = state.weights[kk];
  Vector w_prev = w;
  const double entry_value = problem.block_objective(k, w, phi_grad);
  Vector best = w;
  double best_value = entry_value;

  for (long s = 1; s <= tol.max_iter_inner; ++s) {
    const long i_k = ++state.fista_counters[kk];
    const double momentum = static_cast<double>(s - 1) / static_cast<double>(s + 2);
    const Vector y = w + momentum * (w - w_prev);
    const Vector grad = phi_grad + block_penalty_gradient(penalties, y);
    const ProjectionReport proj = problem.project(k, y - t * grad, projection_tolerance(tol, i_k));
    if (!proj.converged) ++update.inexact_projections;
    w_prev = std::move(w);
    w = proj.point;
    update.iterations = s;

    const double value = problem.block_objective(k, w, phi_grad);
    if (value < best_value) {
      best_value = value;
      best = w;
    }
    if ((w - y).norm() <= t * tol.eps_inner) {
      update.converged = true;
      break;
    }
  }

  // FISTA is not monotone; never leave the block worse than it was found.
  if (problem.block_objective(k, w, phi_grad) > entry_value) {
    w = best;
    update.reverted_to_best = true;
  }
  update.w = std::move(w);
  return update;
}

struct GradientMap {
  Vector value;
  double norm = 0.0;
};

/// G_t(w_k) = (w_k - proj_W(w_k - t grad_k f)) / t.
inline GradientMap gradient_map(Index k, const std::vector<Vector>& weights,
                                const Problem& problem, double t) {
  const Vector& w = weights[static_cast<std::size_t>(k)];
  const Vector grad = problem.gradient(k, weights);
  const Vector moved =
      problem.project(k, w - t * grad, problem.spec().tolerances.eps_dykstra_floor).point;
  GradientMap g;
  g.value = (w - moved) / t;
  g.norm = g.value.norm();
  return g;
}

/// Deterministic feasible start: the leading right singular vector of the
/// block, sign-fixed so its largest-magnitude entry is positive, projected
/// onto W_k.
inline Vector default_initial_weight(const Problem& problem, Index k) {
  const Block& b = problem.block(k);
  Vector v = b.svd().right_vectors.col(0);
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) v = -v;
  return problem.project(k, v, problem.spec().tolerances.eps_dykstra_floor).point;
}

struct ComponentDiagnostics {
  int sweeps = 0;
  bool converged = false;
  bool degenerate = false;
  std::vector<double> objective_trace;  // after each sweep
  std::vector<double> update_trace;     // after each block update, starting at the initial value
  std::vector<double> gradient_map_norms;
  std::vector<double> step_sizes;
  std::vector<long> fista_iterations;
  std::vector<long> inner_cap_hits;
  long inexact_projections = 0;
};

struct ComponentFit {
  std::vector<Vector> weights;
  ComponentDiagnostics diagnostics;
};

inline constexpr double kDegenerateNorm = 1e-10;

/// One component by block relaxation.
inline ComponentFit fit_component(const Problem& problem,
                                  const std::optional<std::vector<Vector>>& init = {}) {
  const Index k_count = problem.num_blocks();
  const auto kc = static_cast<std::size_t>(k_count);
  const Tolerances& tol = problem.spec().tolerances;

  SolverState state;
  state.weights.resize(kc);
  state.fista_counters.assign(kc, 0);
  state.step_sizes.assign(kc, 1.0);
  for (Index k = 0; k < k_count; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    if (init) {
      detail::require(init->size() == kc && (*init)[kk].size() == problem.block(k).p(),
                      "fit_component: initial weights have the wrong shape");
      state.weights[kk] = problem.project(k, (*init)[kk], tol.eps_dykstra_floor).point;
    } else {
      state.weights[kk] = default_initial_weight(problem, k);
    }
  }
  for (Index k = 0; k < k_count; ++k) {
    state.step_sizes[static_cast<std::size_t>(k)] = step_size(k, problem, state.weights).t;
  }

  ComponentDiagnostics diag;
  diag.fista_iterations.assign(kc, 0);
  diag.inner_cap_hits.assign(kc, 0);
  diag.gradient_map_norms.assign(kc, 0.0);
  diag.update_trace.push_back(problem.objective(state.weights));

  for (int sweep = 1; sweep <= tol.max_iter_outer; ++sweep) {
    state.outer_sweep = sweep;
    for (Index k = 0; k < k_count; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      BlockUpdate up = fista_block(k, state, problem);
      state.weights[kk] = std::move(up.w);
      diag.fista_iterations[kk] += up.iterations;
      if (!up.converged) ++diag.inner_cap_hits[kk];
      diag.inexact_projections += up.inexact_projections;
      diag.update_trace.push_back(problem.objective(state.weights));
    }
    state.objective_trace.push_back(problem.objective(state.weights));

    bool all_small = true;
    for (Index k = 0; k < k_count; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      diag.gradient_map_norms[kk] = gradient_map(k, state.weights, problem, state.step_sizes[kk]).norm;
      if (diag.gradient_map_norms[kk] > tol.eps_outer) all_small = false;
    }
    diag.sweeps = sweep;
    if (all_small) {
      diag.converged = true;
      break;
    }
  }

  diag.objective_trace = state.objective_trace;
  diag.step_sizes = state.step_sizes;
  for (const auto& w : state.weights) {
    if (w.norm() <= kDegenerateNorm) diag.degenerate = true;
  }
  return {std::move(state.weights), std::move(diag)};
}

/// X <- X (I - w w^T / w^T w), with the SVD cache recomputed.
inline Block deflate(const Block& block, const Vector& w) {
  const double ww = w.squaredNorm();
  if (!(ww > 0.0)) throw NumericalError("deflate: weight vector is zero");
  const Vector xw = block.data() * w;
  Matrix data = block.data() - (xw / ww) * w.transpose();
  return Block(std::move(data), block.preprocessing());
}

struct FitResult {
  std::vector<Matrix> weights;  // p_k x A
  std::vector<Matrix> scores;   // n x A, against the undeflated blocks
  std::vector<ComponentDiagnostics> components;
  int extracted = 0;
  bool converged = false;
  bool degenerate = false;
};

/// Extract spec.n_components components, deflating every block after each one.
inline FitResult fit(const std::vector<Block>& blocks, const ModelSpec& spec) {
  spec.validate(blocks);
  const auto kc = blocks.size();
  const int a_count = spec.n_components;
  FitResult result;
  result.weights.reserve(kc);
  result.scores.reserve(kc);
  for (const auto& b : blocks) {
    result.weights.push_back(Matrix::Zero(b.p(), a_count));
    result.scores.push_back(Matrix::Zero(b.n(), a_count));
  }
  result.converged = true;

  std::vector<Block> current = blocks;
  for (int a = 0; a < a_count; ++a) {
    const Problem problem(current, spec);
    ComponentFit comp = fit_component(problem);
    for (std::size_t k = 0; k < kc; ++k) {
      result.weights[k].col(a) = comp.weights[k];
      result.scores[k].col(a) = blocks[k].data() * comp.weights[k];
    }
    result.converged = result.converged && comp.diagnostics.converged;
    const bool degenerate = comp.diagnostics.degenerate;
    result.components.push_back(std::move(comp.diagnostics));
    result.extracted = a + 1;
    if (degenerate) {
      result.degenerate = true;
      break;
    }
    if (a + 1 < a_count) {
      for (std::size_t k = 0; k < kc; ++k) current[k] = deflate(current[k], comp.weights[k]);
    }
  }
  return result;
}

}  // namespace rgcca
