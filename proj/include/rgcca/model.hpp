#pragma once

// Post-fit analytics: inner-relation prediction between blocks, the R^2_pred
// statistic, K-fold cross-validated grid search and bootstrap selection
// stability summarised by Fleiss' kappa.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rgcca/core.hpp"
#include "rgcca/error.hpp"
#include "rgcca/parallel.hpp"
#include "rgcca/simulate.hpp"
#include "rgcca/solver.hpp"

namespace rgcca {

/// Least-squares slope of t_j on t_k: t_k^T t_j / t_k^T t_k.
inline double inner_coeff(const Vector& tk, const Vector& tj) {
  detail::require(tk.size() == tj.size(), "inner_coeff: length mismatch");
  const double denom = tk.squaredNorm();
  detail::require(denom > 0.0, "inner_coeff: source score vector is zero");
  return tk.dot(tj) / denom;
}

struct PredictionModel {
  Matrix source_scores;   // T_k, n x A
  Matrix target_scores;   // T_j, n x A
  Matrix target_weights;  // W_j, p_j x A
};

struct Prediction {
  Matrix xhat;
  Matrix coefficients;  // (T_k^T T_k)^+ T_k^T T_j, A x A
  bool rank_deficient = false;
};

namespace detail {

inline Matrix inner_regression(const Matrix& tk, const Matrix& tj, bool& rank_deficient) {
  const Matrix gram = tk.transpose() * tk;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(gram);
  rank_deficient = cod.rank() < gram.rows();
  return cod.pseudoInverse() * (tk.transpose() * tj);
}

}  // namespace detail

/// X_hat = T_k (T_k^T T_k)^{-1} T_k^T T_j W_j^T. A Moore-Penrose
/// pseudo-inverse replaces the inverse when T_k^T T_k is singular.
inline Prediction predict_block(const PredictionModel& model) {
  detail::require(model.source_scores.cols() >= 1, "predict_block: at least one component");
  detail::require(model.source_scores.cols() == model.target_scores.cols() &&
                      model.target_scores.cols() == model.target_weights.cols(),
                  "predict_block: component counts differ");
  detail::require(model.source_scores.rows() == model.target_scores.rows(),
                  "predict_block: score matrices have different sample counts");
  Prediction out;
  out.coefficients =
      detail::inner_regression(model.source_scores, model.target_scores, out.rank_deficient);
  out.xhat = model.source_scores * out.coefficients * model.target_weights.transpose();
  return out;
}

/// Out-of-sample variant: coefficients from the training scores in `model`,
/// applied to source scores of new samples.
inline Prediction predict_block(const PredictionModel& model, const Matrix& new_source_scores) {
  Prediction out = predict_block(model);
  detail::require(new_source_scores.cols() == model.source_scores.cols(),
                  "predict_block: component count of new scores differs");
  out.xhat = new_source_scores * out.coefficients * model.target_weights.transpose();
  return out;
}

/// 1 - ||X_hat - X||_F^2 / ||X||_F^2.
inline double r2_pred(const Matrix& xhat, const Matrix& x) {
  detail::require(xhat.rows() == x.rows() && xhat.cols() == x.cols(), "r2_pred: shape mismatch");
  const double denom = x.squaredNorm();
  detail::require(denom > 0.0, "r2_pred: target block has zero norm");
  return 1.0 - (xhat - x).squaredNorm() / denom;
}

/// Product of per-predictor R^2_pred values.
inline double combined_r2(const std::vector<double>& per_predictor) {
  return std::accumulate(per_predictor.begin(), per_predictor.end(), 1.0, std::multiplies<>());
}

/// Argmax over predicted dummy columns; ties go to the lowest column.
inline std::vector<Index> classify_from_dummy(const Matrix& xhat) {
  detail::require(xhat.cols() >= 2, "classify_from_dummy: at least two classes are required");
  std::vector<Index> labels(static_cast<std::size_t>(xhat.rows()));
  for (Index i = 0; i < xhat.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < xhat.cols(); ++j) {
      if (xhat(i, j) > xhat(i, best)) best = j;
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

/// Fold index per row: one seeded shuffle, then contiguous folds.
inline std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed) {
  detail::require(folds >= 2, "fold_assignment: at least 2 folds are required");
  detail::require(folds <= n, "fold_assignment: more folds than samples");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(splitmix64(seed));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Index pos = 0; pos < n; ++pos) {
    fold[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] =
        static_cast<int>(pos * folds / n);
  }
  return fold;
}

inline Matrix select_rows(const Matrix& x, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
  return out;
}

struct GridAxis {
  std::string name;  // block.<k>.omega | block.<k>.penalty.<j>.omega | block.<k>.s | .tau | .mu
  std::vector<double> values;
};

struct CvGrid {
  std::vector<GridAxis> axes;
  int folds = 7;

  std::size_t cell_count() const {
    std::size_t count = 1;
    for (const auto& a : axes) count *= a.values.size();
    return axes.empty() ? 1 : count;
  }

  /// Values of cell `index`, first axis varying slowest.
  std::vector<double> cell(std::size_t index) const {
    std::vector<double> out(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      const auto size = axes[a].values.size();
      out[a] = axes[a].values[index % size];
      index /= size;
    }
    return out;
  }
};

/// Apply one named grid setting to a model spec.
inline void apply_setting(ModelSpec& spec, const std::string& name, double value) {
  auto fail = [&] { throw InvalidArgument("grid axis '" + name + "' is not recognised"); };
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t pos; (pos = name.find('.', start)) != std::string::npos; start = pos + 1) {
    parts.push_back(name.substr(start, pos - start));
  }
  parts.push_back(name.substr(start));
  if (parts.size() < 3 || parts[0] != "block") fail();
  std::size_t k = 0;
  try {
    k = static_cast<std::size_t>(std::stoul(parts[1]));
  } catch (const std::exception&) {
    fail();
  }
  if (k >= spec.constraints.size()) {
    throw InvalidArgument("grid axis '" + name + "' refers to a missing block");
  }
  const std::string& key = parts.back();
  if (parts.size() == 3) {
    if (key == "s") {
      spec.constraints[k].s = value;
    } else if (key == "tau") {
      spec.constraints[k].tau = value;
    } else if (key == "c") {
      spec.constraints[k].c = value;
    } else if (key == "omega" || key == "mu") {
      if (spec.penalties[k].empty()) {
        throw InvalidArgument("grid axis '" + name + "': block has no penalty");
      }
      for (auto& pen : spec.penalties[k]) (key == "omega" ? pen.omega : pen.mu) = value;
    } else {
      fail();
    }
    return;
  }
  if (parts.size() == 5 && parts[2] == "penalty" && (key == "omega" || key == "mu")) {
    std::size_t j = 0;
    try {
      j = static_cast<std::size_t>(std::stoul(parts[3]));
    } catch (const std::exception&) {
      fail();
    }
    if (j >= spec.penalties[k].size()) {
      throw InvalidArgument("grid axis '" + name + "' refers to a missing penalty");
    }
    (key == "omega" ? spec.penalties[k][j].omega : spec.penalties[k][j].mu) = value;
    return;
  }
  fail();
}

struct CvCell {
  std::vector<double> values;
  std::vector<double> fold_scores;
  double score = -std::numeric_limits<double>::infinity();
  bool failed = false;
  std::string error;
  int nonconverged_folds = 0;
};

struct CvResult {
  std::vector<std::string> axis_names;
  std::vector<CvCell> cells;
  std::size_t best = 0;
  bool tie = false;  // another cell matched the best score; lowest index kept
};

struct FoldOutcome {
  double score = 0.0;
  bool converged = true;
};

/// Fit on the training rows and score the held-out rows: every non-target
/// block predicts the target block through the inner relation; the fold
/// statistic is the product of their R^2_pred values.
inline FoldOutcome evaluate_fold(const std::vector<Matrix>& raw, bool scale, const ModelSpec& spec,
                                 Index target, const std::vector<int>& folds, int fold) {
  std::vector<Index> train_rows, test_rows;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    (folds[i] == fold ? test_rows : train_rows).push_back(static_cast<Index>(i));
  }
  std::vector<Block> train;
  std::vector<Matrix> test;
  for (const auto& x : raw) {
    train.push_back(preprocess(select_rows(x, train_rows), true, scale));
    test.push_back(apply_preprocessing(select_rows(x, test_rows), train.back().preprocessing()));
  }
  const FitResult fitted = fit(train, spec);
  if (fitted.degenerate && fitted.extracted < spec.n_components) {
    throw NumericalError("degenerate component");
  }
  const auto t = static_cast<std::size_t>(target);
  PredictionModel model;
  model.target_scores = fitted.scores[t];
  model.target_weights = fitted.weights[t];
  std::vector<double> r2s;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (k == t) continue;
    model.source_scores = fitted.scores[k];
    const Prediction pred = predict_block(model, test[k] * fitted.weights[k]);
    r2s.push_back(r2_pred(pred.xhat, test[t]));
  }
  return {combined_r2(r2s), fitted.converged};
}

/// Grid search with K-fold cross-validation maximising the combined R^2_pred
/// for predicting `target` from every other block.
inline CvResult cross_validate(const std::vector<Matrix>& raw, bool scale,
                               const ModelSpec& spec_template, const CvGrid& grid, Index target,
                               std::uint64_t seed, int jobs = 1) {
  detail::require(raw.size() >= 2, "cross_validate: at least two blocks are required");
  detail::require(target >= 0 && target < static_cast<Index>(raw.size()),
                  "cross_validate: target block out of range");
  const Index n = raw.front().rows();
  detail::require(grid.folds >= 2 && grid.folds <= n, "cross_validate: folds must lie in [2, n]");
  for (const auto& axis : grid.axes) {
    detail::require(!axis.values.empty(), "cross_validate: grid axis '" + axis.name + "' is empty");
  }

  const std::vector<int> folds = fold_assignment(n, grid.folds, seed);
  CvResult result;
  for (const auto& axis : grid.axes) result.axis_names.push_back(axis.name);
  const std::size_t cells = grid.cell_count();
  result.cells.resize(cells);

  std::vector<ModelSpec> specs(cells, spec_template);
  for (std::size_t c = 0; c < cells; ++c) {
    result.cells[c].values = grid.cell(c);
    result.cells[c].fold_scores.assign(static_cast<std::size_t>(grid.folds), 0.0);
    try {
      for (std::size_t a = 0; a < grid.axes.size(); ++a) {
        apply_setting(specs[c], grid.axes[a].name, result.cells[c].values[a]);
      }
    } catch (const std::exception& e) {
      result.cells[c].failed = true;
      result.cells[c].error = e.what();
    }
  }

  const auto fold_count = static_cast<std::size_t>(grid.folds);
  std::vector<std::string> errors(cells * fold_count);
  std::vector<char> converged(cells * fold_count, 1);
  detail::parallel_for(cells * fold_count, jobs, [&](std::size_t job) {
    const std::size_t c = job / fold_count;
    const std::size_t f = job % fold_count;
    if (result.cells[c].failed) return;
    try {
      const FoldOutcome out = evaluate_fold(raw, scale, specs[c], target, folds, static_cast<int>(f));
      result.cells[c].fold_scores[f] = out.score;
      converged[job] = out.converged ? 1 : 0;
    } catch (const std::exception& e) {
      errors[job] = e.what();
    }
  });

  for (std::size_t c = 0; c < cells; ++c) {
    CvCell& cell = result.cells[c];
    for (std::size_t f = 0; f < fold_count && !cell.failed; ++f) {
      if (!errors[c * fold_count + f].empty()) {
        cell.failed = true;
        cell.error = "fold " + std::to_string(f) + ": " + errors[c * fold_count + f];
      }
      if (!converged[c * fold_count + f]) ++cell.nonconverged_folds;
    }
    if (cell.failed) {
      cell.score = -std::numeric_limits<double>::infinity();
    } else {
      cell.score = std::accumulate(cell.fold_scores.begin(), cell.fold_scores.end(), 0.0) /
                   static_cast<double>(fold_count);
    }
  }
  for (std::size_t c = 1; c < cells; ++c) {
    if (result.cells[c].score > result.cells[result.best].score) result.best = c;
  }
  for (std::size_t c = 0; c < cells; ++c) {
    if (c != result.best && result.cells[c].score == result.cells[result.best].score) {
      result.tie = true;
    }
  }
  return result;
}

/// Fleiss' kappa for two categories. `selected[i]` is how many of `raters`
/// put item i in the "selected" category. When every rating falls into one
/// category the chance agreement is 1 and kappa is defined as 1.
inline double fleiss_kappa(const std::vector<int>& selected, int raters) {
  detail::require(raters >= 2, "fleiss_kappa: at least two raters are required");
  detail::require(!selected.empty(), "fleiss_kappa: no items");
  const double m = raters;
  double agreement = 0.0;
  double selected_total = 0.0;
  for (int c : selected) {
    detail::require(c >= 0 && c <= raters, "fleiss_kappa: count out of range");
    const double yes = c;
    const double no = m - c;
    agreement += (yes * (yes - 1.0) + no * (no - 1.0)) / (m * (m - 1.0));
    selected_total += yes;
  }
  const double items = static_cast<double>(selected.size());
  const double p_bar = agreement / items;
  const double p_yes = selected_total / (items * m);
  const double p_e = p_yes * p_yes + (1.0 - p_yes) * (1.0 - p_yes);
  if (p_e >= 1.0) return 1.0;
  return (p_bar - p_e) / (1.0 - p_e);
}

struct StabilityReport {
  int rounds = 0;
  int successful = 0;
  int failed = 0;
  std::vector<Eigen::MatrixXi> selection_counts;  // per block: p_k x A
  std::vector<std::vector<double>> kappa;         // per block, per component
};

/// Refit on B bootstrap resamples of the rows and measure how consistently
/// each variable is selected (|w| > threshold).
inline StabilityReport bootstrap_stability(const std::vector<Matrix>& raw, bool scale,
                                           const ModelSpec& spec, int rounds, std::uint64_t seed,
                                           double threshold = 1e-10, int jobs = 1) {
  detail::require(rounds >= 2, "bootstrap_stability: at least 2 rounds are required");
  detail::require(!raw.empty(), "bootstrap_stability: no blocks");
  const Index n = raw.front().rows();
  const auto kc = raw.size();
  const int a_count = spec.n_components;

  std::vector<std::vector<Matrix>> round_weights(static_cast<std::size_t>(rounds));
  std::vector<char> ok(static_cast<std::size_t>(rounds), 0);
  detail::parallel_for(static_cast<std::size_t>(rounds), jobs, [&](std::size_t b) {
    std::mt19937_64 rng(splitmix64(seed + 0x9E3779B97F4A7C15ULL * (b + 1)));
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = pick(rng);
    try {
      std::vector<Block> blocks;
      for (const auto& x : raw) blocks.push_back(preprocess(select_rows(x, rows), true, scale));
      FitResult fitted = fit(blocks, spec);
      if (fitted.extracted < a_count) return;
      round_weights[b] = std::move(fitted.weights);
      ok[b] = 1;
    } catch (const std::exception&) {
    }
  });

  StabilityReport report;
  report.rounds = rounds;
  for (std::size_t k = 0; k < kc; ++k) {
    report.selection_counts.push_back(Eigen::MatrixXi::Zero(raw[k].cols(), a_count));
  }
  for (int b = 0; b < rounds; ++b) {
    if (!ok[static_cast<std::size_t>(b)]) {
      ++report.failed;
      continue;
    }
    ++report.successful;
    for (std::size_t k = 0; k < kc; ++k) {
      const Matrix& w = round_weights[static_cast<std::size_t>(b)][k];
      report.selection_counts[k] += (w.array().abs() > threshold).cast<int>().matrix();
    }
  }
  report.kappa.assign(kc, std::vector<double>(static_cast<std::size_t>(a_count),
                                               std::numeric_limits<double>::quiet_NaN()));
  if (report.successful >= 2) {
    for (std::size_t k = 0; k < kc; ++k) {
      for (int a = 0; a < a_count; ++a) {
        const auto col = report.selection_counts[k].col(a);
        report.kappa[k][static_cast<std::size_t>(a)] =
            fleiss_kappa(std::vector<int>(col.data(), col.data() + col.size()), report.successful);
      }
    }
  }
  return report;
}

}  // namespace rgcca
