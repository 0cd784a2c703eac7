#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace rgcca;
using testutil::Gen;

namespace {

ModelSpec penalized_two_block(Index p1, Index p2, Gen& g) {
  ModelSpec spec = testutil::unpenalized_spec(2, 0.5);
  spec.constraints[0].s = 1.5;
  spec.penalties[0].push_back({build_tv1d(p1), 0.2, 1e-2, "tv"});
  spec.penalties[1].push_back({build_group_l12(testutil::random_groups(g, p2, true), p2), 0.1, 1e-2, "gl"});
  return spec;
}

bool feasible(const Problem& problem, Index k, const Vector& w, double slack) {
  const auto& c = problem.constraint(k);
  if (c.s && w.lpNorm<1>() > *c.s + slack) return false;
  return problem.ellipsoid(k).m.quadratic(w) <= c.c + slack;
}

}  // namespace

TEST(Solver, ProjectionToleranceScheduleDecaysAsFifthPowerWithFloor) {
  Tolerances tol;
  EXPECT_DOUBLE_EQ(projection_tolerance(tol, 1), 1e-3);
  EXPECT_DOUBLE_EQ(projection_tolerance(tol, 2), 1e-3 / 32.0);
  EXPECT_DOUBLE_EQ(projection_tolerance(tol, 1000000), 1e-12);
  EXPECT_DOUBLE_EQ(projection_tolerance(tol, 0), 1e-3);
}

TEST(Solver, StepSizeIsInverseOfPenaltyLipschitzSum) {
  Gen g(1);
  const std::vector<Block> blocks = {g.centered_block(10, 8), g.centered_block(10, 6)};
  ModelSpec spec = penalized_two_block(8, 6, g);
  spec.penalties[0].push_back({build_group_l12({{0, 1, 2}, {3, 4, 5, 6, 7}}, 8), 0.3, 1e-3, "gl"});
  const Problem problem(blocks, spec);
  double lip = 0.0;
  for (const auto& pen : spec.penalties[0]) {
    lip += pen.omega * pen.op.spectral_norm() * pen.op.spectral_norm() / pen.mu;
  }
  const std::vector<Vector> w = {Vector::Zero(8), Vector::Zero(6)};
  const StepSize st = step_size(0, problem, w);
  EXPECT_FALSE(st.backtracked);
  EXPECT_NEAR(st.t, 1.0 / lip, 1e-15);
}

TEST(Solver, StepSizeBacktracksWithoutPenalties) {
  Gen g(2);
  const std::vector<Block> blocks = {g.centered_block(10, 4), g.centered_block(10, 3)};
  const Problem problem(blocks, testutil::unpenalized_spec(2, 1.0));
  const StepSize st = step_size(0, problem, {Vector::Ones(4) * 0.1, Vector::Ones(3) * 0.1});
  EXPECT_TRUE(st.backtracked);
  EXPECT_GT(st.t, 0.0);
  EXPECT_LE(st.t, 1.0);
}

TEST(Solver, FullGradientMatchesFiniteDifferences) {
  Gen g(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = g.integer(4, 10);
    const std::vector<Block> blocks = {g.centered_block(n, 6), g.centered_block(n, 5),
                                       g.centered_block(n, 3)};
    ModelSpec spec = testutil::unpenalized_spec(3, 0.5);
    spec.penalties[0].push_back({build_tv1d(6), 0.3, 0.05, "tv"});
    spec.penalties[1].push_back({build_group_l12(testutil::random_groups(g, 5, true), 5), 0.2, 0.05, "gl"});
    const Problem problem(blocks, spec);
    std::vector<Vector> w = {g.vector(6), g.vector(5), g.vector(3)};
    for (Index k = 0; k < 3; ++k) {
      const Vector grad = problem.gradient(k, w);
      for (Index i = 0; i < w[k].size(); ++i) {
        auto wp = w, wm = w;
        wp[k][i] += 1e-6;
        wm[k][i] -= 1e-6;
        const double fd = (problem.objective(wp) - problem.objective(wm)) / 2e-6;
        EXPECT_NEAR(grad[i], fd, 1e-5 * (1 + std::abs(fd)));
      }
    }
  }
}

TEST(Solver, TwoBlockCovarianceModeMatchesTopSingularPair) {
  Gen g(4);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = g.integer(6, 20);
    const std::vector<Block> blocks = {g.centered_block(n, g.integer(2, 12)),
                                       g.centered_block(n, g.integer(2, 12))};
    const FitResult fitted = fit(blocks, testutil::unpenalized_spec(2, 1.0));
    const Matrix cross = blocks[0].data().transpose() * blocks[1].data();
    Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() > 1 && sv(0) - sv(1) < 1e-3 * sv(0)) continue;
    EXPECT_GE(testutil::cosine_abs(fitted.weights[0].col(0), svd.matrixU().col(0)), 0.999);
    EXPECT_GE(testutil::cosine_abs(fitted.weights[1].col(0), svd.matrixV().col(0)), 0.999);
    EXPECT_NEAR(fitted.weights[0].col(0).norm(), 1.0, 1e-8);
  }
}

TEST(Solver, PenalizedFitDescendsAndIsStationary) {
  Gen g(5);
  for (int rep = 0; rep < 3; ++rep) {
    const Index n = 15;
    const std::vector<Block> blocks = {g.centered_block(n, 12), g.centered_block(n, 9)};
    const ModelSpec spec = penalized_two_block(12, 9, g);
    const Problem problem(blocks, spec);
    const ComponentFit comp = fit_component(problem);
    const auto& d = comp.diagnostics;
    ASSERT_TRUE(d.converged);
    for (std::size_t i = 1; i < d.update_trace.size(); ++i) {
      EXPECT_LE(d.update_trace[i], d.update_trace[i - 1] + 1e-9);
    }
    for (double gm : d.gradient_map_norms) EXPECT_LE(gm, spec.tolerances.eps_outer);
    for (Index k = 0; k < 2; ++k) {
      EXPECT_TRUE(feasible(problem, k, comp.weights[static_cast<std::size_t>(k)], 1e-8));
    }
  }
}

TEST(Solver, InitialWeightIsFeasible) {
  Gen g(6);
  const std::vector<Block> blocks = {g.centered_block(10, 12), g.centered_block(10, 9)};
  const Problem problem(blocks, penalized_two_block(12, 9, g));
  for (Index k = 0; k < 2; ++k) {
    EXPECT_TRUE(feasible(problem, k, default_initial_weight(problem, k), 1e-10));
  }
}

TEST(Solver, UserSuppliedInitIsProjected) {
  Gen g(7);
  const std::vector<Block> blocks = {g.centered_block(10, 5), g.centered_block(10, 4)};
  const Problem problem(blocks, testutil::unpenalized_spec(2, 1.0));
  const std::vector<Vector> init = {g.vector(5, 10.0), g.vector(4, 10.0)};
  const ComponentFit comp = fit_component(problem, init);
  EXPECT_TRUE(comp.diagnostics.converged);
  EXPECT_THROW(fit_component(problem, std::vector<Vector>{g.vector(5)}), InvalidArgument);
}

TEST(Solver, DeflationRemovesComponentDirection) {
  Gen g(8);
  const Block b = g.centered_block(10, 6);
  const Vector w = g.vector(6);
  const Block d = deflate(b, w);
  EXPECT_LE((d.data() * w).norm(), 1e-10 * b.data().norm());
  EXPECT_THROW(deflate(b, Vector::Zero(6)), NumericalError);
}

TEST(Solver, MultipleComponentsUseUndeflatedScores) {
  Gen g(9);
  const std::vector<Block> blocks = {g.centered_block(12, 6), g.centered_block(12, 5)};
  const FitResult fitted = fit(blocks, testutil::unpenalized_spec(2, 1.0, 3));
  ASSERT_EQ(fitted.extracted, 3);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_LE((fitted.scores[k] - blocks[k].data() * fitted.weights[k]).norm(), 1e-12);
    // Deflated weights are orthogonal to the previous ones.
    const Matrix gram = fitted.weights[k].transpose() * fitted.weights[k];
    EXPECT_NEAR(gram(0, 1), 0.0, 1e-6);
  }
}

TEST(Solver, FitIsDeterministic) {
  Gen g(10);
  const std::vector<Block> blocks = {g.centered_block(12, 10), g.centered_block(12, 7)};
  const ModelSpec spec = penalized_two_block(10, 7, g);
  const FitResult a = fit(blocks, spec);
  const FitResult b = fit(blocks, spec);
  EXPECT_EQ(a.weights[0], b.weights[0]);
  EXPECT_EQ(a.weights[1], b.weights[1]);
}

TEST(Solver, GliomaShapedSurrogateCompletesWithTwoComponents) {
  Gen g(11);
  const Index n = 53;
  Matrix dummy = Matrix::Zero(n, 3);
  for (Index i = 0; i < n; ++i) dummy(i, i % 3) = 1.0;
  const Matrix signal = dummy * g.matrix(3, 1);
  Matrix ge = g.matrix(n, 200, 0.5);
  ge.leftCols(30) += signal.replicate(1, 30);
  Matrix cgh = g.matrix(n, 300, 0.5);
  cgh.middleCols(100, 40) += signal.replicate(1, 40);
  const std::vector<Block> blocks = {preprocess(ge), preprocess(cgh), preprocess(dummy)};

  ModelSpec spec;
  Matrix c(3, 3);
  c << 0, 0, 1, 0, 0, 1, 1, 1, 0;
  spec.design = Design(c);
  spec.constraints = {{1.0, 13.0, 1.0}, {0.3, 10.1, 1.0}, {1.0, std::nullopt, 1.0}};
  spec.penalties.resize(3);
  std::vector<std::vector<Index>> groups;
  for (Index lo = 0; lo < 200; lo += 10) {
    std::vector<Index> grp;
    for (Index i = lo; i < std::min<Index>(lo + 12, 200); ++i) grp.push_back(i);
    groups.push_back(grp);
  }
  spec.penalties[0].push_back({build_group_l12(groups, 200), 0.35, 5e-4, "gl"});
  spec.penalties[1].push_back({build_tv1d(300), 0.004, 5e-4, "tv"});
  spec.n_components = 2;

  const FitResult fitted = fit(blocks, spec);
  ASSERT_EQ(fitted.extracted, 2);
  for (const auto& d : fitted.components) {
    for (std::size_t i = 1; i < d.update_trace.size(); ++i) {
      EXPECT_LE(d.update_trace[i], d.update_trace[i - 1] + 1e-9);
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const ConstraintMatrix m(blocks[k], spec.constraints[k].tau);
    for (Index a = 0; a < 2; ++a) {
      const Vector w = fitted.weights[k].col(a);
      if (spec.constraints[k].s) EXPECT_LE(w.lpNorm<1>(), *spec.constraints[k].s + 1e-6);
      if (a == 0) EXPECT_LE(m.quadratic(w), 1.0 + 1e-6);
    }
  }
}
