#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace rgcca;

TEST(Rng, SplitMixMatchesReferenceSequence) {
  // First outputs of the reference splitmix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(splitmix64(0x9E3779B97F4A7C15ULL), 0x6E789E6AA1B965F4ULL);
}

TEST(Rng, NormalStreamIsDeterministic) {
  NormalStream a(5, 3), b(5, 3), c(5, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a();
    EXPECT_EQ(x, b());
    differs |= x != c();
  }
  EXPECT_TRUE(differs);
}

TEST(Simulation, CanonicalTruthIsUnitNormWithNullGroups) {
  const auto [w1, w2] = default_truth();
  EXPECT_NEAR(w1.norm(), 1.0, 1e-14);
  EXPECT_NEAR(w2.norm(), 1.0, 1e-14);
  const auto groups = simulation_groups();
  ASSERT_EQ(groups.size(), 6u);
  for (Index i : groups[0]) EXPECT_EQ(w2[i], 0.0);
  for (Index i : groups[5]) EXPECT_EQ(w2[i], 0.0);
  for (std::size_t g = 1; g < 5; ++g) {
    double mass = 0.0;
    for (Index i : groups[g]) mass += std::abs(w2[i]);
    EXPECT_GT(mass, 0.0);
  }
  // Overlap between groups 2 and 3.
  EXPECT_EQ(groups[1].back(), 29);
  EXPECT_EQ(groups[2].front(), 20);
}

TEST(Simulation, SameSeedSameData) {
  SimSpec spec;
  spec.seed = 7;
  const SimData a = generate(spec);
  const SimData b = generate(spec);
  EXPECT_EQ(a.x1, b.x1);
  EXPECT_EQ(a.x2, b.x2);
  spec.seed = 8;
  EXPECT_NE(generate(spec).x1, a.x1);
}

TEST(Simulation, StreamsAreIndependentOfOtherDimensions) {
  SimSpec spec;
  spec.seed = 3;
  const SimData base = generate(spec);
  spec.p1 = 20;
  spec.true_w1 = Vector::Ones(20);
  const SimData changed = generate(spec);
  EXPECT_EQ(base.x2, changed.x2);
  EXPECT_EQ(base.truth.t1, changed.truth.t1);
}

TEST(Simulation, NoiseMomentsMatchSpecification) {
  SimSpec spec;
  spec.seed = 11;
  spec.n = 200;
  const SimData d = generate(spec);
  const Matrix e1 = d.x1 - d.truth.t1 * d.truth.w1.transpose();
  const Matrix e2 = d.x2 - d.truth.t2 * d.truth.w2.transpose();
  auto check = [](const Matrix& e, double sd) {
    const double count = static_cast<double>(e.size());
    const double mean = e.mean();
    const double var = (e.array() - mean).square().sum() / (count - 1.0);
    EXPECT_LE(std::abs(mean), 3.0 * sd / std::sqrt(count));
    // Standard error of the sample variance of a Gaussian: sd^2 sqrt(2 / (N - 1)).
    EXPECT_LE(std::abs(var - sd * sd), 3.0 * sd * sd * std::sqrt(2.0 / (count - 1.0)));
  };
  check(e1, spec.sd_e1);
  check(e2, spec.sd_e2);
  const Vector dt = d.truth.t2 - d.truth.t1;
  EXPECT_LE(std::abs(dt.mean()), 3.0 * spec.sd_t2 / std::sqrt(200.0));
}

TEST(Simulation, NoiselessUnpenalizedFitRecoversTruth) {
  SimSpec spec;
  spec.seed = 1;
  spec.sd_t2 = spec.sd_e1 = spec.sd_e2 = 0.0;
  const SimData d = generate(spec);
  const std::vector<Block> blocks = {preprocess(d.x1), preprocess(d.x2)};
  const FitResult fitted = fit(blocks, testutil::unpenalized_spec(2, 1.0));
  EXPECT_GE(recovery_score(fitted.weights[0].col(0), d.truth.w1).value, 0.999);
  EXPECT_GE(recovery_score(fitted.weights[1].col(0), d.truth.w2).value, 0.999);
}

TEST(Simulation, RejectsInvalidSpecs) {
  SimSpec spec;
  spec.n = 1;
  EXPECT_THROW(generate(spec), InvalidArgument);
  spec = {};
  spec.sd_e1 = -1.0;
  EXPECT_THROW(generate(spec), InvalidArgument);
  spec = {};
  spec.p1 = 10;
  EXPECT_THROW(generate(spec), InvalidArgument);
}

TEST(RecoveryScore, SignInvariantAndDegenerateAware) {
  const Vector w = (Vector(3) << 1.0, 2.0, -1.0).finished();
  EXPECT_NEAR(recovery_score(w, w).value, 1.0, 1e-15);
  EXPECT_NEAR(recovery_score(-w, w).value, 1.0, 1e-15);
  const Vector orth = (Vector(3) << 2.0, -1.0, 0.0).finished();
  EXPECT_NEAR(recovery_score(orth, w).value, 0.0, 1e-15);
  const RecoveryScore zero = recovery_score(Vector::Zero(3), w);
  EXPECT_EQ(zero.value, 0.0);
  EXPECT_TRUE(zero.degenerate);
}
