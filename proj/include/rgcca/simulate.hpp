#pragma once

// Two-block latent-variable simulation:
//   X1 = t1 w1^T + E1,   X2 = t2 w2^T + E2,
//   t1 ~ N(0, I_n),  t2 ~ N(t1, sd_t2^2 I_n),  E_b columns ~ N(0, sd_eb^2 I_n).
//
// Random streams: every drawn quantity (t1, t2 noise, E1, E2) has its own
// std::mt19937_64 seeded with splitmix64(seed + stream_id * 0x9E3779B97F4A7C15),
// stream ids 1..4 in that order. Normals come from the Box-Muller transform on
// 53-bit uniforms in (0, 1], consuming both outputs of each pair, so the draws
// are reproducible across standard libraries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rgcca/core.hpp"
#include "rgcca/error.hpp"
#include "rgcca/penalty.hpp"

namespace rgcca {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Portable standard-normal stream.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream_id)
      : engine_(splitmix64(seed + stream_id * 0x9E3779B97F4A7C15ULL)) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open0();
    const double u2 = uniform_open0();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform_open0() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SimSpec {
  Index n = 50;
  Index p1 = 150;
  Index p2 = 100;
  double sd_t2 = 0.01;
  double sd_e1 = 0.15;
  double sd_e2 = 0.2;
  Vector true_w1;  // empty: use default_truth
  Vector true_w2;
  std::uint64_t seed = 0;
};

struct SimTruth {
  Vector t1;
  Vector t2;
  Vector w1;
  Vector w2;
};

struct SimData {
  Matrix x1;  // raw, uncentred
  Matrix x2;
  SimTruth truth;
};

/// The six (zero-based, inclusive-exclusive) variable groups over p2 = 100;
/// groups 2 and 3 overlap on [20, 30).
inline std::vector<std::vector<Index>> simulation_groups() {
  const std::vector<std::pair<Index, Index>> ranges = {{0, 10},  {10, 30}, {20, 40},
                                                       {40, 60}, {60, 90}, {90, 100}};
  std::vector<std::vector<Index>> groups;
  for (auto [lo, hi] : ranges) {
    std::vector<Index> g;
    for (Index i = lo; i < hi; ++i) g.push_back(i);
    groups.push_back(std::move(g));
  }
  return groups;
}

inline Vector default_w1_profile(Index p1) {
  detail::require(p1 == 150, "default_truth: the canonical w1 profile is defined for p1 = 150");
  Vector w = Vector::Zero(p1);
  w.segment(30, 40).setConstant(0.5);
  w.segment(70, 20).setConstant(-0.3);
  w.segment(120, 30).setConstant(0.4);
  return w;
}

inline Vector default_w2_profile(Index p2) {
  detail::require(p2 == 100, "default_truth: the canonical w2 profile is defined for p2 = 100");
  Vector w = Vector::Zero(p2);
  w.segment(10, 20).setConstant(0.4);   // group 2, including the overlap with group 3
  w.segment(30, 10).setConstant(-0.3);  // group 3 outside the overlap
  w.segment(40, 20).setConstant(0.5);   // group 4
  w.segment(60, 30).setConstant(0.2);   // group 5
  return w;
}

/// Canonical unit-norm true weights: piecewise-constant w1 (TV friendly) and
/// groupwise-constant w2 with groups 1 and 6 null.
inline std::pair<Vector, Vector> default_truth(Index p1 = 150, Index p2 = 100) {
  return {default_w1_profile(p1).normalized(), default_w2_profile(p2).normalized()};
}

inline SimData generate(const SimSpec& spec) {
  detail::require(spec.n >= 2 && spec.p1 >= 1 && spec.p2 >= 1, "generate: invalid dimensions");
  detail::require(spec.sd_t2 >= 0.0 && spec.sd_e1 >= 0.0 && spec.sd_e2 >= 0.0,
                  "generate: standard deviations must be nonnegative");
  SimData out;
  out.truth.w1 = spec.true_w1.size() ? spec.true_w1 : default_w1_profile(spec.p1).normalized();
  out.truth.w2 = spec.true_w2.size() ? spec.true_w2 : default_w2_profile(spec.p2).normalized();
  detail::require(out.truth.w1.size() == spec.p1 && out.truth.w2.size() == spec.p2,
                  "generate: true weight length mismatch");
  detail::require(out.truth.w1.norm() > 0.0 && out.truth.w2.norm() > 0.0,
                  "generate: true weights must be nonzero");

  NormalStream t1_stream(spec.seed, 1);
  NormalStream t2_stream(spec.seed, 2);
  NormalStream e1_stream(spec.seed, 3);
  NormalStream e2_stream(spec.seed, 4);

  out.truth.t1.resize(spec.n);
  out.truth.t2.resize(spec.n);
  for (Index i = 0; i < spec.n; ++i) out.truth.t1[i] = t1_stream();
  for (Index i = 0; i < spec.n; ++i) out.truth.t2[i] = out.truth.t1[i] + spec.sd_t2 * t2_stream();

  // Column-major fill: column j of E is drawn before column j + 1.
  Matrix e1(spec.n, spec.p1);
  for (Index j = 0; j < spec.p1; ++j)
    for (Index i = 0; i < spec.n; ++i) e1(i, j) = spec.sd_e1 * e1_stream();
  Matrix e2(spec.n, spec.p2);
  for (Index j = 0; j < spec.p2; ++j)
    for (Index i = 0; i < spec.n; ++i) e2(i, j) = spec.sd_e2 * e2_stream();

  out.x1 = out.truth.t1 * out.truth.w1.transpose() + e1;
  out.x2 = out.truth.t2 * out.truth.w2.transpose() + e2;
  return out;
}

struct RecoveryScore {
  double value = 0.0;
  bool degenerate = false;
};

/// |cos(w_hat, w_true)|; the absolute value absorbs the sign indeterminacy.
inline RecoveryScore recovery_score(const Vector& w_hat, const Vector& w_true) {
  detail::require(w_hat.size() == w_true.size(), "recovery_score: length mismatch");
  detail::require(w_true.norm() > 0.0, "recovery_score: true weights are zero");
  const double norm = w_hat.norm();
  if (norm == 0.0) return {0.0, true};
  return {std::abs(w_hat.dot(w_true)) / (norm * w_true.norm()), false};
}

}  // namespace rgcca
