#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ous/core.hpp"
#include "ous/error.hpp"

using namespace ous;

namespace {

ProblemSpec spec_of(std::int64_t T, double b) {
  ProblemSpec s;
  s.horizon = T;
  s.budget = b;
  return s;
}

}  // namespace

TEST(ProblemSpec, Validation) {
  EXPECT_NO_THROW(spec_of(8, 3).validate());
  EXPECT_THROW(spec_of(8, 0).validate(), InvalidParameter);
  EXPECT_THROW(spec_of(8, 8).validate(), InvalidParameter);
  EXPECT_THROW(spec_of(1, 0.5).validate(), InvalidParameter);
  auto s = spec_of(8, 3);
  s.sigma = 0.0;
  EXPECT_THROW(s.validate(), InvalidParameter);
}

TEST(PredictionInterval, Validation) {
  EXPECT_NO_THROW((PredictionInterval{0, 5}.validate(8)));
  EXPECT_THROW((PredictionInterval{6, 5}.validate(8)), InvalidInput);
  EXPECT_THROW((PredictionInterval{2, 9}.validate(8)), InvalidInput);
  EXPECT_THROW((PredictionInterval{0, 0}.validate(8)), InvalidInput);
  EXPECT_TRUE((PredictionInterval{3, 7}.contains(7)));
  EXPECT_FALSE((PredictionInterval{3, 7}.contains(8)));
}

TEST(SampleAlpha, StaysInSupport) {
  RngStream rng(1);
  for (int k = 0; k < 100000; ++k) {
    const double a = sample_alpha(3.0, rng);
    ASSERT_GE(a, 3.0);
    ASSERT_LE(a, 3.0 * kE);
  }
  EXPECT_THROW(sample_alpha(0.0, rng), InvalidParameter);
  EXPECT_THROW(sample_alpha(-1.0, rng), InvalidParameter);
}

TEST(SampleAlpha, MedianAndMean) {
  RngStream rng(2);
  const int n = 200000;
  std::vector<double> draws(n);
  for (auto& d : draws) d = sample_alpha(3.0, rng);
  double sum = 0;
  for (double d : draws) sum += d;
  std::nth_element(draws.begin(), draws.begin() + n / 2, draws.end());
  EXPECT_NEAR(draws[n / 2], 4.946163812, 0.02);
  EXPECT_NEAR(sum / n, 5.154845485, 0.01);
}

TEST(SampleAlpha, KolmogorovSmirnov) {
  RngStream rng(3);
  const int n = 100000;
  std::vector<double> draws(n);
  for (auto& d : draws) d = sample_alpha(3.0, rng);
  std::sort(draws.begin(), draws.end());
  double d_max = 0;
  for (int k = 0; k < n; ++k) {
    const double cdf = std::log(draws[k] / 3.0);
    d_max = std::max({d_max, std::abs(cdf - static_cast<double>(k) / n),
                      std::abs(cdf - static_cast<double>(k + 1) / n)});
  }
  // 1% critical value 1.628 / sqrt(n)
  EXPECT_LT(d_max, 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST(RandomizedRound, IntegralInput) {
  RngStream rng(4);
  for (int k = 0; k < 1000; ++k) ASSERT_EQ(randomized_round(5.0, rng), 5);
}

TEST(RandomizedRound, Unbiased) {
  RngStream rng(5);
  for (double x : {5.3, 0.25, 12.5, 8.154845485}) {
    const int n = 200000;
    double sum = 0;
    int low = 0;
    const auto fl = static_cast<std::int64_t>(std::floor(x));
    for (int k = 0; k < n; ++k) {
      const auto r = randomized_round(x, rng);
      ASSERT_TRUE(r == fl || r == fl + 1);
      if (r == fl) ++low;
      sum += static_cast<double>(r);
    }
    const double frac = x - std::floor(x);
    EXPECT_LT(std::abs(sum / n - x), 4 * std::sqrt(frac * (1 - frac)) / std::sqrt(n)) << x;
    EXPECT_NEAR(static_cast<double>(low) / n, 1 - frac, 0.005) << x;
  }
}

TEST(Objective, UniformSequence) {
  const std::vector<double> p{0.5, 0.5, 0.5};
  const auto r = evaluate_objective(p, 3, spec_of(8, 1.5));
  EXPECT_DOUBLE_EQ(r.sum_probs, 1.5);
  EXPECT_EQ(r.penalty, 0.0);
  EXPECT_DOUBLE_EQ(r.sol, 1.5);
  EXPECT_DOUBLE_EQ(r.competitive_ratio, 1.0);
  EXPECT_FALSE(r.sentinel);
}

TEST(Objective, TwoStepPenalty) {
  const std::vector<double> p{0.5, 0.25};
  const auto r = evaluate_objective(p, 2, spec_of(8, 1.0));
  EXPECT_NEAR(r.penalty, 0.34657359027997264, 1e-12);
  EXPECT_NEAR(r.sol, 0.40342640972002736, 1e-12);
  EXPECT_NEAR(r.competitive_ratio, 0.40342640972002736, 1e-12);
}

TEST(Objective, FourStepPenalty) {
  const std::vector<double> p{0.4, 0.2, 0.1, 0.1};
  const auto r = evaluate_objective(p, 4, spec_of(8, 1.0));
  EXPECT_NEAR(r.sum_probs, 0.8, 1e-15);
  EXPECT_NEAR(r.penalty, 0.34657359027997264, 1e-12);
  EXPECT_NEAR(r.sol, 0.45342640972002736, 1e-12);
}

TEST(Objective, MatchesFirstOverLastForMonotone) {
  RngStream rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 40);
    std::vector<double> p(n);
    double v = 0.9;
    for (auto& x : p) {
      v *= 0.5 + 0.5 * rng.uniform();
      x = std::max(v, 1e-9);
    }
    const auto r = evaluate_objective(p, n, spec_of(200, 1.0));
    EXPECT_NEAR(r.penalty, std::log(p.front() / p.back()) / n, 1e-12);
  }
}

TEST(Objective, SigmaOverrideKeepsEntropyChange) {
  auto s = spec_of(8, 1.0);
  s.sigma = 0.1;
  const std::vector<double> p{0.5, 0.25};
  const auto r = evaluate_objective(p, 2, s);
  EXPECT_NEAR(r.penalty, 0.1 * std::log(2.0), 1e-15);
  EXPECT_NEAR(r.entropy_change, 0.5 * std::log(2.0), 1e-15);
}

TEST(Objective, RejectsBadInput) {
  const auto s = spec_of(8, 1.0);
  EXPECT_THROW(evaluate_objective(std::vector<double>{0.5, 0.0}, 2, s), InvalidProbability);
  EXPECT_THROW(evaluate_objective(std::vector<double>{1.5}, 1, s), InvalidProbability);
  EXPECT_THROW(evaluate_objective(std::vector<double>{-0.1}, 1, s), InvalidProbability);
  EXPECT_THROW(evaluate_objective(std::vector<double>{std::nan("")}, 1, s), InvalidProbability);
  EXPECT_THROW(evaluate_objective(std::vector<double>{0.5, 0.5}, 3, s), InvalidInput);
  EXPECT_THROW(evaluate_objective(std::vector<double>{}, 0, s), InvalidInput);
  EXPECT_NO_THROW(evaluate_objective(std::vector<double>{1.0, 1.0, 1.0}, 3, spec_of(8, 3.0)));
}

TEST(Objective, SentinelForZero) {
  const std::vector<double> p{0.3, 0.3, 0.0};
  const auto r = evaluate_objective_or_sentinel(p, 3, spec_of(8, 1.0));
  EXPECT_TRUE(r.sentinel);
  EXPECT_EQ(r.sol, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(r.competitive_ratio, -std::numeric_limits<double>::infinity());
}

TEST(Objective, SeqRtsShapedSequence) {
  std::vector<double> p(5, 0.3);
  p.insert(p.end(), 5, 1e-6);
  const auto r = evaluate_objective(p, 10, spec_of(144, 1.5));
  EXPECT_NEAR(r.penalty, 1.2611537753638338, 1e-12);
  EXPECT_NEAR(r.sol, 0.23885122463616582, 1e-12);
}

TEST(Objective, AccumulatorPrefixesMatchBatch) {
  const std::vector<double> p{0.6, 0.4, 0.4, 0.2, 0.1};
  ObjectiveAccumulator acc;
  const auto s = spec_of(10, 2.0);
  for (std::size_t t = 0; t < p.size(); ++t) {
    acc.add(p[t]);
    const auto batch = evaluate_objective(std::span<const double>(p.data(), t + 1),
                                          static_cast<std::int64_t>(t + 1), s);
    const auto streamed = acc.report(s);
    EXPECT_DOUBLE_EQ(streamed.sol, batch.sol);
    EXPECT_DOUBLE_EQ(streamed.penalty, batch.penalty);
  }
  EXPECT_DOUBLE_EQ(acc.report_without_penalty(s).sol, 1.7);
}

TEST(RunningStats, ConstantInputHasZeroStderr) {
  RunningStats a, b;
  for (int k = 0; k < 300; ++k) a.add(0.875);
  for (int k = 0; k < 77; ++k) b.add(0.875);
  a.merge(b);
  EXPECT_EQ(a.count(), 377);
  EXPECT_EQ(a.mean(), 0.875);
  EXPECT_EQ(a.stderr_of_mean(), 0.0);
}

TEST(RunningStats, MergeMatchesSequential) {
  RngStream rng(7);
  RunningStats all, left, right;
  for (int k = 0; k < 1000; ++k) {
    const double x = rng.uniform();
    all.add(x);
    (k < 400 ? left : right).add(x);
  }
  left.merge(right);
  EXPECT_NEAR(left.mean(), all.mean(), 1e-14);
  EXPECT_NEAR(left.variance(), all.variance(), 1e-14);
  EXPECT_NEAR(all.stderr_of_mean(), std::sqrt(all.variance() / 1000.0), 1e-15);
}

TEST(RunningStats, Infinity) {
  RunningStats s;
  s.add(0.5);
  s.add(-std::numeric_limits<double>::infinity());
  EXPECT_TRUE(s.has_infinite());
  EXPECT_EQ(s.mean(), -std::numeric_limits<double>::infinity());
}

TEST(Theory, RandomizedValues) {
  EXPECT_NEAR(theoretical_cr_rand(8, 3), 0.41323955070509666, 1e-12);
  EXPECT_NEAR(theoretical_cr_rand(22, 3), 0.36787944117144233, 1e-12);
  EXPECT_NEAR(theoretical_cr_rand(100, 3), 0.23254415793482963, 1e-12);
  EXPECT_THROW(theoretical_cr_rand(3, 3), InvalidParameter);
}

TEST(Theory, LearningValues) {
  EXPECT_NEAR(theoretical_cr_learn(8, 3), 0.4032091913370931, 1e-12);
  EXPECT_NEAR(theoretical_cr_learn(22, 3), 0.36787944117144233, 1e-12);
  EXPECT_NEAR(theoretical_cr_learn(100, 3), 0.264674335944481, 1e-12);
  EXPECT_THROW(theoretical_cr_learn(0, 3), InvalidParameter);
}

TEST(Theory, BranchBoundaries) {
  // b = 3: be = 8.15, be^2 = 22.17
  EXPECT_EQ(classify_horizon(8, 3), HorizonRegime::kShort);
  EXPECT_EQ(classify_horizon(9, 3), HorizonRegime::kMedium);
  EXPECT_EQ(classify_horizon(22, 3), HorizonRegime::kMedium);
  EXPECT_EQ(classify_horizon(23, 3), HorizonRegime::kLong);
  // exact boundary is inclusive
  EXPECT_EQ(classify_horizon(kE, 1.0), HorizonRegime::kShort);
  EXPECT_EQ(classify_horizon(kE * kE, 1.0), HorizonRegime::kMedium);
  EXPECT_EQ(classify_horizon(std::nextafter(kE * kE, 100.0), 1.0), HorizonRegime::kLong);
  EXPECT_EQ(theoretical_cr_rand(9, 3), 1 / kE);
  EXPECT_EQ(theoretical_cr_rand(23, 3), 1 / kE - 1 / (kE * kE));
  EXPECT_EQ(theoretical_cr_learn(9, 3), 1 / kE);
  EXPECT_NE(theoretical_cr_learn(8, 3), theoretical_cr_learn(9, 3));
  EXPECT_NE(theoretical_cr_learn(22, 3), theoretical_cr_learn(23, 3));
}

TEST(Theory, Labels) {
  EXPECT_EQ(regime_label(classify_horizon(9, 3), 'T'), "be < T <= be^2");
  EXPECT_EQ(regime_label(HorizonRegime::kShort, 'U'), "U <= be");
  EXPECT_EQ(regime_label(HorizonRegime::kLong, 'T'), "T > be^2");
}

TEST(Rng, DeriveIgnoresPosition) {
  RngStream a(42);
  const auto child = a.derive(3);
  a.next_u64();
  a.next_u64();
  EXPECT_EQ(a.derive(3).seed(), child.seed());
  EXPECT_NE(a.derive(4).seed(), child.seed());
  RngStream x(9), y(9);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(x.next_u64(), y.next_u64());
}
