// Copyright 2026 The RootProbe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rootprobe/surrogate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "ridge_oracle.hpp"
#include "rootprobe/models.hpp"
#include "rootprobe/text.hpp"

namespace rootprobe {
namespace {

const char kQuestion[] = "What type of rock is found at the Grand Canyon?";
const char kContext[] =
    "The Grand Canyon in Arizona is a steep-sided canyon carved by the Colorado River. "
    "The rock found at the Grand Canyon is mostly sedimentary, laid down in ancient seas.";
constexpr std::size_t kSedimentary = 23;

SurrogateConfig Config(std::size_t samples, std::uint64_t seed) {
  SurrogateConfig c;
  c.n_samples = samples;
  c.seed = seed;
  return c;
}

// Wraps a model and counts predict calls.
class CountingAnswerer final : public Answerer {
 public:
  explicit CountingAnswerer(const Answerer& inner) : inner_(inner) {}
  AnswererKind kind() const override { return inner_.kind(); }
  AnswerPrediction predict_unchecked(std::string_view q, std::string_view c) const override {
    ++calls_;
    return inner_.predict(q, c);
  }
  int calls() const { return calls_; }

 private:
  const Answerer& inner_;
  mutable std::atomic<int> calls_{0};
};

// Start distribution that ignores the question.
class ConstantAnswerer final : public Answerer {
 public:
  AnswererKind kind() const override { return AnswererKind::kScripted; }
  AnswerPrediction predict_unchecked(std::string_view, std::string_view) const override {
    return make_prediction({"a", "b", "c", "d"}, {0.1, 0.2, 0.3, 0.4}, 3, 3);
  }
};

TEST(SampleMasks, SingleWordAlwaysAllOnes) {
  for (const auto& m : sample_masks(1, Config(50, 3))) EXPECT_EQ(m, Mask::all_ones(1));
  EXPECT_EQ(sample_masks(1, Config(50, 3)).size(), 51);
}

TEST(SampleMasks, ZeroSamplesGivesOriginalOnly) {
  const auto masks = sample_masks(6, Config(0, 1));
  ASSERT_EQ(masks.size(), 1);
  EXPECT_EQ(masks[0], Mask::all_ones(6));
}

TEST(SampleMasks, ReproducibleAndWellFormed) {
  const auto a = sample_masks(3, Config(200, 77));
  EXPECT_EQ(a, sample_masks(3, Config(200, 77)));
  EXPECT_NE(a, sample_masks(3, Config(200, 78)));
  EXPECT_EQ(a[0], Mask::all_ones(3));
  for (std::size_t i = 1; i < a.size(); ++i) {
    EXPECT_GE(a[i].popcount(), 1);
    EXPECT_LE(a[i].popcount(), 2);
  }
  EXPECT_THROW(sample_masks(0, Config(5, 1)), ContractViolation);
}

// k removed is uniform over 1..n-1 and each position is removed equally often.
TEST(SampleMasks, RemovalCountsRoughlyUniform) {
  const std::size_t n = 5, samples = 20000;
  const auto masks = sample_masks(n, Config(samples, 2024));
  std::vector<int> by_k(n, 0), by_pos(n, 0);
  for (std::size_t i = 1; i < masks.size(); ++i) {
    ++by_k[n - masks[i].popcount()];
    for (std::size_t j = 0; j < n; ++j) by_pos[j] += !masks[i][j];
  }
  EXPECT_EQ(by_k[0], 0);
  for (std::size_t k = 1; k < n; ++k) EXPECT_NEAR(by_k[k], samples / 4.0, samples * 0.02);
  // Expected removals per position: mean k / n = 2.5 / 5 per sample.
  for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(by_pos[j], samples * 0.5, samples * 0.02);
}

TEST(ExampleSeed, StableAndSensitive) {
  EXPECT_EQ(example_seed(7, "q1"), example_seed(7, "q1"));
  EXPECT_NE(example_seed(7, "q1"), example_seed(7, "q2"));
  EXPECT_NE(example_seed(7, "q1"), example_seed(8, "q1"));
}

TEST(MaskDistance, Examples) {
  EXPECT_EQ(mask_distance(Mask::all_ones(7)), 0.0);
  EXPECT_EQ(mask_distance(Mask{{true, false, false, false}}), 50.0);
  EXPECT_THROW(mask_distance(Mask{{false, false}}), ContractViolation);
}

TEST(MaskDistance, ShrinksAsOneRemovalBecomesSmallerFraction) {
  double prev = 1e9;
  for (std::size_t n = 2; n < 200; ++n) {
    Mask m = Mask::all_ones(n);
    m.keep[0] = false;
    const double d = mask_distance(m);
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 0.3);
}

TEST(Kernel, Values) {
  EXPECT_EQ(kernel(0.0, 25.0), 1.0);
  EXPECT_NEAR(kernel(25.0, 25.0), 0.36787944117144233, 1e-15);
  EXPECT_THROW(kernel(1.0, 0.0), ContractViolation);
  double prev = 2.0;
  for (double d = 0.0; d <= 200.0; d += 0.5) {
    const double k = kernel(d, 25.0);
    EXPECT_LT(k, prev);
    EXPECT_GT(k, 0.0);
    prev = k;
  }
}

TEST(Ridge, TwoPointLine) {
  Eigen::MatrixXd x(2, 1);
  x << 0, 1;
  const std::vector<double> y = {0, 1}, w = {1, 1};
  const auto fit = fit_weighted_ridge(x, y, w, 0.0);
  EXPECT_NEAR(fit.coefficients[0], 1.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-12);
}

TEST(Ridge, ConstantTargetsGiveZeroCoefficients) {
  std::mt19937 rng(1);
  for (double alpha : {0.0, 0.5, 10.0}) {
    Eigen::MatrixXd x(6, 3);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 3; ++j) x(i, j) = static_cast<double>(rng() % 2);
    const std::vector<double> y(6, 0.37), w = {1, 0.5, 0.2, 0.9, 0.3, 0.7};
    const auto fit = fit_weighted_ridge(x, y, w, alpha);
    EXPECT_EQ(fit.coefficients, std::vector<double>(3, 0.0));
    EXPECT_EQ(fit.intercept, 0.37);
  }
}

TEST(Ridge, MatchesBruteForceOracle) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 5, cols = 3;
    Eigen::MatrixXd x(rows, cols);
    std::vector<std::vector<double>> design(rows, std::vector<double>(cols));
    std::vector<double> y(rows), w(rows);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) design[i][j] = x(i, j) = static_cast<double>(rng() % 2);
      y[i] = unit(rng);
      w[i] = 0.05 + unit(rng);
    }
    const auto fit = fit_weighted_ridge(x, y, w, 1.0);
    const auto expected = testing::brute_force_ridge(design, y, w, 1.0);
    for (int j = 0; j < cols; ++j) EXPECT_NEAR(fit.coefficients[j], expected[j], 1e-8);
    EXPECT_NEAR(fit.intercept, expected[cols], 1e-8);
  }
}

TEST(Ridge, RecoversExactLinearTargetWithoutPenalty) {
  std::mt19937 rng(8);
  const std::vector<double> beta = {0.25, -0.5, 0.125, 0.75};
  const double b = 0.1;
  const int rows = 40;
  Eigen::MatrixXd x(rows, 4);
  std::vector<double> y(rows), w(rows);
  for (int i = 0; i < rows; ++i) {
    y[i] = b;
    for (int j = 0; j < 4; ++j) {
      x(i, j) = static_cast<double>(rng() % 2);
      y[i] += beta[j] * x(i, j);
    }
    w[i] = kernel(static_cast<double>(rng() % 80), 25.0);
  }
  const auto fit = fit_weighted_ridge(x, y, w, 0.0);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(fit.coefficients[j], beta[j], 1e-10);
  EXPECT_NEAR(fit.intercept, b, 1e-10);
}

TEST(Ridge, ColumnPermutationPermutesCoefficients) {
  std::mt19937 rng(12);
  Eigen::MatrixXd x(8, 3);
  std::vector<double> y(8), w(8, 1.0);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = static_cast<double>(rng() % 2);
    y[i] = static_cast<double>(rng() % 100) / 100.0;
  }
  const std::vector<int> perm = {2, 0, 1};
  Eigen::MatrixXd xp(8, 3);
  for (int j = 0; j < 3; ++j) xp.col(j) = x.col(perm[j]);
  const auto a = fit_weighted_ridge(x, y, w, 1.0);
  const auto b = fit_weighted_ridge(xp, y, w, 1.0);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(b.coefficients[j], a.coefficients[perm[j]], 1e-12);
}

TEST(Ridge, Errors) {
  Eigen::MatrixXd x(3, 2);
  x << 1, 1, 0, 0, 1, 1;  // duplicate columns
  const std::vector<double> y = {1, 0, 0.5}, w = {1, 1, 1};
  EXPECT_THROW(fit_weighted_ridge(x, y, w, 0.0), SingularSystemError);
  EXPECT_NO_THROW(fit_weighted_ridge(x, y, w, 0.1));
  EXPECT_THROW(fit_weighted_ridge(x, std::vector<double>{1, 0}, w, 1.0), ContractViolation);
  EXPECT_THROW(fit_weighted_ridge(x, y, std::vector<double>{1, 0, 1}, 1.0), ContractViolation);
  EXPECT_THROW(fit_weighted_ridge(Eigen::MatrixXd(0, 2), {}, {}, 1.0), ContractViolation);
}

TEST(Explain, KeywordOracleAttributionOver100Seeds) {
  KeywordOracle oracle("type", kSedimentary);
  const auto question = tokenize(kQuestion);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto e = explain(question, kContext, oracle, kSedimentary, Config(300, seed));
    ASSERT_EQ(e.coefficients.size(), 10);
    const auto best = std::max_element(e.coefficients.begin(), e.coefficients.end());
    EXPECT_EQ(best - e.coefficients.begin(), 1) << "seed " << seed;
    EXPECT_EQ(std::count(e.coefficients.begin(), e.coefficients.end(), *best), 1);
  }
}

TEST(Explain, ConstantModelGivesZeroCoefficients) {
  ConstantAnswerer model;
  const auto e = explain(tokenize(kQuestion), kContext, model, 2, Config(100, 4));
  EXPECT_EQ(e.coefficients, std::vector<double>(10, 0.0));
  EXPECT_EQ(e.intercept, 0.3);
  EXPECT_EQ(e.target_class, 2);
  EXPECT_EQ(e.n_words, 10);
}

TEST(Explain, ZeroSamplesIsDegenerateFit) {
  BaselineAnswerer model;
  const auto question = tokenize(kQuestion);
  const auto full = model.predict(apply_mask(question, Mask::all_ones(10)), kContext);
  const auto e = explain(question, kContext, model, kSedimentary, Config(0, 4));
  EXPECT_EQ(e.coefficients, std::vector<double>(10, 0.0));
  EXPECT_EQ(e.intercept, full.start_distribution[kSedimentary]);
}

TEST(Explain, DeterministicGivenSeed) {
  BaselineAnswerer model;
  const auto q = tokenize(kQuestion);
  const auto a = explain(q, kContext, model, kSedimentary, Config(200, 9));
  const auto b = explain(q, kContext, model, kSedimentary, Config(200, 9));
  EXPECT_EQ(a.coefficients, b.coefficients);
  EXPECT_EQ(a.intercept, b.intercept);
}

TEST(Explain, TargetOutOfRange) {
  BaselineAnswerer model;
  EXPECT_THROW(explain(tokenize(kQuestion), kContext, model, 10000, Config(10, 1)),
               ContractViolation);
}

// A second class reuses the same masks and weights; only targets change, and
// no further model calls are made.
TEST(Explain, MulticlassSharesNeighborhood) {
  BaselineAnswerer baseline;
  CountingAnswerer model(baseline);
  const auto q = tokenize(kQuestion);
  PredictionCache cache;
  const auto hood = build_neighborhood(q, kContext, model, Config(300, 5), cache);
  const int calls = model.calls();
  EXPECT_EQ(static_cast<std::size_t>(calls), cache.size());
  EXPECT_LE(calls, 301);
  const auto first = fit_class(hood, kSedimentary);
  const auto second = fit_class(hood, 12);
  EXPECT_EQ(model.calls(), calls);

  const auto s1 = samples_for_class(hood, kSedimentary);
  const auto s2 = samples_for_class(hood, 12);
  for (std::size_t i = 0; i < s1.size(); ++i) {
    EXPECT_EQ(s1[i].mask, s2[i].mask);
    EXPECT_EQ(s1[i].weight, s2[i].weight);
  }
  EXPECT_EQ(s1[0].weight, 1.0);
  EXPECT_EQ(s1[0].mask, Mask::all_ones(10));

  // Same result as a fresh explain for that class.
  const auto fresh = explain(q, kContext, baseline, 12, Config(300, 5));
  EXPECT_EQ(second.coefficients, fresh.coefficients);
  EXPECT_NE(first.coefficients, second.coefficients);
}

// Permuting the question words (and the masks with them) permutes the
// coefficients when the model ignores word order.
TEST(Explain, PermutationEquivariance) {
  KeywordOracle oracle("type", kSedimentary);
  const std::vector<std::string> words = {"What", "type", "of", "rock", "is", "found"};
  const std::vector<std::size_t> perm = {3, 5, 0, 1, 4, 2};  // new[i] = old[perm[i]]
  std::vector<std::string> permuted;
  for (auto p : perm) permuted.push_back(words[p]);
  const auto q = tokenize(join(words));
  const auto qp = tokenize(join(permuted));

  const auto config = Config(400, 21);
  const auto masks = sample_masks(words.size(), config);
  std::vector<Mask> permuted_masks;
  for (const auto& m : masks) {
    Mask pm;
    for (auto p : perm) pm.keep.push_back(m[p]);
    permuted_masks.push_back(pm);
  }
  PredictionCache c1, c2;
  const auto a = fit_class(build_neighborhood(q, kContext, oracle, masks, config, c1), kSedimentary);
  const auto b =
      fit_class(build_neighborhood(qp, kContext, oracle, permuted_masks, config, c2), kSedimentary);
  for (std::size_t i = 0; i < perm.size(); ++i)
    EXPECT_NEAR(b.coefficients[i], a.coefficients[perm[i]], 1e-12);
}

TEST(PredictionCache, QueriesEachMaskOnce) {
  BaselineAnswerer baseline;
  CountingAnswerer model(baseline);
  const auto q = tokenize(kQuestion);
  PredictionCache cache;
  const Mask m{{true, true, false, true, false, true, true, true, true, true}};
  const auto& a = cache.get(model, q, kContext, m);
  const auto& b = cache.get(model, q, kContext, m);
  EXPECT_EQ(&a, &b);
  EXPECT_EQ(model.calls(), 1);
}

TEST(PredictionCache, ModelErrorCarriesMask) {
  KeywordOracle broken("type", 10000);
  const auto q = tokenize(kQuestion);
  PredictionCache cache;
  try {
    explain(q, kContext, broken, 0, Config(5, 1), &cache);
    FAIL();
  } catch (const SampleQueryError& e) {
    EXPECT_EQ(e.mask(), Mask::all_ones(10));
  }
}

}  // namespace
}  // namespace rootprobe
