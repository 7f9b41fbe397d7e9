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

#ifndef ROOTPROBE_SURROGATE_HPP_
#define ROOTPROBE_SURROGATE_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rootprobe/errors.hpp"
#include "rootprobe/models.hpp"
#include "rootprobe/text.hpp"

namespace rootprobe {

// n_samples counts perturbations in addition to the original question; zero
// is accepted and yields a one-row (degenerate) fit.
struct SurrogateConfig {
  std::size_t n_samples = 1000;
  double kernel_width = 25.0;  // on the x100 cosine-distance scale
  double ridge_alpha = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(kernel_width > 0.0)) throw ContractViolation("surrogate: kernel_width must be > 0");
    if (!(ridge_alpha >= 0.0)) throw ContractViolation("surrogate: ridge_alpha must be >= 0");
  }

  friend bool operator==(const SurrogateConfig&, const SurrogateConfig&) = default;
};

struct PerturbationSample {
  Mask mask;
  std::string reduced_question;
  double target_prob = 0.0;
  double distance = 0.0;
  double weight = 1.0;
};

struct Explanation {
  std::vector<double> coefficients;  // one per question word
  double intercept = 0.0;
  std::size_t target_class = 0;
  SurrogateConfig config;
  std::size_t n_words = 0;
  std::vector<std::string> words;
};

// A model failure while scoring one perturbation.
class SampleQueryError : public ModelError {
 public:
  SampleQueryError(const std::string& what, Mask mask, bool retryable)
      : ModelError(what, retryable), mask_(std::move(mask)) {}
  const Mask& mask() const { return mask_; }

 private:
  Mask mask_;
};

// ---------------------------------------------------------------------------
// Seeding.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stable across runs, platforms and batch order.
inline std::uint64_t example_seed(std::uint64_t seed, std::string_view example_id) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : example_id) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

// Unbiased draw from [0, n).
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t reject_below = (0 - n) % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x < reject_below);
  return x % n;
}

// ---------------------------------------------------------------------------
// Sampling, distance, kernel.

// Mask 0 is the original question. Every other mask removes k words, k drawn
// uniformly from [1, n_words - 1], positions a uniform distinct subset.
inline std::vector<Mask> sample_masks(std::size_t n_words, const SurrogateConfig& config) {
  if (n_words < 1) throw ContractViolation("sample_masks: question has no words");
  std::vector<Mask> masks;
  masks.reserve(config.n_samples + 1);
  masks.push_back(Mask::all_ones(n_words));
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> positions(n_words);
  for (std::size_t s = 0; s < config.n_samples; ++s) {
    Mask m = Mask::all_ones(n_words);
    if (n_words > 1) {
      const std::size_t remove = 1 + uniform_below(rng, n_words - 1);
      for (std::size_t i = 0; i < n_words; ++i) positions[i] = i;
      for (std::size_t i = 0; i < remove; ++i) {
        const std::size_t j = i + uniform_below(rng, n_words - i);
        std::swap(positions[i], positions[j]);
        m.keep[positions[i]] = false;
      }
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

// 100 * (1 - cosine(mask, all-ones)) = 100 * (1 - sqrt(k / n)).
inline double mask_distance(const Mask& mask) {
  const auto k = static_cast<double>(mask.popcount());
  if (k < 1) throw ContractViolation("mask_distance: mask keeps no words");
  return 100.0 * (1.0 - std::sqrt(k / static_cast<double>(mask.size())));
}

inline double kernel(double distance, double width) {
  if (!(width > 0.0)) throw ContractViolation("kernel: width must be > 0");
  return std::exp(-(distance * distance) / (width * width));
}

// ---------------------------------------------------------------------------
// Weighted ridge.

struct RidgeFit {
  std::vector<double> coefficients;
  double intercept = 0.0;
};

// Minimizes sum_i w_i (y_i - b - x_i . beta)^2 + alpha |beta|^2 through the
// weighted normal equations of [X | 1]; the intercept is not penalized.
inline RidgeFit fit_weighted_ridge(const Eigen::MatrixXd& design,
                                   std::span<const double> targets,
                                   std::span<const double> weights, double alpha) {
  const auto rows = static_cast<std::size_t>(design.rows());
  const auto cols = static_cast<std::size_t>(design.cols());
  if (rows == 0) throw ContractViolation("fit_weighted_ridge: no rows");
  if (targets.size() != rows || weights.size() != rows)
    throw ContractViolation("fit_weighted_ridge: design, targets and weights disagree in length");
  if (!(alpha >= 0.0)) throw ContractViolation("fit_weighted_ridge: alpha must be >= 0");
  for (double w : weights)
    if (!(w > 0.0)) throw ContractViolation("fit_weighted_ridge: weights must be positive");

  RidgeFit fit;
  fit.coefficients.assign(cols, 0.0);
  // Constant targets: beta = 0 is the exact minimizer for any alpha.
  bool constant = true;
  for (double y : targets) constant = constant && y == targets[0];
  if (constant) {
    fit.intercept = targets[0];
    return fit;
  }

  const Eigen::Index p = static_cast<Eigen::Index>(cols);
  Eigen::MatrixXd augmented(design.rows(), p + 1);
  augmented.leftCols(p) = design;
  augmented.col(p).setOnes();
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), design.rows());
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), design.rows());

  Eigen::MatrixXd normal = augmented.transpose() * w.asDiagonal() * augmented;
  normal.diagonal().head(p).array() += alpha;
  const Eigen::VectorXd rhs = augmented.transpose() * w.cwiseProduct(y);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
  if (!qr.isInvertible())
    throw SingularSystemError(
        "fit_weighted_ridge: normal equations are singular; use ridge alpha > 0");
  const Eigen::VectorXd solution = qr.solve(rhs);
  for (Eigen::Index j = 0; j < p; ++j) fit.coefficients[static_cast<std::size_t>(j)] = solution(j);
  fit.intercept = solution(p);
  return fit;
}

// ---------------------------------------------------------------------------
// Explanation.

// Model predictions per mask for one (question, context) pair. Shared by
// multiclass inspection and the reducer so each mask is queried once.
class PredictionCache {
 public:
  const AnswerPrediction& get(const Answerer& answerer, const TokenizedText& question,
                              std::string_view context, const Mask& mask) {
    auto it = cache_.find(mask);
    if (it != cache_.end()) return it->second;
    const std::string reduced = apply_mask(question, mask);
    try {
      return cache_.emplace(mask, answerer.predict(reduced, context)).first->second;
    } catch (const SampleQueryError&) {
      throw;
    } catch (const ModelError& e) {
      throw SampleQueryError(std::string(e.what()) + " (perturbation '" + reduced + "')", mask,
                             e.retryable());
    }
  }

  std::size_t size() const { return cache_.size(); }

 private:
  std::map<Mask, AnswerPrediction> cache_;
};

// Sampled perturbations with their weights, plus the model's answer for each.
struct Neighborhood {
  std::vector<PerturbationSample> samples;  // target_prob is per class, see samples_for_class
  std::vector<const AnswerPrediction*> predictions;
  std::size_t n_words = 0;
  std::vector<std::string> words;
  SurrogateConfig config;
};

// Scores a given mask set; mask 0 should be the original question.
inline Neighborhood build_neighborhood(const TokenizedText& question, std::string_view context,
                                       const Answerer& answerer, std::vector<Mask> masks,
                                       const SurrogateConfig& config, PredictionCache& cache) {
  config.validate();
  Neighborhood hood;
  hood.n_words = question.word_count();
  hood.words = question.words();
  hood.config = config;
  for (auto& mask : masks) {
    PerturbationSample s;
    s.reduced_question = apply_mask(question, mask);
    s.distance = mask_distance(mask);
    s.weight = kernel(s.distance, config.kernel_width);
    hood.predictions.push_back(&cache.get(answerer, question, context, mask));
    s.mask = std::move(mask);
    hood.samples.push_back(std::move(s));
  }
  return hood;
}

inline Neighborhood build_neighborhood(const TokenizedText& question, std::string_view context,
                                       const Answerer& answerer, const SurrogateConfig& config,
                                       PredictionCache& cache) {
  return build_neighborhood(question, context, answerer,
                            sample_masks(question.word_count(), config), config, cache);
}

// The neighborhood's samples with target_prob read for one class.
inline std::vector<PerturbationSample> samples_for_class(const Neighborhood& hood,
                                                         std::size_t target_class) {
  std::vector<PerturbationSample> out = hood.samples;
  for (std::size_t r = 0; r < out.size(); ++r) {
    const auto& dist = hood.predictions[r]->start_distribution;
    if (target_class >= dist.size())
      throw ContractViolation("target class " + std::to_string(target_class) +
                              " out of range for " + std::to_string(dist.size()) +
                              " context tokens");
    out[r].target_prob = dist[target_class];
  }
  return out;
}

// Fits the surrogate for one class over an existing neighborhood; no model
// calls.
inline Explanation fit_class(const Neighborhood& hood, std::size_t target_class) {
  const std::size_t rows = hood.samples.size();
  Eigen::MatrixXd design(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(hood.n_words));
  std::vector<double> targets(rows), weights(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& dist = hood.predictions[r]->start_distribution;
    if (target_class >= dist.size())
      throw ContractViolation("explain: target class " + std::to_string(target_class) +
                              " out of range for " + std::to_string(dist.size()) +
                              " context tokens");
    targets[r] = dist[target_class];
    weights[r] = hood.samples[r].weight;
    for (std::size_t c = 0; c < hood.n_words; ++c)
      design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          hood.samples[r].mask[c] ? 1.0 : 0.0;
  }
  auto fit = fit_weighted_ridge(design, targets, weights, hood.config.ridge_alpha);
  Explanation e;
  e.coefficients = std::move(fit.coefficients);
  e.intercept = fit.intercept;
  e.target_class = target_class;
  e.config = hood.config;
  e.n_words = hood.n_words;
  e.words = hood.words;
  return e;
}

// Per-word surrogate coefficients for the probability that the answer starts
// at target_class. Deterministic given config.seed and a deterministic model.
inline Explanation explain(const TokenizedText& question, std::string_view context,
                           const Answerer& answerer, std::size_t target_class,
                           const SurrogateConfig& config, PredictionCache* cache = nullptr) {
  if (question.word_count() < 1) throw ContractViolation("explain: question has no words");
  PredictionCache local;
  PredictionCache& c = cache != nullptr ? *cache : local;
  return fit_class(build_neighborhood(question, context, answerer, config, c), target_class);
}

}  // namespace rootprobe

#endif  // ROOTPROBE_SURROGATE_HPP_
