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

#ifndef ROOTPROBE_REDUCER_HPP_
#define ROOTPROBE_REDUCER_HPP_

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rootprobe/dataset.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/models.hpp"
#include "rootprobe/surrogate.hpp"
#include "rootprobe/text.hpp"

namespace rootprobe {

struct ReductionStep {
  Mask mask;
  std::string reduced_question;
  AnswerPrediction prediction;
  bool matched = false;
  std::size_t word_count = 0;
};

// Steps run from the full question (n words) down to a single word.
struct ReductionTrace {
  std::string example_id;
  Explanation explanation;
  std::vector<ReductionStep> steps;
  std::size_t root_step_index = 0;
};

struct RootQuestion {
  std::vector<std::string> words;
  std::size_t word_count = 0;
  double percent_removed = 0.0;  // fraction in [0, 1)
};

// Raised when the model fails part-way; carries the steps completed so far.
class PartialTraceError : public ModelError {
 public:
  PartialTraceError(const std::string& what, std::vector<ReductionStep> steps, bool retryable)
      : ModelError(what, retryable), steps_(std::move(steps)) {}
  const std::vector<ReductionStep>& steps() const { return steps_; }

 private:
  std::vector<ReductionStep> steps_;
};

struct ReduceOptions {
  // Re-fit the surrogate on the surviving words before each removal instead
  // of freezing the order from the full-question fit.
  bool recompute_coefficients = false;
  SurrogateConfig config;
};

// Word indices by ascending coefficient; equal coefficients keep position
// order.
inline std::vector<std::size_t> removal_order(const Explanation& explanation) {
  if (explanation.coefficients.empty())
    throw ContractViolation("removal_order: explanation has no coefficients");
  std::vector<std::size_t> order(explanation.coefficients.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return explanation.coefficients[a] < explanation.coefficients[b];
  });
  return order;
}

inline std::optional<std::size_t> shortest_matched_step(const std::vector<ReductionStep>& steps) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < steps.size(); ++i)
    if (steps[i].matched && (!best || steps[i].word_count < steps[*best].word_count)) best = i;
  return best;
}

namespace reducer_internal {

// Lowest-coefficient surviving word after re-fitting on the surviving words.
inline std::size_t refit_lowest(const TokenizedText& question, const Mask& mask,
                                const std::string& context, const Answerer& answerer,
                                std::size_t target_class, SurrogateConfig config,
                                std::size_t step) {
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) survivors.push_back(i);
  config.seed = splitmix64(config.seed + step);
  const auto sub = explain(tokenize(apply_mask(question, mask)), context, answerer,
                           target_class, config);
  return survivors[removal_order(sub).front()];
}

}  // namespace reducer_internal

// Removes one word at a time, lowest coefficient first, asking the model
// after each removal until one word is left. Unmatched steps do not stop the
// scan; the root is the matched step with the fewest words.
inline ReductionTrace reduce(const QaExample& example, const Explanation& explanation,
                             const Answerer& answerer, const ReduceOptions& options = {},
                             PredictionCache* cache = nullptr) {
  const TokenizedText question = tokenize(example.question);
  const std::size_t n = question.word_count();
  if (n == 0) throw ContractViolation("reduce: question has no words");
  if (explanation.coefficients.size() != n)
    throw ContractViolation("reduce: explanation covers " +
                            std::to_string(explanation.coefficients.size()) +
                            " words, question has " + std::to_string(n));
  PredictionCache local;
  PredictionCache& c = cache != nullptr ? *cache : local;
  const auto truths = example.answer_texts();
  const auto order = removal_order(explanation);

  ReductionTrace trace;
  trace.example_id = example.id;
  trace.explanation = explanation;
  Mask mask = Mask::all_ones(n);
  for (std::size_t step = 0; step < n; ++step) {
    if (step > 0) {
      const std::size_t drop =
          options.recompute_coefficients
              ? reducer_internal::refit_lowest(question, mask, example.context, answerer,
                                               explanation.target_class, options.config, step)
              : order[step - 1];
      mask.keep[drop] = false;
    }
    ReductionStep s;
    s.mask = mask;
    s.reduced_question = apply_mask(question, mask);
    s.word_count = mask.popcount();
    try {
      s.prediction = c.get(answerer, question, example.context, mask);
    } catch (const ModelError& e) {
      throw PartialTraceError("reduce " + example.id + ": step " + std::to_string(step) +
                                  ": " + e.what(),
                              std::move(trace.steps), e.retryable());
    }
    s.matched = answer_matches(s.prediction, truths);
    trace.steps.push_back(std::move(s));
  }

  const auto root = shortest_matched_step(trace.steps);
  if (!root)
    throw ContractViolation("reduce " + example.id +
                            ": no step matched; the full question must be answered correctly");
  trace.root_step_index = *root;
  return trace;
}

// The shortest matched form of the question, even when it follows a run of
// unmatched steps.
inline RootQuestion find_root(const ReductionTrace& trace) {
  const auto root = shortest_matched_step(trace.steps);
  if (!root || trace.steps.empty())
    throw ContractViolation("find_root: trace " + trace.example_id + " has no matched step");
  const auto& step = trace.steps[*root];
  const std::size_t n = trace.steps.front().mask.size();
  RootQuestion r;
  r.words = split_words(step.reduced_question);
  r.word_count = step.word_count;
  r.percent_removed = static_cast<double>(n - step.word_count) / static_cast<double>(n);
  return r;
}

}  // namespace rootprobe

#endif  // ROOTPROBE_REDUCER_HPP_
