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

#ifndef ROOTPROBE_PIPELINE_HPP_
#define ROOTPROBE_PIPELINE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "rootprobe/dataset.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/models.hpp"
#include "rootprobe/parallel.hpp"
#include "rootprobe/reducer.hpp"
#include "rootprobe/surrogate.hpp"
#include "rootprobe/text.hpp"

namespace rootprobe {

// Treats each model context token as one word token of a synthetic text.
inline TokenizedText tokens_as_text(const std::vector<std::string>& tokens) {
  TokenizedText t;
  for (const auto& tok : tokens) {
    if (!t.raw.empty()) t.raw += ' ';
    const std::size_t start = t.raw.size();
    t.raw += tok;
    t.tokens.push_back({tok, start, t.raw.size(), true});
  }
  return t;
}

// Ground-truth class in the model's own context tokenization. When the model
// tokenizes the context exactly as we do, character offsets are used;
// otherwise the first answer word is matched against the model's tokens.
inline std::size_t resolve_target(const QaExample& example, const AnswerPrediction& full) {
  const TokenizedText ctx = tokenize(example.context);
  const bool aligned = ctx.words() == full.context_tokens;
  const TokenizedText model_ctx = aligned ? ctx : tokens_as_text(full.context_tokens);
  std::string reasons;
  for (const auto& answer : example.answers) {
    try {
      return locate_target_class(model_ctx, answer.text,
                                 aligned ? answer.answer_start_char : std::nullopt);
    } catch (const TargetNotFound& e) {
      reasons += std::string(reasons.empty() ? "" : "; ") + e.what();
    }
  }
  throw TargetNotFound("example " + example.id + ": " + reasons);
}

struct AnalysisOptions {
  SurrogateConfig surrogate;  // seed is the run seed; each example derives its own
  bool recompute_coefficients = false;
};

// Explain, then reduce, one example. The surrogate seed is derived from the
// run seed and the example id.
inline ReductionTrace analyze_example(const QaExample& example, const Answerer& answerer,
                                      const AnalysisOptions& options) {
  SurrogateConfig config = options.surrogate;
  config.seed = example_seed(options.surrogate.seed, example.id);
  const TokenizedText question = tokenize(example.question);
  if (question.word_count() == 0)
    throw ContractViolation("example " + example.id + ": question has no words");

  PredictionCache cache;
  const auto& full =
      cache.get(answerer, question, example.context, Mask::all_ones(question.word_count()));
  const std::size_t target = resolve_target(example, full);
  const Explanation explanation =
      explain(question, example.context, answerer, target, config, &cache);
  return reduce(example, explanation, answerer,
                ReduceOptions{options.recompute_coefficients, config}, &cache);
}

struct BatchResult {
  // One slot per input example, in input order; empty when analysis failed.
  std::vector<std::optional<ReductionTrace>> traces;
  std::vector<std::string> failures;
};

inline BatchResult analyze_batch(const std::vector<QaExample>& examples, const Answerer& answerer,
                                 const AnalysisOptions& options, int workers,
                                 Diagnostics* diag = nullptr) {
  BatchResult result;
  result.traces.resize(examples.size());
  std::vector<std::string> errors(examples.size());
  parallel_for(examples.size(), workers, [&](std::size_t i) {
    try {
      result.traces[i] = analyze_example(examples[i], answerer, options);
    } catch (const Error& e) {
      errors[i] = "example " + examples[i].id + ": " + e.what();
    }
  });
  for (const auto& e : errors) {
    if (e.empty()) continue;
    result.failures.push_back(e);
    note(diag, e);
  }
  return result;
}

}  // namespace rootprobe

#endif  // ROOTPROBE_PIPELINE_HPP_
