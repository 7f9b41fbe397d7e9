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

#ifndef ROOTPROBE_MODELS_HPP_
#define ROOTPROBE_MODELS_HPP_

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/text.hpp"

namespace rootprobe {

// A model's answer span plus its distribution over answer-start positions.
// Context tokens are the model's own tokenization; a "class" is an index
// into them.
struct AnswerPrediction {
  std::string answer_text;
  std::size_t start_token = 0;
  std::size_t end_token = 0;  // inclusive
  std::vector<std::string> context_tokens;
  std::vector<double> start_distribution;

  friend bool operator==(const AnswerPrediction&, const AnswerPrediction&) = default;
};

inline constexpr double kDistributionTolerance = 1e-6;

// Returns a description of the first violated invariant, or nullopt.
inline std::optional<std::string> check_prediction(const AnswerPrediction& p) {
  const std::size_t n = p.context_tokens.size();
  if (n == 0) return "context_tokens is empty";
  if (p.start_distribution.size() != n)
    return "length mismatch: start_distribution has " +
           std::to_string(p.start_distribution.size()) + " entries, context_tokens has " +
           std::to_string(n);
  double sum = 0.0;
  for (double v : p.start_distribution) {
    if (!std::isfinite(v) || v < 0.0) return "start_distribution has a negative or non-finite entry";
    sum += v;
  }
  if (std::abs(sum - 1.0) > kDistributionTolerance)
    return "start_distribution sums to " + std::to_string(sum) + ", expected 1 +/- 1e-6";
  if (p.start_token > p.end_token)
    return "start_token " + std::to_string(p.start_token) + " exceeds end_token " +
           std::to_string(p.end_token);
  if (p.end_token >= n)
    return "end_token " + std::to_string(p.end_token) + " out of range for " +
           std::to_string(n) + " context tokens";
  return std::nullopt;
}

enum class AnswererKind { kBuiltinBaseline, kKeywordOracle, kScripted, kRemote };

inline std::string kind_name(AnswererKind kind) {
  switch (kind) {
    case AnswererKind::kBuiltinBaseline: return "builtin-baseline";
    case AnswererKind::kKeywordOracle: return "keyword-oracle";
    case AnswererKind::kScripted: return "scripted";
    case AnswererKind::kRemote: return "remote";
  }
  return "unknown";
}

inline constexpr int kUnboundedInflight = INT_MAX;

// The contract every QA model satisfies. Built-in answerers are stateless and
// deterministic; remote answerers bound concurrent requests to max_inflight().
class Answerer {
 public:
  virtual ~Answerer() = default;
  virtual AnswererKind kind() const = 0;
  virtual int max_inflight() const { return kUnboundedInflight; }
  virtual AnswerPrediction predict_unchecked(std::string_view question,
                                             std::string_view context) const = 0;

  AnswerPrediction predict(std::string_view question, std::string_view context) const {
    if (question.empty()) throw ContractViolation("predict: question is empty");
    if (context.empty()) throw ContractViolation("predict: context is empty");
    return predict_unchecked(question, context);
  }
};

namespace models_internal {

inline std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline std::vector<std::string> span_words(const std::vector<std::string>& toks,
                                                  std::size_t lo, std::size_t hi) {
  return {toks.begin() + static_cast<std::ptrdiff_t>(lo),
          toks.begin() + static_cast<std::ptrdiff_t>(hi) + 1};
}

// p on idx, the rest spread uniformly.
inline std::vector<double> peaked(std::size_t n, std::size_t idx, double p) {
  if (n == 1) return {1.0};
  std::vector<double> d(n, (1.0 - p) / static_cast<double>(n - 1));
  d[idx] = p;
  return d;
}

inline std::vector<double> uniform(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

// First index where the lowercase word sequence needle occurs in haystack.
inline std::optional<std::size_t> find_words(const std::vector<std::string>& haystack,
                                             const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size() && ok; ++k)
      ok = to_lower(haystack[i + k]) == to_lower(needle[k]);
    if (ok) return i;
  }
  return std::nullopt;
}

inline bool question_has_word(std::string_view question, std::string_view word) {
  const std::string target = normalize(word);
  const std::string lowered = to_lower(word);
  for (const auto& w : tokenize(question).words()) {
    if (target.empty() ? to_lower(w) == lowered : normalize(w) == target) return true;
  }
  return false;
}

}  // namespace models_internal

// Builds a prediction whose answer_text is the joined span.
inline AnswerPrediction make_prediction(std::vector<std::string> context_tokens,
                                        std::vector<double> start_distribution,
                                        std::size_t start, std::size_t end) {
  AnswerPrediction p;
  p.answer_text = join(models_internal::span_words(context_tokens, start, end));
  p.start_token = start;
  p.end_token = end;
  p.context_tokens = std::move(context_tokens);
  p.start_distribution = std::move(start_distribution);
  return p;
}

// Word tokens of the context; the class space of every built-in answerer.
inline std::vector<std::string> context_classes(std::string_view context) {
  return tokenize(context).words();
}

inline const std::unordered_set<std::string>& english_stopwords() {
  static const std::unordered_set<std::string> kWords = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your",
      "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she",
      "her", "hers", "herself", "it", "its", "itself", "they", "them", "their",
      "theirs", "themselves", "what", "which", "who", "whom", "this", "that",
      "these", "those", "am", "is", "are", "was", "were", "be", "been", "being",
      "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
      "the", "and", "but", "if", "or", "because", "as", "until", "while", "of",
      "at", "by", "for", "with", "about", "against", "between", "into",
      "through", "during", "before", "after", "above", "below", "to", "from",
      "up", "down", "in", "out", "on", "off", "over", "under", "again",
      "further", "then", "once", "here", "there", "when", "where", "why", "how",
      "all", "any", "both", "each", "few", "more", "most", "other", "some",
      "such", "no", "nor", "not", "only", "own", "same", "so", "than", "too",
      "very", "s", "t", "can", "will", "just", "don", "should", "now", "whose"};
  return kWords;
}

inline constexpr std::size_t kBaselineWindow = 15;

// Sliding-window lexical-overlap reader. Every context word position starts a
// window of up to kBaselineWindow words; its score is the number of distinct
// non-stopword question words inside it. The start distribution is the
// softmax of the scores and the answer is the best window (ties go left).
inline AnswerPrediction baseline_predict(std::string_view question,
                                         std::string_view context) {
  std::vector<std::string> ctx = context_classes(context);
  if (ctx.empty()) throw ContractViolation("baseline_predict: context has no word tokens");

  std::set<std::string> keywords;
  for (const auto& w : tokenize(question).words())
    for (auto& piece : split_words(normalize(w)))
      if (!english_stopwords().contains(piece)) keywords.insert(piece);

  std::vector<std::string> ctx_norm;
  ctx_norm.reserve(ctx.size());
  for (const auto& w : ctx) ctx_norm.push_back(normalize(w));

  const std::size_t n = ctx.size();
  std::vector<double> scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t hi = std::min(n, i + kBaselineWindow);
    std::set<std::string> seen;
    for (std::size_t k = i; k < hi; ++k)
      for (auto& piece : split_words(ctx_norm[k]))
        if (keywords.contains(piece)) seen.insert(piece);
    scores[i] = static_cast<double>(seen.size());
  }

  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> dist(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += dist[i] = std::exp(scores[i] - top);
  for (auto& d : dist) d /= z;

  const std::size_t start = models_internal::argmax(scores);
  const std::size_t end = std::min(n, start + kBaselineWindow) - 1;
  return make_prediction(std::move(ctx), std::move(dist), start, end);
}

class BaselineAnswerer final : public Answerer {
 public:
  AnswererKind kind() const override { return AnswererKind::kBuiltinBaseline; }
  AnswerPrediction predict_unchecked(std::string_view question,
                                     std::string_view context) const override {
    return baseline_predict(question, context);
  }
};

// Test model with a known attribution: when the keyword is among the question
// words, mass kPeak sits on the target class and the answer is the configured
// span; otherwise the distribution is uniform and the answer is token 0.
class KeywordOracle final : public Answerer {
 public:
  static constexpr double kPeak = 0.9;

  KeywordOracle(std::string keyword, std::size_t target,
                std::optional<std::size_t> span_end = std::nullopt)
      : keyword_(std::move(keyword)), target_(target), span_end_(span_end.value_or(target)) {
    if (normalize(keyword_).empty())
      throw ContractViolation("keyword oracle: keyword normalizes to nothing");
    if (span_end_ < target_)
      throw ContractViolation("keyword oracle: span end precedes target");
  }

  AnswererKind kind() const override { return AnswererKind::kKeywordOracle; }
  const std::string& keyword() const { return keyword_; }
  std::size_t target() const { return target_; }

  AnswerPrediction predict_unchecked(std::string_view question,
                                     std::string_view context) const override {
    std::vector<std::string> ctx = context_classes(context);
    const std::size_t n = ctx.size();
    if (n == 0) throw ModelError("keyword oracle: context has no word tokens");
    if (span_end_ >= n)
      throw ModelError("keyword oracle: span [" + std::to_string(target_) + ", " +
                       std::to_string(span_end_) + "] out of range for " +
                       std::to_string(n) + " context tokens");
    if (models_internal::question_has_word(question, keyword_))
      return make_prediction(std::move(ctx), models_internal::peaked(n, target_, kPeak),
                             target_, span_end_);
    return make_prediction(std::move(ctx), models_internal::uniform(n), 0, 0);
  }

 private:
  std::string keyword_;
  std::size_t target_;
  std::size_t span_end_;
};

// Replays canned answers. Script format:
//   {"rules": [{"contains_all": ["type"], "answer": "sedimentary"},
//              {"question": "who wrote it", "answer": "Luther"}],
//    "default": "optional fallback answer",
//    "probability": 0.9}
// The first rule whose conditions hold wins. Answers must occur in the
// context as a word sequence (case-insensitive).
class ScriptedAnswerer final : public Answerer {
 public:
  struct Rule {
    std::vector<std::string> contains_all;
    std::optional<std::string> question;
    std::string answer;
  };

  explicit ScriptedAnswerer(std::vector<Rule> rules,
                            std::optional<std::string> fallback = std::nullopt,
                            double probability = 0.9)
      : rules_(std::move(rules)), fallback_(std::move(fallback)), probability_(probability) {
    if (!(probability_ > 0.0 && probability_ <= 1.0))
      throw ContractViolation("scripted answerer: probability must lie in (0, 1]");
  }

  static ScriptedAnswerer from_json(const nlohmann::json& j) {
    try {
      std::vector<Rule> rules;
      for (const auto& r : j.at("rules")) {
        Rule rule;
        if (r.contains("contains_all"))
          rule.contains_all = r.at("contains_all").get<std::vector<std::string>>();
        if (r.contains("question")) rule.question = r.at("question").get<std::string>();
        rule.answer = r.at("answer").get<std::string>();
        rules.push_back(std::move(rule));
      }
      std::optional<std::string> fallback;
      if (j.contains("default") && !j.at("default").is_null())
        fallback = j.at("default").get<std::string>();
      return ScriptedAnswerer(std::move(rules), std::move(fallback),
                              j.value("probability", 0.9));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("scripted answerer: ") + e.what());
    }
  }

  static ScriptedAnswerer from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("scripted answerer: cannot open " + path);
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("scripted answerer: " + path + ": " + e.what());
    }
  }

  AnswererKind kind() const override { return AnswererKind::kScripted; }

  AnswerPrediction predict_unchecked(std::string_view question,
                                     std::string_view context) const override {
    std::vector<std::string> ctx = context_classes(context);
    const std::size_t n = ctx.size();
    if (n == 0) throw ModelError("scripted answerer: context has no word tokens");

    std::optional<std::string> answer = fallback_;
    for (const auto& rule : rules_) {
      if (fires(rule, question)) {
        answer = rule.answer;
        break;
      }
    }
    if (!answer) return make_prediction(std::move(ctx), models_internal::uniform(n), 0, 0);

    const auto needle = tokenize(*answer).words();
    const auto at = models_internal::find_words(ctx, needle);
    if (!at) throw ModelError("scripted answerer: answer '" + *answer + "' not in context");
    return make_prediction(std::move(ctx), models_internal::peaked(n, *at, probability_), *at,
                           *at + needle.size() - 1);
  }

 private:
  static bool fires(const Rule& rule, std::string_view question) {
    if (rule.question && normalize(*rule.question) != normalize(question)) return false;
    for (const auto& w : rule.contains_all)
      if (!models_internal::question_has_word(question, w)) return false;
    return true;
  }

  std::vector<Rule> rules_;
  std::optional<std::string> fallback_;
  double probability_;
};

// True iff some normalized ground-truth word occurs among the normalized
// words of the predicted span. Ground truths are OR-ed; ground truths that
// normalize to nothing are skipped.
inline bool answer_matches(const AnswerPrediction& prediction,
                           const std::vector<std::string>& ground_truths,
                           Diagnostics* diag = nullptr) {
  if (ground_truths.empty())
    throw ContractViolation("answer_matches: no ground truth supplied");
  const auto predicted = split_words(normalize(prediction.answer_text));
  const std::unordered_set<std::string> have(predicted.begin(), predicted.end());
  bool any_usable = false;
  for (const auto& truth : ground_truths) {
    const auto words = split_words(normalize(truth));
    if (words.empty()) continue;
    any_usable = true;
    for (const auto& w : words)
      if (have.contains(w)) return true;
  }
  if (!any_usable)
    note(diag, "answer_matches: every ground truth normalizes to empty text");
  return false;
}

// Word index (among word tokens) of the ground-truth class: the word token
// containing answer_start_char when given, otherwise the first word whose
// normalized form equals the answer's first normalized word.
inline std::size_t locate_target_class(const TokenizedText& context,
                                       std::string_view answer_text,
                                       std::optional<std::size_t> answer_start_char) {
  if (answer_text.empty()) throw ContractViolation("locate_target_class: empty answer");
  if (answer_start_char) {
    const std::size_t c = *answer_start_char;
    std::size_t word = 0;
    bool after_punct = false;
    for (const auto& t : context.tokens) {
      if (t.is_word) {
        if ((t.char_start <= c && c < t.char_end) || after_punct) return word;
        ++word;
      } else if (t.char_start <= c && c < t.char_end) {
        // Answers may open with a quote or bracket; take the next word.
        after_punct = true;
      }
    }
    throw TargetNotFound("no context word token contains offset " + std::to_string(c));
  }
  const auto first = split_words(normalize(answer_text));
  if (first.empty())
    throw TargetNotFound("answer '" + std::string(answer_text) + "' normalizes to nothing");
  std::size_t word = 0;
  for (const auto& t : context.tokens) {
    if (!t.is_word) continue;
    const auto pieces = split_words(normalize(t.text));
    if (!pieces.empty() && pieces.front() == first.front()) return word;
    ++word;
  }
  throw TargetNotFound("answer word '" + first.front() + "' not found in context");
}

}  // namespace rootprobe

#endif  // ROOTPROBE_MODELS_HPP_
