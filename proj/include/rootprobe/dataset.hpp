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

#ifndef ROOTPROBE_DATASET_HPP_
#define ROOTPROBE_DATASET_HPP_

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/models.hpp"
#include "rootprobe/parallel.hpp"

namespace rootprobe {

struct GroundTruth {
  std::string text;
  // Byte offset into the context. SQuAD files count code points; the loader
  // converts.
  std::optional<std::size_t> answer_start_char;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct QaExample {
  std::string id;
  std::string question;
  std::string context;
  std::vector<GroundTruth> answers;

  std::vector<std::string> answer_texts() const {
    std::vector<std::string> out;
    for (const auto& a : answers) out.push_back(a.text);
    return out;
  }

  friend bool operator==(const QaExample&, const QaExample&) = default;
};

namespace dataset_internal {

inline bool is_continuation(unsigned char b) { return (b & 0xC0) == 0x80; }

// Byte offset of code point `cp`, or nullopt past the end.
inline std::optional<std::size_t> codepoint_to_byte(const std::string& s, std::size_t cp) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_continuation(static_cast<unsigned char>(s[i]))) continue;
    if (seen == cp) return i;
    ++seen;
  }
  return std::nullopt;
}

inline std::size_t byte_to_codepoint(const std::string& s, std::size_t byte) {
  std::size_t cp = 0;
  for (std::size_t i = 0; i < byte && i < s.size(); ++i)
    if (!is_continuation(static_cast<unsigned char>(s[i]))) ++cp;
  return cp;
}

inline const nlohmann::json& require(const nlohmann::json& parent, const char* key,
                                     const std::string& path,
                                     nlohmann::json::value_t type) {
  if (!parent.is_object() || !parent.contains(key))
    throw ParseError(path + "." + key + ": missing");
  const auto& v = parent.at(key);
  if (v.type() != type) throw ParseError(path + "." + key + ": wrong type");
  return v;
}

}  // namespace dataset_internal

// Reads SQuAD v1.1 JSON already parsed into memory. One example per qa
// entry, in file order. Answers whose offsets do not point at their text keep
// the text and lose the offset.
inline std::vector<QaExample> parse_squad(const nlohmann::json& doc,
                                          Diagnostics* diag = nullptr) {
  using dataset_internal::require;
  using vt = nlohmann::json::value_t;
  if (!doc.is_object()) throw ParseError("$: top level must be an object");
  for (const auto& [key, _] : doc.items())
    if (key != "data" && key != "version")
      throw ParseError("$." + key + ": unexpected top-level key");

  std::vector<QaExample> out;
  const auto& data = require(doc, "data", "$", vt::array);
  for (std::size_t a = 0; a < data.size(); ++a) {
    const std::string apath = "$.data[" + std::to_string(a) + "]";
    const auto& paragraphs = require(data[a], "paragraphs", apath, vt::array);
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      const std::string ppath = apath + ".paragraphs[" + std::to_string(p) + "]";
      const auto context = require(paragraphs[p], "context", ppath, vt::string).get<std::string>();
      const auto& qas = require(paragraphs[p], "qas", ppath, vt::array);
      for (std::size_t q = 0; q < qas.size(); ++q) {
        const std::string qpath = ppath + ".qas[" + std::to_string(q) + "]";
        const auto& qa = qas[q];
        if (qa.is_object() && qa.contains("is_impossible") && qa.at("is_impossible") == true)
          throw ParseError(qpath + ".is_impossible: SQuAD v2.0 unanswerable questions are not supported");
        QaExample ex;
        ex.id = require(qa, "id", qpath, vt::string).get<std::string>();
        ex.question = require(qa, "question", qpath, vt::string).get<std::string>();
        ex.context = context;
        const auto& answers = require(qa, "answers", qpath, vt::array);
        if (answers.empty()) throw ParseError(qpath + ".answers: empty");
        for (std::size_t k = 0; k < answers.size(); ++k) {
          const std::string apath2 = qpath + ".answers[" + std::to_string(k) + "]";
          GroundTruth gt;
          gt.text = require(answers[k], "text", apath2, vt::string).get<std::string>();
          if (answers[k].contains("answer_start")) {
            const auto& start = answers[k].at("answer_start");
            if (!start.is_number_integer() || start.get<long long>() < 0) {
              note(diag, apath2 + ".answer_start: not a non-negative integer, offset dropped");
            } else {
              auto byte = dataset_internal::codepoint_to_byte(
                  context, static_cast<std::size_t>(start.get<long long>()));
              if (byte && context.compare(*byte, gt.text.size(), gt.text) == 0) {
                gt.answer_start_char = *byte;
              } else {
                note(diag, apath2 + ".answer_start: offset does not locate '" + gt.text +
                               "' in context, offset dropped");
              }
            }
          }
          ex.answers.push_back(std::move(gt));
        }
        out.push_back(std::move(ex));
      }
    }
  }
  return out;
}

inline std::vector<QaExample> load_squad(const std::string& path,
                                         Diagnostics* diag = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return parse_squad(doc, diag);
}

// Inverse of parse_squad up to article titles: consecutive examples sharing a
// context become one paragraph.
inline nlohmann::ordered_json to_squad_json(const std::vector<QaExample>& examples) {
  nlohmann::ordered_json paragraphs = nlohmann::ordered_json::array();
  for (const auto& ex : examples) {
    if (paragraphs.empty() || paragraphs.back()["context"] != ex.context)
      paragraphs.push_back({{"context", ex.context}, {"qas", nlohmann::ordered_json::array()}});
    nlohmann::ordered_json answers = nlohmann::ordered_json::array();
    for (const auto& a : ex.answers) {
      nlohmann::ordered_json aj{{"text", a.text}};
      if (a.answer_start_char)
        aj["answer_start"] = dataset_internal::byte_to_codepoint(ex.context, *a.answer_start_char);
      answers.push_back(std::move(aj));
    }
    paragraphs.back()["qas"].push_back(
        {{"id", ex.id}, {"question", ex.question}, {"answers", std::move(answers)}});
  }
  nlohmann::ordered_json doc;
  doc["version"] = "1.1";
  doc["data"] = nlohmann::ordered_json::array(
      {nlohmann::ordered_json{{"title", ""}, {"paragraphs", std::move(paragraphs)}}});
  return doc;
}

struct FilterStats {
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

// Keeps the examples whose full question already gets a matching answer.
// Model failures drop the example with a diagnostic.
inline std::vector<QaExample> filter_correct(const std::vector<QaExample>& examples,
                                             const Answerer& answerer, int workers = 1,
                                             Diagnostics* diag = nullptr,
                                             FilterStats* stats = nullptr) {
  std::vector<char> keep(examples.size(), 0);
  parallel_for(examples.size(), std::min(workers, answerer.max_inflight()), [&](std::size_t i) {
    const auto& ex = examples[i];
    try {
      keep[i] = answer_matches(answerer.predict(ex.question, ex.context), ex.answer_texts(), diag);
    } catch (const Error& e) {
      note(diag, "example " + ex.id + " dropped: " + e.what());
    }
  });
  std::vector<QaExample> out;
  for (std::size_t i = 0; i < examples.size(); ++i)
    if (keep[i]) out.push_back(examples[i]);
  if (stats != nullptr) {
    stats->kept = out.size();
    stats->dropped = examples.size() - out.size();
  }
  if (diag != nullptr)
    diag->add("filter_correct: kept " + std::to_string(out.size()) + ", dropped " +
              std::to_string(examples.size() - out.size()));
  return out;
}

}  // namespace rootprobe

#endif  // ROOTPROBE_DATASET_HPP_
