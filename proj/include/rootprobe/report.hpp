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

#ifndef ROOTPROBE_REPORT_HPP_
#define ROOTPROBE_REPORT_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/models.hpp"
#include "rootprobe/reducer.hpp"
#include "rootprobe/surrogate.hpp"
#include "rootprobe/text.hpp"

namespace rootprobe {

using ojson = nlohmann::ordered_json;

// Root-question categories, in reporting order.
inline constexpr std::string_view kWhAny = "wh-word + 0 or more words (any)";
inline constexpr std::string_view kOneWord = "1 word (any)";
inline constexpr std::string_view kOneNoun = "1 noun";
inline constexpr std::string_view kWho = "who";
inline constexpr std::string_view kWhPlusOne = "wh-word + 1 word (any)";
inline constexpr std::string_view kWhat = "what";
inline constexpr std::string_view kSevenPlus = "7 and more words";
inline constexpr std::array<std::string_view, 7> kCategoryOrder = {
    kWhAny, kOneWord, kOneNoun, kWho, kWhPlusOne, kWhat, kSevenPlus};

inline bool is_wh_word(std::string_view word) {
  static const std::array<std::string_view, 9> kLexicon = {
      "what", "which", "who", "whom", "whose", "when", "where", "why", "how"};
  const std::string w = to_lower(word);
  return std::find(kLexicon.begin(), kLexicon.end(), w) != kLexicon.end();
}

inline bool is_noun_tag(std::string_view tag) {
  const std::string t = to_lower(tag);
  return t.starts_with("nn") || t == "noun" || t == "propn";
}

// Crude fallback tagger: a word is a noun unless it is a wh-word, a stopword,
// or carries a verbal -ing/-ed suffix.
inline std::vector<std::string> heuristic_tags(const std::vector<std::string>& words) {
  std::vector<std::string> tags;
  for (const auto& w : words) {
    const std::string l = to_lower(w);
    const bool verbal = (l.size() > 4 && l.ends_with("ing")) || (l.size() > 3 && l.ends_with("ed"));
    tags.push_back(is_wh_word(l) || english_stopwords().contains(l) || verbal ? "X" : "NOUN");
  }
  return tags;
}

// Multi-label assignment of a root question to the categories above. "1 noun"
// needs tags; without them it is never assigned.
inline std::vector<std::string> categorize_root(
    const RootQuestion& root, const std::optional<std::vector<std::string>>& pos_tags = {}) {
  if (root.words.empty()) throw ContractViolation("categorize_root: root has no words");
  const std::size_t n = root.words.size();
  const bool wh_first = is_wh_word(root.words.front());
  const std::string only = n == 1 ? to_lower(root.words.front()) : std::string();
  std::vector<std::string> out;
  for (auto name : kCategoryOrder) {
    bool hit = false;
    if (name == kWhAny) hit = wh_first;
    else if (name == kOneWord) hit = n == 1;
    else if (name == kOneNoun) hit = n == 1 && pos_tags && pos_tags->size() == 1 && is_noun_tag(pos_tags->front());
    else if (name == kWho) hit = only == "who";
    else if (name == kWhPlusOne) hit = n == 2 && wh_first;
    else if (name == kWhat) hit = only == "what";
    else if (name == kSevenPlus) hit = n >= 7;
    if (hit) out.emplace_back(name);
  }
  return out;
}

// Word -> part-of-speech tag, keyed by lowercase word.
class PosLexicon {
 public:
  PosLexicon() = default;
  explicit PosLexicon(std::map<std::string, std::string> tags) : tags_(std::move(tags)) {}

  static PosLexicon from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open POS tag file " + path);
    try {
      const auto doc = nlohmann::json::parse(in);
      if (!doc.is_object()) throw ParseError("POS tag file " + path + ": expected an object");
      std::map<std::string, std::string> tags;
      for (const auto& [word, tag] : doc.items())
        tags[to_lower(word)] = tag.get<std::string>();
      return PosLexicon(std::move(tags));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("POS tag file " + path + ": " + e.what());
    }
  }

  std::vector<std::string> tag(const std::vector<std::string>& words) const {
    std::vector<std::string> out;
    for (const auto& w : words) {
      auto it = tags_.find(to_lower(w));
      out.push_back(it == tags_.end() ? "X" : it->second);
    }
    return out;
  }

 private:
  std::map<std::string, std::string> tags_;
};

struct HistogramReport {
  std::vector<double> bin_edges;  // n_bins + 1 edges from 0 to 1
  std::vector<std::size_t> counts;

  std::size_t total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

// Equal-width bins over [0, 1]; bins are [lo, hi) except the last, which is
// closed.
inline HistogramReport build_histogram(const std::vector<double>& values, std::size_t n_bins) {
  if (n_bins < 1) throw ContractViolation("build_histogram: n_bins must be >= 1");
  HistogramReport h;
  for (std::size_t i = 0; i <= n_bins; ++i)
    h.bin_edges.push_back(static_cast<double>(i) / static_cast<double>(n_bins));
  h.counts.assign(n_bins, 0);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ContractViolation("build_histogram: value " + std::to_string(v) + " outside [0, 1]");
    std::size_t bin = n_bins - 1;
    for (std::size_t i = 0; i < n_bins; ++i) {
      if (v < h.bin_edges[i + 1]) {
        bin = i;
        break;
      }
    }
    ++h.counts[bin];
  }
  return h;
}

struct CategoryCount {
  std::string name;
  std::size_t count = 0;
  double fraction = 0.0;
};

struct ExampleRecord {
  std::string id;
  std::vector<std::string> root_words;
  std::size_t word_count = 0;
  std::size_t n_words = 0;
  double percent_removed = 0.0;
  std::vector<std::size_t> matched_word_counts;
  std::vector<std::string> categories;
  std::vector<std::string> words;
  std::vector<double> coefficients;
  ojson trace;  // full serialized trace
};

struct AnalysisReport {
  std::vector<ExampleRecord> per_example;
  HistogramReport histogram;
  std::vector<CategoryCount> categories;
  ojson metadata = ojson::object();
};

// ---------------------------------------------------------------------------
// JSON.

inline ojson to_json(const SurrogateConfig& c) {
  return ojson{{"n_samples", c.n_samples},
               {"kernel_width", c.kernel_width},
               {"ridge_alpha", c.ridge_alpha},
               {"seed", c.seed}};
}

inline ojson to_json(const Explanation& e) {
  ojson coefs = ojson::array();
  for (std::size_t i = 0; i < e.coefficients.size(); ++i)
    coefs.push_back({{"index", i},
                     {"word", i < e.words.size() ? e.words[i] : std::string()},
                     {"coefficient", e.coefficients[i]}});
  return ojson{{"target_class", e.target_class},
               {"intercept", e.intercept},
               {"n_words", e.n_words},
               {"config", to_json(e.config)},
               {"coefficients", std::move(coefs)}};
}

inline ojson to_json(const ReductionTrace& t) {
  ojson steps = ojson::array();
  for (const auto& s : t.steps) {
    ojson mask = ojson::array();
    for (bool b : s.mask.keep) mask.push_back(b ? 1 : 0);
    const auto& dist = s.prediction.start_distribution;
    const std::size_t tc = t.explanation.target_class;
    steps.push_back({{"word_count", s.word_count},
                     {"mask", std::move(mask)},
                     {"reduced_question", s.reduced_question},
                     {"matched", s.matched},
                     {"answer",
                      {{"text", s.prediction.answer_text},
                       {"start_token", s.prediction.start_token},
                       {"end_token", s.prediction.end_token}}},
                     {"target_prob", tc < dist.size() ? dist[tc] : 0.0}});
  }
  const auto root = find_root(t);
  return ojson{{"example_id", t.example_id},
               {"explanation", to_json(t.explanation)},
               {"steps", std::move(steps)},
               {"root_step_index", t.root_step_index},
               {"root",
                {{"words", root.words},
                 {"text", join(root.words)},
                 {"word_count", root.word_count},
                 {"percent_removed", root.percent_removed}}}};
}

struct CategoryOptions {
  const PosLexicon* lexicon = nullptr;  // null: heuristic tags
};

inline std::vector<std::string> root_tags(const std::vector<std::string>& words,
                                          const CategoryOptions& opts) {
  return opts.lexicon != nullptr ? opts.lexicon->tag(words) : heuristic_tags(words);
}

// Per-example record from a serialized trace, so stored traces can be
// re-aggregated without model access.
inline ExampleRecord record_from_trace_json(const ojson& j, const CategoryOptions& opts = {}) {
  try {
    ExampleRecord r;
    r.id = j.at("example_id").get<std::string>();
    const auto& root = j.at("root");
    r.root_words = root.at("words").get<std::vector<std::string>>();
    r.word_count = root.at("word_count").get<std::size_t>();
    r.percent_removed = root.at("percent_removed").get<double>();
    const auto& steps = j.at("steps");
    r.n_words = steps.empty() ? 0 : steps.front().at("word_count").get<std::size_t>();
    for (const auto& s : steps)
      if (s.at("matched").get<bool>()) r.matched_word_counts.push_back(s.at("word_count").get<std::size_t>());
    for (const auto& c : j.at("explanation").at("coefficients")) {
      r.words.push_back(c.at("word").get<std::string>());
      r.coefficients.push_back(c.at("coefficient").get<double>());
    }
    RootQuestion rq{r.root_words, r.word_count, r.percent_removed};
    r.categories = categorize_root(rq, root_tags(r.root_words, opts));
    r.trace = j;
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("trace JSON: ") + e.what());
  }
}

inline ExampleRecord make_record(const ReductionTrace& trace, const CategoryOptions& opts = {}) {
  return record_from_trace_json(to_json(trace), opts);
}

inline AnalysisReport build_report(std::vector<ExampleRecord> records, std::size_t n_bins = 10,
                                   ojson metadata = ojson::object()) {
  AnalysisReport report;
  std::vector<double> percents;
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) {
    percents.push_back(r.percent_removed);
    for (const auto& c : r.categories) ++counts[c];
  }
  report.histogram = build_histogram(percents, n_bins);
  for (auto name : kCategoryOrder) {
    CategoryCount c;
    c.name = std::string(name);
    c.count = counts[c.name];
    c.fraction = records.empty() ? 0.0 : static_cast<double>(c.count) / static_cast<double>(records.size());
    report.categories.push_back(std::move(c));
  }
  report.per_example = std::move(records);
  report.metadata = std::move(metadata);
  return report;
}

inline ojson to_json(const AnalysisReport& report) {
  ojson rows = ojson::array();
  for (const auto& r : report.per_example) {
    ojson coefs = ojson::array();
    for (std::size_t i = 0; i < r.coefficients.size(); ++i)
      coefs.push_back({{"word", r.words[i]}, {"coefficient", r.coefficients[i]}});
    ojson row{{"id", r.id},
              {"root", join(r.root_words)},
              {"root_words", r.root_words},
              {"word_count", r.word_count},
              {"n_words", r.n_words},
              {"percent_removed", r.percent_removed},
              {"matched_word_counts", r.matched_word_counts},
              {"categories", r.categories},
              {"coefficients", std::move(coefs)}};
    if (report.per_example.size() == 1) row["trace"] = r.trace;
    rows.push_back(std::move(row));
  }
  ojson cats = ojson::array();
  for (const auto& c : report.categories)
    cats.push_back({{"name", c.name}, {"count", c.count}, {"fraction", c.fraction}});
  return ojson{{"metadata", report.metadata},
               {"per_example", std::move(rows)},
               {"histogram",
                {{"bin_edges", report.histogram.bin_edges}, {"counts", report.histogram.counts}}},
               {"categories", std::move(cats)}};
}

// ---------------------------------------------------------------------------
// Rendering.

namespace report_internal {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace report_internal

inline std::string render_csv(const AnalysisReport& report) {
  using report_internal::csv_field;
  std::string out = "id,root,word_count,percent_removed,categories\n";
  for (const auto& r : report.per_example) {
    out += csv_field(r.id) + "," + csv_field(join(r.root_words)) + "," +
           std::to_string(r.word_count) + "," + report_internal::fixed(r.percent_removed, 6) +
           "," + csv_field(join(r.categories, ";")) + "\n";
  }
  return out;
}

inline std::string render_categories_csv(const AnalysisReport& report) {
  std::string out = "category,count,fraction\n";
  for (const auto& c : report.categories)
    out += report_internal::csv_field(c.name) + "," + std::to_string(c.count) + "," +
           report_internal::fixed(c.fraction, 6) + "\n";
  return out;
}

// Bar chart of the removed-fraction histogram.
inline std::string render_histogram_svg(const HistogramReport& h) {
  using report_internal::fixed;
  const double width = 640, height = 400, left = 60, right = 20, top = 30, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  std::size_t peak = 1;
  for (auto c : h.counts) peak = std::max(peak, c);
  const double bar_w = plot_w / static_cast<double>(h.counts.size());

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
                  "viewBox=\"0 0 640 400\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">Fraction of question "
       "words removed with a valid answer</text>\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double bh = plot_h * static_cast<double>(h.counts[i]) / static_cast<double>(peak);
    const double x = left + bar_w * static_cast<double>(i);
    s += "<rect x=\"" + fixed(x + 1, 2) + "\" y=\"" + fixed(top + plot_h - bh, 2) +
         "\" width=\"" + fixed(bar_w - 2, 2) + "\" height=\"" + fixed(bh, 2) +
         "\" fill=\"#4c72b0\"/>\n";
    s += "<text x=\"" + fixed(x + bar_w / 2, 2) + "\" y=\"" + fixed(top + plot_h - bh - 4, 2) +
         "\" text-anchor=\"middle\">" + std::to_string(h.counts[i]) + "</text>\n";
  }
  for (std::size_t i = 0; i < h.bin_edges.size(); ++i) {
    const double x = left + bar_w * static_cast<double>(i);
    s += "<text x=\"" + fixed(x, 2) + "\" y=\"" + fixed(top + plot_h + 16, 2) +
         "\" text-anchor=\"middle\">" + fixed(h.bin_edges[i], 1) + "</text>\n";
  }
  s += "<line x1=\"" + fixed(left, 2) + "\" y1=\"" + fixed(top + plot_h, 2) + "\" x2=\"" +
       fixed(left + plot_w, 2) + "\" y2=\"" + fixed(top + plot_h, 2) + "\" stroke=\"black\"/>\n";
  s += "<text x=\"320\" y=\"" + fixed(height - 15, 2) +
       "\" text-anchor=\"middle\">fraction removed</text>\n";
  s += "</svg>\n";
  return s;
}

// Horizontal bar per question word, signed around a zero axis.
inline std::string render_coefficients_svg(const std::vector<std::string>& words,
                                           const std::vector<double>& coefficients) {
  using report_internal::fixed;
  using report_internal::xml_escape;
  const double row_h = 22, left = 140, plot_w = 440, top = 36;
  const double height = top + row_h * static_cast<double>(words.size()) + 30;
  double span = 1e-12;
  for (double c : coefficients) span = std::max(span, std::abs(c));
  const double zero_x = left + plot_w / 2;

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"" +
                  fixed(height, 0) + "\" viewBox=\"0 0 640 " + fixed(height, 0) +
                  "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"640\" height=\"" + fixed(height, 0) + "\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">Surrogate "
       "coefficient per question word</text>\n";
  for (std::size_t i = 0; i < words.size(); ++i) {
    const double c = coefficients[i];
    const double len = (plot_w / 2) * std::abs(c) / span;
    const double y = top + row_h * static_cast<double>(i);
    const double x = c >= 0 ? zero_x : zero_x - len;
    s += "<text x=\"" + fixed(left - 8, 2) + "\" y=\"" + fixed(y + 14, 2) +
         "\" text-anchor=\"end\">" + xml_escape(words[i]) + "</text>\n";
    s += "<rect x=\"" + fixed(x, 2) + "\" y=\"" + fixed(y + 3, 2) + "\" width=\"" +
         fixed(len, 2) + "\" height=\"" + fixed(row_h - 6, 2) + "\" fill=\"" +
         (c >= 0 ? "#55a868" : "#c44e52") + "\"/>\n";
    s += "<text x=\"" + fixed(left + plot_w + 8, 2) + "\" y=\"" + fixed(y + 14, 2) + "\">" +
         fixed(c, 4) + "</text>\n";
  }
  s += "<line x1=\"" + fixed(zero_x, 2) + "\" y1=\"" + fixed(top, 2) + "\" x2=\"" +
       fixed(zero_x, 2) + "\" y2=\"" + fixed(height - 30, 2) + "\" stroke=\"black\"/>\n";
  s += "</svg>\n";
  return s;
}

enum class ReportFormat { kJson, kCsv, kSvg };

inline ReportFormat parse_format(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "svg") return ReportFormat::kSvg;
  throw ContractViolation("unknown format '" + std::string(name) + "' (json, csv, svg)");
}

// Writes the report into out_dir and returns the paths written.
//   json: report.json
//   csv:  report.csv, categories.csv
//   svg:  histogram.svg, plus coefficients.svg for single-example reports
inline std::vector<std::filesystem::path> emit(const AnalysisReport& report, ReportFormat format,
                                               const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& content) {
    report_internal::write_file(out_dir / name, content);
    written.push_back(out_dir / name);
  };
  switch (format) {
    case ReportFormat::kJson:
      put("report.json", to_json(report).dump(2) + "\n");
      break;
    case ReportFormat::kCsv:
      put("report.csv", render_csv(report));
      put("categories.csv", render_categories_csv(report));
      break;
    case ReportFormat::kSvg:
      put("histogram.svg", render_histogram_svg(report.histogram));
      if (report.per_example.size() == 1)
        put("coefficients.svg", render_coefficients_svg(report.per_example.front().words,
                                                        report.per_example.front().coefficients));
      break;
  }
  return written;
}

}  // namespace rootprobe

#endif  // ROOTPROBE_REPORT_HPP_
