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

#ifndef ROOTPROBE_TEXT_HPP_
#define ROOTPROBE_TEXT_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "rootprobe/errors.hpp"

namespace rootprobe {

// Offsets are byte offsets into the UTF-8 source string.
struct Token {
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  bool is_word = true;

  friend bool operator==(const Token&, const Token&) = default;
};

struct TokenizedText {
  std::string raw;
  std::vector<Token> tokens;

  std::size_t word_count() const {
    return static_cast<std::size_t>(std::count_if(
        tokens.begin(), tokens.end(), [](const Token& t) { return t.is_word; }));
  }

  // Word tokens only, in order.
  std::vector<Token> word_tokens() const {
    std::vector<Token> out;
    for (const auto& t : tokens)
      if (t.is_word) out.push_back(t);
    return out;
  }

  std::vector<std::string> words() const {
    std::vector<std::string> out;
    for (const auto& t : tokens)
      if (t.is_word) out.push_back(t.text);
    return out;
  }
};

// One perturbation of a question: keep[i] says whether word i survives.
struct Mask {
  std::vector<bool> keep;

  static Mask all_ones(std::size_t n) { return Mask{std::vector<bool>(n, true)}; }

  std::size_t size() const { return keep.size(); }
  std::size_t popcount() const {
    return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
  }
  bool operator[](std::size_t i) const { return keep[i]; }

  friend bool operator==(const Mask&, const Mask&) = default;
  friend bool operator<(const Mask& a, const Mask& b) { return a.keep < b.keep; }
};

namespace text_internal {

// Multi-byte punctuation we peel and strip alongside ASCII punctuation.
inline constexpr std::array<std::string_view, 13> kUnicodePunct = {
    "“", "”", "‘", "’", "«", "»", "–",
    "—", "…", "¿", "¡", "·", "„"};

inline bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) ||
         (u >= 123 && u <= 126);
}

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Byte length of a punctuation character at the front of s, or 0.
inline std::size_t punct_prefix(std::string_view s) {
  if (s.empty()) return 0;
  if (is_ascii_punct(s.front())) return 1;
  for (auto p : kUnicodePunct)
    if (s.starts_with(p)) return p.size();
  return 0;
}

inline std::size_t punct_suffix(std::string_view s) {
  if (s.empty()) return 0;
  if (is_ascii_punct(s.back())) return 1;
  for (auto p : kUnicodePunct)
    if (s.ends_with(p)) return p.size();
  return 0;
}

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace text_internal

// Splits on whitespace, then peels leading and trailing punctuation
// characters of each chunk into their own punctuation tokens.
inline TokenizedText tokenize(std::string_view text) {
  using namespace text_internal;
  TokenizedText out;
  out.raw = std::string(text);
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !is_space(text[j])) ++j;

    std::size_t lo = i, hi = j;
    std::vector<Token> leading, trailing;
    while (lo < hi) {
      std::size_t len = punct_prefix(text.substr(lo, hi - lo));
      if (len == 0) break;
      leading.push_back({std::string(text.substr(lo, len)), lo, lo + len, false});
      lo += len;
    }
    while (lo < hi) {
      std::size_t len = punct_suffix(text.substr(lo, hi - lo));
      if (len == 0) break;
      trailing.push_back(
          {std::string(text.substr(hi - len, len)), hi - len, hi, false});
      hi -= len;
    }
    out.tokens.insert(out.tokens.end(), leading.begin(), leading.end());
    if (lo < hi) out.tokens.push_back({std::string(text.substr(lo, hi - lo)), lo, hi, true});
    out.tokens.insert(out.tokens.end(), trailing.rbegin(), trailing.rend());
    i = j;
  }
  return out;
}

// Kept words in original order joined by single spaces. Punctuation tokens
// are always dropped.
inline std::string apply_mask(const TokenizedText& question, const Mask& mask) {
  if (mask.size() != question.word_count())
    throw ContractViolation("apply_mask: mask has " + std::to_string(mask.size()) +
                            " entries but question has " +
                            std::to_string(question.word_count()) + " words");
  if (mask.popcount() == 0)
    throw ContractViolation("apply_mask: mask keeps no words");
  std::string out;
  std::size_t w = 0;
  for (const auto& t : question.tokens) {
    if (!t.is_word) continue;
    if (mask[w++]) {
      if (!out.empty()) out += ' ';
      out += t.text;
    }
  }
  return out;
}

// SQuAD-style answer normalization: lowercase, strip punctuation, drop the
// articles a/an/the, collapse whitespace.
inline std::string normalize(std::string_view text) {
  using namespace text_internal;
  std::string stripped;
  stripped.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len = punct_prefix(text.substr(i));
    if (len > 0) {
      i += len;
      continue;
    }
    stripped += ascii_lower(text[i]);
    ++i;
  }
  std::string out;
  std::size_t i = 0;
  while (i < stripped.size()) {
    while (i < stripped.size() && is_space(stripped[i])) ++i;
    if (i >= stripped.size()) break;
    std::size_t j = i;
    while (j < stripped.size() && !is_space(stripped[j])) ++j;
    std::string_view word(stripped.data() + i, j - i);
    if (word != "a" && word != "an" && word != "the") {
      if (!out.empty()) out += ' ';
      out += word;
    }
    i = j;
  }
  return out;
}

// Whitespace split of an already normalized string.
inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && text_internal::is_space(s[i])) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && !text_internal::is_space(s[j])) ++j;
    out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = text_internal::ascii_lower(c);
  return out;
}

inline std::string join(const std::vector<std::string>& parts,
                        std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace rootprobe

#endif  // ROOTPROBE_TEXT_HPP_
