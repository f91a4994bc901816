// Copyright 2026 The ATSC Prompts Authors.
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

#include "atsc/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "atsc/types.hpp"

namespace atsc {
namespace {

constexpr std::string_view kMaskLiteral = "[MASK]";

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<WordSpan> split_words(std::string_view text) {
  std::vector<WordSpan> out;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (text.substr(i, kMaskLiteral.size()) == kMaskLiteral) {
      out.push_back({std::string(kMaskLiteral), i, i + kMaskLiteral.size()});
      i += kMaskLiteral.size();
      continue;
    }
    std::size_t j = i + 1;
    if (is_word_byte(c))
      while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
    out.push_back({std::string(text.substr(i, j - i)), i, j});
    i = j;
  }
  return out;
}

WordPieceTokenizer::WordPieceTokenizer(std::vector<std::string> vocab, bool lowercase)
    : vocab_(std::move(vocab)), lowercase_(lowercase) {
  static const char* specials[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  if (vocab_.size() < 5) throw Error("vocabulary is missing special tokens");
  for (int i = 0; i < 5; ++i)
    if (vocab_[i] != specials[i])
      throw Error("vocabulary entry " + std::to_string(i) + " must be " + specials[i]);
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<int>(i)).second)
      throw Error("duplicate vocabulary entry '" + vocab_[i] + "'");
  }
}

WordPieceTokenizer WordPieceTokenizer::build(std::span<const std::string> texts,
                                             const BuildOptions& options) {
  std::map<std::string, std::size_t> counts;
  std::set<std::string> chars;
  for (const auto& t : texts) {
    for (const auto& w : split_words(t)) {
      if (w.text == kMaskLiteral) continue;
      std::string word = options.lowercase ? to_lower(w.text) : w.text;
      ++counts[word];
      for (char c : word) chars.insert(std::string(1, c));
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> vocab = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  std::set<std::string> seen(vocab.begin(), vocab.end());
  auto add = [&](const std::string& s) {
    if (seen.insert(s).second) vocab.push_back(s);
  };
  for (const auto& w : options.required_words) {
    std::string word = options.lowercase ? to_lower(w) : w;
    add(word);
    for (char c : word) chars.insert(std::string(1, c));
  }
  std::size_t words = 0;
  for (const auto& [w, n] : ranked) {
    if (n < options.min_count || words >= options.max_words) break;
    add(w);
    ++words;
  }
  for (const auto& c : chars) {
    add(c);
    add("##" + c);
  }
  return WordPieceTokenizer(std::move(vocab), options.lowercase);
}

std::optional<int> WordPieceTokenizer::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<Piece> WordPieceTokenizer::tokenize(std::string_view text) const {
  std::vector<Piece> out;
  for (const auto& w : split_words(text)) {
    if (w.text == kMaskLiteral) {
      out.push_back({"[MASK]", kMask, w.begin, w.end});
      continue;
    }
    std::string word = lowercase_ ? to_lower(w.text) : w.text;
    std::vector<Piece> pieces;
    std::size_t start = 0;
    bool failed = false;
    while (start < word.size()) {
      std::size_t end = word.size();
      std::optional<int> found;
      std::string candidate;
      while (end > start) {
        candidate = (start > 0 ? "##" : "") + word.substr(start, end - start);
        found = id(candidate);
        if (found) break;
        --end;
      }
      if (!found) {
        failed = true;
        break;
      }
      pieces.push_back({candidate, *found, w.begin + start, w.begin + end});
      start = end;
    }
    if (failed)
      out.push_back({"[UNK]", kUnk, w.begin, w.end});
    else
      out.insert(out.end(), pieces.begin(), pieces.end());
  }
  return out;
}

}  // namespace atsc
