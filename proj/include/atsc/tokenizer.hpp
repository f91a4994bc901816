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

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace atsc {

// A word of the reference pre-tokenization, with byte offsets.
struct WordSpan {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Reference word segmentation shared by POS tags and sub-word alignment:
// maximal runs of ASCII alphanumerics and non-ASCII bytes form words, every
// other non-space byte is its own word, and "[MASK]" stays whole.
std::vector<WordSpan> split_words(std::string_view text);

// A backend vocabulary item with the byte range of text it covers.
struct Piece {
  std::string text;
  int id = -1;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Greedy longest-match-first WordPiece over split_words output.
// Continuation pieces carry a "##" prefix.
class WordPieceTokenizer {
 public:
  static constexpr int kPad = 0, kUnk = 1, kCls = 2, kSep = 3, kMask = 4;

  WordPieceTokenizer() = default;
  // The first five entries must be [PAD] [UNK] [CLS] [SEP] [MASK].
  explicit WordPieceTokenizer(std::vector<std::string> vocab, bool lowercase = true);

  struct BuildOptions {
    std::size_t min_count = 2;
    std::size_t max_words = 8000;
    // Always kept as whole words regardless of frequency.
    std::vector<std::string> required_words;
    bool lowercase = true;
  };
  // Frequent words become whole entries; every character seen is added as a
  // start piece and a "##" continuation so any word can be segmented.
  static WordPieceTokenizer build(std::span<const std::string> texts,
                                  const BuildOptions& options);

  std::vector<Piece> tokenize(std::string_view text) const;

  std::optional<int> id(std::string_view token) const;
  const std::string& token(int id) const { return vocab_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return vocab_.size(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  bool lowercase() const { return lowercase_; }

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  bool lowercase_ = true;
};

}  // namespace atsc
