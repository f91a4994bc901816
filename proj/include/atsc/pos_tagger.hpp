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

// Universal POS tags and a small rule-based English tagger.
//
// The tagger is a closed-class lexicon plus suffix rules; it exists so the
// pretrain command can run without an external model.  Callers with a real
// tagger pass their own TaggedToken lists to the pretrain API instead.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace atsc {

enum class Upos {
  ADJ, ADP, ADV, AUX, CCONJ, DET, INTJ, NOUN, NUM,
  PART, PRON, PROPN, PUNCT, SCONJ, SYM, VERB, X
};

std::string_view to_string(Upos tag);
Upos parse_upos(std::string_view s);

// One tagged word; [begin, end) are byte offsets into the sentence.
struct TaggedToken {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  Upos tag = Upos::X;
};

// Tokenizes with split_words() and tags each word.
std::vector<TaggedToken> tag_sentence(std::string_view sentence);

}  // namespace atsc
