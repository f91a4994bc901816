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

// Domain-adaptive pretraining data.
//
// Masked LM: only adjectives, nouns and proper nouns may be masked.  Words
// are masked whole (every piece of a chosen word), and the number of masked
// words per sentence is k = max(1, floor(rate * candidate words)) when the
// sentence has any candidate.  Causal LM: contiguous windows over the
// seeded sentence order with next-item targets.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "atsc/backend.hpp"
#include "atsc/pos_tagger.hpp"
#include "atsc/tokenizer.hpp"

namespace atsc {

bool is_candidate_tag(Upos tag);

// Indices into `tags` of ADJ / NOUN / PROPN words.  Each tag's span must
// index its own text in `sentence`, in increasing non-overlapping order;
// otherwise ParseError names the offending span.
std::vector<std::size_t> select_candidates(std::string_view sentence,
                                           std::span<const TaggedToken> tags);

// Piece positions of each candidate word (pieces overlapping its span).
std::vector<std::vector<std::size_t>> candidate_pieces(std::span<const TaggedToken> tags,
                                                       std::span<const std::size_t> candidates,
                                                       std::span<const Piece> pieces);

struct MaskingOptions {
  double rate = 0.15;
  // 80% mask / 10% random item / 10% unchanged at masked positions.  Off:
  // every masked position becomes the mask item.
  bool corrupt_80_10_10 = false;
  int mask_id = WordPieceTokenizer::kMask;
  std::size_t vocab_size = 0;  // needed by the random branch
};

// The rate counts candidate words: k = max(1, floor(rate * words)) whole
// words are masked, each across all of its pieces.
struct MaskingPlan {
  std::vector<int> original_ids;
  std::vector<int> input_ids;  // after masking
  std::vector<std::size_t> candidate_positions;  // pieces
  std::vector<std::size_t> masked_positions;     // pieces
  std::size_t candidate_words = 0;
  std::vector<std::size_t> masked_words;  // indices into the candidate words
  double mask_rate = 0.15;

  std::size_t target_count() const;  // words
  // Targets are the original ids at masked positions, -1 elsewhere.  A plan
  // with nothing masked gives a loss-free instance.
  MaskedLmInstance instance() const;
};

MaskingPlan apply_masking(std::span<const Piece> pieces,
                          const std::vector<std::vector<std::size_t>>& candidate_words,
                          std::uint64_t seed, const MaskingOptions& options = {});

// Tags (or uses `tags`), aligns, and masks one sentence.
MaskingPlan plan_sentence(std::string_view sentence, const Backend& backend, std::uint64_t seed,
                          const MaskingOptions& options = {},
                          const std::vector<TaggedToken>* tags = nullptr);

// Sentences are shuffled by `seed`, joined with [SEP] and cut into windows
// of `window` items; the last window is padded with [PAD] / target -1.
std::vector<CausalLmInstance> clm_batches(const std::vector<std::vector<int>>& sentences,
                                          std::size_t window, std::uint64_t seed);

struct PretrainOptions {
  std::size_t steps = 100;
  std::size_t window = 64;
  std::uint64_t seed = 0;
  MaskingOptions masking;
  TrainingSchedule schedule;  // epochs are derived from steps
};

struct PretrainReport {
  std::size_t sentences = 0;
  std::size_t instances = 0;
  std::size_t masked_items = 0;
  FitReport fit;
};

// Builds masked- or causal-LM instances for the backend's family and fits
// for `options.steps` optimizer steps.
PretrainReport pretrain(Backend& backend, const std::vector<std::string>& sentences,
                        const PretrainOptions& options);

}  // namespace atsc
