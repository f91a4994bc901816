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

// SemEval-2014 Task 4 ingestion, few-shot sampling and pretraining corpora.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "atsc/types.hpp"

namespace atsc {

// Subtask 2 (aspect terms) or Subtask 4 (aspect categories).
enum class Task { atsc, acsc };

Task parse_task(std::string_view s);
std::string_view to_string(Task t);

// Half-open [from, to) in code points.
struct CharSpan {
  std::size_t from = 0;
  std::size_t to = 0;
};

struct RawAspect {
  std::string surface;
  RawPolarity polarity = RawPolarity::neutral;
  std::optional<CharSpan> span;
};

struct RawAnnotation {
  std::string sentence_id;
  std::string text;
  std::vector<RawAspect> aspects;
  AspectKind aspect_kind = AspectKind::term;
};

struct LabeledExample {
  std::string text;
  std::string aspect;
  Polarity polarity = Polarity::neutral;
  Domain domain = Domain::restaurants;
  AspectKind aspect_kind = AspectKind::term;
  std::string source_id;

  bool operator==(const LabeledExample&) const = default;
};

// Raised when records are structurally valid XML but miss required
// attributes.  Lists every offending sentence id.
class RecordError : public ParseError {
 public:
  RecordError(const std::string& what, std::vector<std::string> sentence_ids)
      : ParseError(what), sentence_ids_(std::move(sentence_ids)) {}
  const std::vector<std::string>& sentence_ids() const { return sentence_ids_; }

 private:
  std::vector<std::string> sentence_ids_;
};

// One RawAnnotation per <sentence>, in document order, conflicts included.
// Span mismatches are logged and kept.
std::vector<RawAnnotation> parse_semeval(std::string_view xml_document, Task kind);
std::vector<RawAnnotation> parse_semeval_file(const std::filesystem::path& path,
                                              Task kind);

// Drops conflict aspects and emits one example per remaining aspect.
// source_id is "<sentence_id>#<aspect index in the raw record>".
std::vector<LabeledExample> preprocess(const std::vector<RawAnnotation>& raw,
                                       Domain domain);

// Substring of `text` by code-point offsets.  Throws on out-of-range spans.
std::string codepoint_substr(std::string_view text, CharSpan span);

struct FewShotSpec {
  // nullopt selects the whole split.
  std::optional<std::size_t> size;
  std::uint64_t seed = 0;

  static FewShotSpec full(std::uint64_t seed) { return {std::nullopt, seed}; }
  bool is_full() const { return !size.has_value(); }
  bool is_zero() const { return size.has_value() && *size == 0; }
  std::string label() const;  // "0", "16", ..., "full"
};

// {Zero, 16, 64, 256, 1024, Full}.
const std::vector<FewShotSpec>& paper_size_grid();
std::optional<std::size_t> parse_few_shot_size(std::string_view s);

// Uniform sampling without replacement (no stratification): the first `size`
// entries of seeded_permutation(n, seed), in permuted order.  Full returns the
// whole split in its original order.
std::vector<LabeledExample> sample_few_shot(const std::vector<LabeledExample>& examples,
                                            const FewShotSpec& spec);

struct PretrainSentence {
  std::string text;
  Domain domain = Domain::laptops;
};

struct CorpusStats {
  std::size_t records_read = 0;
  std::size_t records_skipped = 0;   // unreadable
  std::size_t reviews_consumed = 0;  // category matched the domain
  std::size_t sentences = 0;
};

// Category accepted for each domain: "electronics" feeds laptops and
// "restaurants" feeds restaurants (case-insensitive, any listed category).
std::string_view source_category(Domain domain);

// Streams newline-delimited review records.  Each line is a JSON object with
// a category ("category" or "categories": string, comma list or array) and a
// text ("text" or "reviewText"), or a tab-separated "category<TAB>text" pair.
// At most `limit` matching reviews are consumed.  Unreadable records are
// counted and skipped.
CorpusStats prepare_pretrain_corpus(
    std::istream& raw_reviews, Domain domain, std::optional<std::size_t> limit,
    const std::function<void(const PretrainSentence&)>& emit);

// Collapses whitespace and splits after . ! ? when followed by whitespace,
// except after common abbreviations and single-letter initials.
std::vector<std::string> split_sentences(std::string_view text);
std::string normalize_whitespace(std::string_view text);

// JSON-lines record format.  A first line of the form {"_meta": {...}} is
// written when `meta` is given and ignored on reading.
nlohmann::json to_json(const LabeledExample& example);
LabeledExample labeled_example_from_json(const nlohmann::json& j);
void write_examples(std::ostream& out, const std::vector<LabeledExample>& examples,
                    const nlohmann::json* meta = nullptr);
std::vector<LabeledExample> read_examples(std::istream& in);
std::vector<LabeledExample> read_examples_file(const std::filesystem::path& path);

struct ClassCounts {
  std::size_t positive = 0, negative = 0, neutral = 0;
  std::size_t total() const { return positive + negative + neutral; }
};
ClassCounts count_classes(const std::vector<LabeledExample>& examples);

}  // namespace atsc
