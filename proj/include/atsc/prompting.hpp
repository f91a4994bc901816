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

// Aspect-dependent prompt rendering and the label-word verbalizer.
//
// A template pattern holds exactly one "{aspect}" placeholder and exactly one
// "[MASK]" slot.  Cloze rendering appends the filled pattern to the review,
// next-word rendering cuts the text at the slot, and hypothesis rendering
// fills the slot with the positive and negative label words.

#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "atsc/types.hpp"

namespace atsc {

inline constexpr std::string_view kMaskSlot = "[MASK]";
inline constexpr std::string_view kAspectSlot = "{aspect}";

struct PromptTemplate {
  std::string id;
  std::string pattern;

  // Throws ConfigError unless each placeholder occurs exactly once.
  void validate() const;
  bool operator==(const PromptTemplate&) const = default;
};

// "I felt the {aspect} was [MASK].", "The {aspect} made me feel [MASK].",
// "The {aspect} is [MASK]." with ids felt_was, made_me_feel, is.
const std::vector<PromptTemplate>& builtin_templates();
const PromptTemplate& builtin_template(std::string_view id);

enum class PromptMode { cloze, next_word };

struct RenderedPrompt {
  std::string full_text;
  // Byte offset of the mask slot (cloze) or of the insertion point
  // (next_word, always full_text.size()).
  std::size_t mask_offset = 0;
  PromptMode mode = PromptMode::cloze;
  // Pattern text that followed the slot; only set for next_word.
  std::string suffix;
};

struct HypothesisPair {
  std::string positive_hypothesis;
  std::string negative_hypothesis;
};

// Bijection between label words and polarities.
class Verbalizer {
 public:
  // good -> positive, bad -> negative, ok -> neutral.
  Verbalizer();
  Verbalizer(std::string positive_word, std::string negative_word,
             std::string neutral_word);

  const std::string& word(Polarity p) const { return words_[index_of(p)]; }
  Polarity polarity(std::string_view word) const;
  // Label words in class order (positive, negative, neutral).
  const std::array<std::string, 3>& words() const { return words_; }

 private:
  std::array<std::string, 3> words_;
};

RenderedPrompt render_cloze(const PromptTemplate& tmpl, std::string_view aspect,
                            std::string_view review);
RenderedPrompt render_next_word(const PromptTemplate& tmpl,
                                std::string_view aspect,
                                std::string_view review);
RenderedPrompt render(PromptMode mode, const PromptTemplate& tmpl,
                      std::string_view aspect, std::string_view review);
HypothesisPair render_hypotheses(const PromptTemplate& tmpl,
                                 std::string_view aspect,
                                 const Verbalizer& verbalizer = Verbalizer());

// Rewrites "{aspect} is" / "{aspect} was" to "are" / "were" so a plural
// stand-in such as "things" reads naturally.
PromptTemplate with_plural_agreement(const PromptTemplate& tmpl);

// Optional mapping from raw category labels (e.g. "anecdotes/miscellaneous")
// to the words substituted into prompts.  Unmapped aspects pass through.
class AspectAliases {
 public:
  AspectAliases() = default;
  explicit AspectAliases(std::map<std::string, std::string> table)
      : table_(table.begin(), table.end()) {}
  std::string apply(std::string_view aspect) const;
  bool empty() const { return table_.empty(); }

 private:
  std::map<std::string, std::string, std::less<>> table_;
};

// Built-in templates plus any registered from configuration.
class TemplateRegistry {
 public:
  TemplateRegistry();

  // Validates and registers; throws ConfigError on a duplicate id.
  void add(PromptTemplate tmpl);
  const PromptTemplate& get(std::string_view id) const;
  bool contains(std::string_view id) const;
  std::vector<std::string> ids() const;

  // Reads {"templates": [{"id": ..., "pattern": ...}, ...]}.
  void load(const nlohmann::json& config);

 private:
  std::vector<PromptTemplate> templates_;
};

}  // namespace atsc
