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

#include "atsc/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <nlohmann/json.hpp>

namespace atsc {
namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size()))
    ++count;
  return count;
}

void check_aspect(std::string_view aspect) {
  if (aspect.empty()) throw Error("prompt aspect is empty");
  if (aspect.find(kMaskSlot) != std::string_view::npos)
    throw Error("aspect '" + std::string(aspect) +
                "' contains the mask token literal");
}

// Pattern with the aspect substituted; the mask slot is left in place.
std::string fill_aspect(const PromptTemplate& tmpl, std::string_view aspect) {
  std::string out = tmpl.pattern;
  auto pos = out.find(kAspectSlot);
  out.replace(pos, kAspectSlot.size(), aspect);
  return out;
}

std::string join_review(std::string_view review, std::string_view prompt) {
  if (review.empty()) return std::string(prompt);
  std::string out(review);
  out += ' ';
  out += prompt;
  return out;
}

}  // namespace

void PromptTemplate::validate() const {
  if (id.empty()) throw ConfigError("prompt template has an empty id");
  if (count_occurrences(pattern, kAspectSlot) != 1)
    throw ConfigError("template '" + id + "' must contain exactly one {aspect}");
  if (count_occurrences(pattern, kMaskSlot) != 1)
    throw ConfigError("template '" + id + "' must contain exactly one [MASK]");
}

const std::vector<PromptTemplate>& builtin_templates() {
  static const std::vector<PromptTemplate> templates = {
      {"felt_was", "I felt the {aspect} was [MASK]."},
      {"made_me_feel", "The {aspect} made me feel [MASK]."},
      {"is", "The {aspect} is [MASK]."},
  };
  return templates;
}

const PromptTemplate& builtin_template(std::string_view id) {
  for (const auto& t : builtin_templates())
    if (t.id == id) return t;
  throw ConfigError("unknown built-in template '" + std::string(id) + "'");
}

Verbalizer::Verbalizer() : Verbalizer("good", "bad", "ok") {}

Verbalizer::Verbalizer(std::string positive_word, std::string negative_word,
                       std::string neutral_word)
    : words_{std::move(positive_word), std::move(negative_word),
             std::move(neutral_word)} {
  std::set<std::string> distinct(words_.begin(), words_.end());
  if (distinct.size() != 3 || distinct.count(""))
    throw ConfigError("verbalizer label words must be three distinct words");
  for (const auto& w : words_)
    if (w.find(' ') != std::string::npos)
      throw ConfigError("label word '" + w + "' contains whitespace");
}

Polarity Verbalizer::polarity(std::string_view word) const {
  for (Polarity p : kPolarities)
    if (words_[index_of(p)] == word) return p;
  throw Error("'" + std::string(word) + "' is not a label word");
}

RenderedPrompt render_cloze(const PromptTemplate& tmpl, std::string_view aspect,
                            std::string_view review) {
  check_aspect(aspect);
  std::string prompt = fill_aspect(tmpl, aspect);
  std::size_t slot = prompt.find(kMaskSlot);
  RenderedPrompt out;
  out.full_text = join_review(review, prompt);
  out.mask_offset = out.full_text.size() - prompt.size() + slot;
  out.mode = PromptMode::cloze;
  return out;
}

RenderedPrompt render_next_word(const PromptTemplate& tmpl,
                                std::string_view aspect,
                                std::string_view review) {
  check_aspect(aspect);
  std::string prompt = fill_aspect(tmpl, aspect);
  std::size_t slot = prompt.find(kMaskSlot);
  RenderedPrompt out;
  out.suffix = prompt.substr(slot + kMaskSlot.size());
  std::string head = prompt.substr(0, slot);
  while (!head.empty() && head.back() == ' ') head.pop_back();
  out.full_text = join_review(review, head);
  out.mask_offset = out.full_text.size();
  out.mode = PromptMode::next_word;
  return out;
}

RenderedPrompt render(PromptMode mode, const PromptTemplate& tmpl,
                      std::string_view aspect, std::string_view review) {
  return mode == PromptMode::cloze ? render_cloze(tmpl, aspect, review)
                                   : render_next_word(tmpl, aspect, review);
}

HypothesisPair render_hypotheses(const PromptTemplate& tmpl,
                                 std::string_view aspect,
                                 const Verbalizer& verbalizer) {
  check_aspect(aspect);
  std::string prompt = fill_aspect(tmpl, aspect);
  std::size_t slot = prompt.find(kMaskSlot);
  HypothesisPair pair{prompt, prompt};
  pair.positive_hypothesis.replace(slot, kMaskSlot.size(),
                                   verbalizer.word(Polarity::positive));
  pair.negative_hypothesis.replace(slot, kMaskSlot.size(),
                                   verbalizer.word(Polarity::negative));
  return pair;
}

PromptTemplate with_plural_agreement(const PromptTemplate& tmpl) {
  PromptTemplate out = tmpl;
  const std::string base(kAspectSlot);
  for (auto [singular, plural] : {std::pair{" is", " are"}, {" was", " were"}}) {
    std::string from = base + singular;
    auto pos = out.pattern.find(from);
    if (pos == std::string::npos) continue;
    std::size_t end = pos + from.size();
    // Only whole words: "{aspect} is" but not "{aspect} isn't".
    if (end < out.pattern.size() && std::isalpha(static_cast<unsigned char>(out.pattern[end])))
      continue;
    out.pattern.replace(pos, from.size(), base + plural);
  }
  return out;
}

std::string AspectAliases::apply(std::string_view aspect) const {
  auto it = table_.find(aspect);
  return it == table_.end() ? std::string(aspect) : it->second;
}

TemplateRegistry::TemplateRegistry() : templates_(builtin_templates()) {}

void TemplateRegistry::add(PromptTemplate tmpl) {
  tmpl.validate();
  if (contains(tmpl.id))
    throw ConfigError("duplicate template id '" + tmpl.id + "'");
  templates_.push_back(std::move(tmpl));
}

const PromptTemplate& TemplateRegistry::get(std::string_view id) const {
  for (const auto& t : templates_)
    if (t.id == id) return t;
  throw ConfigError("unknown template '" + std::string(id) + "'");
}

bool TemplateRegistry::contains(std::string_view id) const {
  return std::any_of(templates_.begin(), templates_.end(),
                     [&](const PromptTemplate& t) { return t.id == id; });
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& t : templates_) out.push_back(t.id);
  return out;
}

void TemplateRegistry::load(const nlohmann::json& config) {
  if (!config.contains("templates")) return;
  for (const auto& entry : config.at("templates"))
    add({entry.at("id").get<std::string>(),
         entry.at("pattern").get<std::string>()});
}

}  // namespace atsc
