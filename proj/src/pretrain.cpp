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

#include "atsc/pretrain.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "atsc/rng.hpp"

namespace atsc {

bool is_candidate_tag(Upos tag) {
  return tag == Upos::ADJ || tag == Upos::NOUN || tag == Upos::PROPN;
}

std::vector<std::size_t> select_candidates(std::string_view sentence,
                                           std::span<const TaggedToken> tags) {
  std::vector<std::size_t> out;
  std::size_t last_end = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto& t = tags[i];
    auto where = "[" + std::to_string(t.begin) + ", " + std::to_string(t.end) + ") '" + t.text + "'";
    if (t.begin >= t.end || t.end > sentence.size())
      throw ParseError("tag span " + where + " is outside the sentence");
    if (t.begin < last_end) throw ParseError("tag span " + where + " overlaps the previous one");
    if (sentence.substr(t.begin, t.end - t.begin) != t.text)
      throw ParseError("tag span " + where + " does not match the sentence text '" +
                       std::string(sentence.substr(t.begin, t.end - t.begin)) + "'");
    last_end = t.end;
    if (is_candidate_tag(t.tag)) out.push_back(i);
  }
  return out;
}

std::vector<std::vector<std::size_t>> candidate_pieces(std::span<const TaggedToken> tags,
                                                       std::span<const std::size_t> candidates,
                                                       std::span<const Piece> pieces) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t c : candidates) {
    if (c >= tags.size()) throw Error("candidate index out of range");
    const auto& t = tags[c];
    std::vector<std::size_t> positions;
    for (std::size_t p = 0; p < pieces.size(); ++p)
      if (pieces[p].begin < t.end && t.begin < pieces[p].end) positions.push_back(p);
    // A word lost to truncation simply has no pieces.
    if (!positions.empty()) out.push_back(std::move(positions));
  }
  return out;
}

std::size_t MaskingPlan::target_count() const {
  if (candidate_words == 0) return 0;
  auto k = static_cast<std::size_t>(std::floor(mask_rate * candidate_words + 1e-9));
  return std::clamp<std::size_t>(k, 1, candidate_words);
}

MaskedLmInstance MaskingPlan::instance() const {
  MaskedLmInstance x{input_ids, std::vector<int>(input_ids.size(), -1)};
  for (std::size_t p : masked_positions) x.target_ids[p] = original_ids[p];
  return x;
}

MaskingPlan apply_masking(std::span<const Piece> pieces,
                          const std::vector<std::vector<std::size_t>>& candidate_words,
                          std::uint64_t seed, const MaskingOptions& options) {
  if (!(options.rate >= 0.0 && options.rate <= 1.0))
    throw ConfigError("mask rate must lie in [0, 1]");
  MaskingPlan plan;
  plan.mask_rate = options.rate;
  for (const auto& p : pieces) plan.original_ids.push_back(p.id);
  plan.input_ids = plan.original_ids;
  for (const auto& w : candidate_words)
    for (std::size_t p : w) {
      if (p >= pieces.size()) throw Error("candidate position out of range");
      plan.candidate_positions.push_back(p);
    }
  std::sort(plan.candidate_positions.begin(), plan.candidate_positions.end());
  plan.candidate_positions.erase(
      std::unique(plan.candidate_positions.begin(), plan.candidate_positions.end()),
      plan.candidate_positions.end());
  for (const auto& w : candidate_words) plan.candidate_words += !w.empty();
  if (plan.candidate_words == 0) return plan;

  Rng rng(seed);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < candidate_words.size(); ++i)
    if (!candidate_words[i].empty()) order.push_back(i);
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(plan.target_count());
  std::sort(order.begin(), order.end());
  plan.masked_words = order;
  for (std::size_t w : order)
    plan.masked_positions.insert(plan.masked_positions.end(), candidate_words[w].begin(),
                                 candidate_words[w].end());
  std::sort(plan.masked_positions.begin(), plan.masked_positions.end());
  plan.masked_positions.erase(
      std::unique(plan.masked_positions.begin(), plan.masked_positions.end()),
      plan.masked_positions.end());

  for (std::size_t p : plan.masked_positions) {
    if (!options.corrupt_80_10_10) {
      plan.input_ids[p] = options.mask_id;
      continue;
    }
    double u = rng.uniform01();
    if (u < 0.8) {
      plan.input_ids[p] = options.mask_id;
    } else if (u < 0.9) {
      if (options.vocab_size <= 5) throw ConfigError("random corruption needs the vocabulary size");
      // Skip the five special items.
      plan.input_ids[p] = 5 + static_cast<int>(rng.uniform_index(options.vocab_size - 5));
    }
  }
  return plan;
}

MaskingPlan plan_sentence(std::string_view sentence, const Backend& backend, std::uint64_t seed,
                          const MaskingOptions& options, const std::vector<TaggedToken>* tags) {
  std::vector<TaggedToken> own;
  if (!tags) {
    own = tag_sentence(sentence);
    tags = &own;
  }
  auto candidates = select_candidates(sentence, *tags);
  auto pieces = truncate_left(backend.tokenize(sentence), backend.max_length());
  return apply_masking(pieces, candidate_pieces(*tags, candidates, pieces), seed, options);
}

std::vector<CausalLmInstance> clm_batches(const std::vector<std::vector<int>>& sentences,
                                          std::size_t window, std::uint64_t seed) {
  if (window == 0) throw ConfigError("window must be positive");
  std::vector<int> stream;
  for (std::size_t i : seeded_permutation(sentences.size(), seed)) {
    if (sentences[i].empty()) continue;
    stream.insert(stream.end(), sentences[i].begin(), sentences[i].end());
    stream.push_back(WordPieceTokenizer::kSep);
  }
  std::vector<CausalLmInstance> out;
  for (std::size_t start = 0; start + 1 < stream.size(); start += window) {
    CausalLmInstance x;
    for (std::size_t j = 0; j < window; ++j) {
      std::size_t at = start + j;
      x.input_ids.push_back(at < stream.size() ? stream[at] : WordPieceTokenizer::kPad);
      x.target_ids.push_back(at + 1 < stream.size() ? stream[at + 1] : -1);
    }
    out.push_back(std::move(x));
  }
  return out;
}

PretrainReport pretrain(Backend& backend, const std::vector<std::string>& sentences,
                        const PretrainOptions& options) {
  const auto family = backend.descriptor().family;
  if (family != BackendFamily::masked_lm && family != BackendFamily::causal_lm)
    throw BackendError("pretraining needs a masked_lm or causal_lm backend");
  if (options.steps == 0) throw ConfigError("pretraining needs steps > 0");

  PretrainReport report;
  std::vector<TrainingInstance> instances;
  if (family == BackendFamily::masked_lm) {
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      auto plan = plan_sentence(sentences[i], backend, derive_seed(options.seed, i),
                                options.masking);
      ++report.sentences;
      if (plan.masked_positions.empty()) continue;  // nothing to score
      report.masked_items += plan.masked_positions.size();
      instances.push_back(plan.instance());
    }
  } else {
    if (options.window > backend.max_length())
      throw ConfigError("window exceeds the backend length budget");
    std::vector<std::vector<int>> ids;
    for (const auto& s : sentences) {
      std::vector<int> row;
      for (const auto& p : backend.tokenize(s)) row.push_back(p.id);
      ids.push_back(std::move(row));
    }
    report.sentences = sentences.size();
    for (auto& x : clm_batches(ids, options.window, options.seed)) instances.push_back(std::move(x));
  }
  report.instances = instances.size();
  if (instances.empty()) {
    spdlog::warn("no pretraining instances produced from {} sentences", sentences.size());
    return report;
  }
  TrainingSchedule schedule = options.schedule;
  schedule.seed = options.seed;
  std::size_t per_epoch = (instances.size() + schedule.batch_size - 1) / schedule.batch_size;
  schedule.epochs = (options.steps + per_epoch - 1) / per_epoch;
  schedule.max_steps = options.steps;
  report.fit = backend.fit(instances, schedule);
  return report;
}

}  // namespace atsc
