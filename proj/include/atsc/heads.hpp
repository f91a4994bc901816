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

// Prediction heads: backend scores -> ClassDistribution, plus the losses
// each head is trained with.
//
//   lm_cloze / lm_next_word  p(class) = p(label word) / sum over the three
//                            label words; other vocabulary items ignored.
//   nli                      premise = review, hypotheses = template filled
//                            with the positive / negative label word.
//                            positive <- entail(H+), negative <- entail(H-),
//                            neutral <- mean(neutral(H+), neutral(H-)).
//   baseline_cls / _nsp      softmax over a (review, aspect) pair head.

#pragma once

#include <array>
#include <string_view>
#include <utility>
#include <variant>

#include "atsc/backend.hpp"
#include "atsc/corpus.hpp"
#include "atsc/prompting.hpp"
#include "atsc/types.hpp"

namespace atsc {

enum class HeadKind { lm_cloze, lm_next_word, nli, baseline_cls, baseline_nsp };

std::string_view to_string(HeadKind h);
HeadKind parse_head_kind(std::string_view s);
bool is_baseline(HeadKind h);
bool uses_template(HeadKind h);
BackendFamily required_family(HeadKind h);
std::optional<PairReadout> required_readout(HeadKind h);
// Throws BackendError when the backend cannot serve this head.
void check_head_backend(HeadKind h, const BackendDescriptor& d);

// Probability-level (scores renormalized by their sum; the zero-shot
// default) or logit-level (softmax over combined logits; used for training).
enum class NliScoring { probability_argmax, logit_softmax };
std::string_view to_string(NliScoring s);
NliScoring parse_nli_scoring(std::string_view s);

// Restricts a label-word distribution to the three classes.  `items` are the
// vocabulary items scored for each label word (class order).
ClassDistribution label_word_distribution(const TokenDistribution& tokens,
                                          const std::array<std::string, 3>& items);

// Items to score for each label word: the word itself, or its first
// vocabulary item (with a logged warning) when it is split.
std::array<std::string, 3> scored_label_items(const Backend& backend,
                                              const Verbalizer& verbalizer);

ClassDistribution lm_predict(const LabeledExample& example, const PromptTemplate& tmpl,
                             const Verbalizer& verbalizer, Backend& backend,
                             PromptMode mode, const AspectAliases& aliases = {});

// Each argument is (entail, neutral, contradict) probabilities.
ClassDistribution combine_nli_probabilities(const std::array<double, 3>& positive_h,
                                            const std::array<double, 3>& negative_h);
// (entail+, entail-, mean(neutral+, neutral-)) in class order.
std::array<double, 3> combine_nli_logits(const NliLogits& positive_h,
                                         const NliLogits& negative_h);
ClassDistribution combine_nli(const NliLogits& positive_h, const NliLogits& negative_h,
                              NliScoring scoring);

ClassDistribution nli_predict(const LabeledExample& example, const PromptTemplate& tmpl,
                              Backend& backend, NliScoring scoring,
                              const Verbalizer& verbalizer = {},
                              const AspectAliases& aliases = {});

// Undefined before task training: throws Error for an untrained backend.
ClassDistribution baseline_predict(const LabeledExample& example, Backend& backend,
                                   HeadKind kind, const AspectAliases& aliases = {});

struct PredictOptions {
  NliScoring nli_scoring = NliScoring::probability_argmax;
  Verbalizer verbalizer;
  AspectAliases aliases;
};

ClassDistribution predict(HeadKind head, const LabeledExample& example,
                          const PromptTemplate* tmpl, Backend& backend,
                          const PredictOptions& options = {});

// -ln p(gold).
double cross_entropy(const ClassDistribution& prediction, Polarity gold);
double cross_entropy_from_logits(const std::array<double, 3>& logits, Polarity gold);

// What a head has scored for one example, as consumed by training_loss.
struct LabelWordScores {
  TokenDistribution tokens;
  std::array<std::string, 3> items;  // class order
};
struct NliPairScores {
  NliLogits positive_h;
  NliLogits negative_h;
};
using PredictionContext = std::variant<LabelWordScores, NliPairScores, PairLogits>;

// lm heads: restricted label-word cross-entropy; nli: cross-entropy of the
// logit-level softmax; baselines: cross-entropy of softmax(PairLogits).
double training_loss(HeadKind head, Polarity gold, const PredictionContext& context);

// The fit input for one labeled example; label targets go through the
// verbalizer for the LM heads.
TrainingInstance make_training_instance(HeadKind head, const LabeledExample& example,
                                        const PromptTemplate* tmpl,
                                        const Verbalizer& verbalizer = {},
                                        const AspectAliases& aliases = {});

}  // namespace atsc
