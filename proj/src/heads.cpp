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

#include "atsc/heads.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

namespace atsc {

std::string_view to_string(HeadKind h) {
  switch (h) {
    case HeadKind::lm_cloze: return "lm_cloze";
    case HeadKind::lm_next_word: return "lm_next_word";
    case HeadKind::nli: return "nli";
    case HeadKind::baseline_cls: return "baseline_cls";
    case HeadKind::baseline_nsp: return "baseline_nsp";
  }
  return "?";
}

HeadKind parse_head_kind(std::string_view s) {
  if (s == "lm_cloze") return HeadKind::lm_cloze;
  if (s == "lm_next_word") return HeadKind::lm_next_word;
  if (s == "nli") return HeadKind::nli;
  if (s == "baseline_cls") return HeadKind::baseline_cls;
  if (s == "baseline_nsp") return HeadKind::baseline_nsp;
  throw ConfigError("unknown head '" + std::string(s) + "'");
}

bool is_baseline(HeadKind h) {
  return h == HeadKind::baseline_cls || h == HeadKind::baseline_nsp;
}

bool uses_template(HeadKind h) { return !is_baseline(h); }

BackendFamily required_family(HeadKind h) {
  switch (h) {
    case HeadKind::lm_cloze: return BackendFamily::masked_lm;
    case HeadKind::lm_next_word: return BackendFamily::causal_lm;
    case HeadKind::nli: return BackendFamily::nli;
    default: return BackendFamily::pair_classifier;
  }
}

std::optional<PairReadout> required_readout(HeadKind h) {
  if (h == HeadKind::baseline_cls) return PairReadout::cls;
  if (h == HeadKind::baseline_nsp) return PairReadout::nsp;
  return std::nullopt;
}

void check_head_backend(HeadKind h, const BackendDescriptor& d) {
  if (d.family != required_family(h))
    throw BackendError(std::string("head ") + std::string(to_string(h)) + " needs a " +
                       std::string(to_string(required_family(h))) + " backend, got " +
                       std::string(to_string(d.family)));
  if (required_readout(h) && d.readout != required_readout(h))
    throw BackendError(std::string("head ") + std::string(to_string(h)) +
                       " needs the matching pair readout");
}

std::string_view to_string(NliScoring s) {
  return s == NliScoring::probability_argmax ? "probability_argmax" : "logit_softmax";
}

NliScoring parse_nli_scoring(std::string_view s) {
  if (s == "probability_argmax") return NliScoring::probability_argmax;
  if (s == "logit_softmax") return NliScoring::logit_softmax;
  throw ConfigError("unknown NLI scoring '" + std::string(s) + "'");
}

ClassDistribution label_word_distribution(const TokenDistribution& tokens,
                                          const std::array<std::string, 3>& items) {
  std::array<double, 3> p{};
  for (std::size_t i = 0; i < 3; ++i) {
    p[i] = tokens.at(items[i]);
    if (!std::isfinite(p[i]) || p[i] < 0)
      throw BackendError("invalid probability for label word '" + items[i] + "'");
  }
  if (p[0] + p[1] + p[2] <= 0.0)
    throw BackendError("all label-word probabilities are zero (degenerate backend)");
  return ClassDistribution::normalized(p[0], p[1], p[2]);
}

std::array<std::string, 3> scored_label_items(const Backend& backend,
                                              const Verbalizer& verbalizer) {
  std::array<std::string, 3> items;
  for (Polarity p : kPolarities) {
    const auto& w = verbalizer.word(p);
    if (backend.is_single_item(w)) {
      items[index_of(p)] = w;
    } else {
      items[index_of(p)] = backend.first_item(w);
      spdlog::warn("label word '{}' is not a single vocabulary item; scoring '{}'", w,
                   items[index_of(p)]);
    }
  }
  return items;
}

ClassDistribution lm_predict(const LabeledExample& example, const PromptTemplate& tmpl,
                             const Verbalizer& verbalizer, Backend& backend,
                             PromptMode mode, const AspectAliases& aliases) {
  check_head_backend(mode == PromptMode::cloze ? HeadKind::lm_cloze : HeadKind::lm_next_word,
                     backend.descriptor());
  auto items = scored_label_items(backend, verbalizer);
  auto prompt = render(mode, tmpl, aliases.apply(example.aspect), example.text);
  TokenDistribution tokens = mode == PromptMode::cloze
                                 ? backend.mask_fill(prompt.full_text, items)
                                 : backend.next_token(prompt.full_text, items);
  return label_word_distribution(tokens, items);
}

ClassDistribution combine_nli_probabilities(const std::array<double, 3>& positive_h,
                                            const std::array<double, 3>& negative_h) {
  double s_pos = positive_h[0];
  double s_neg = negative_h[0];
  double s_neu = 0.5 * (positive_h[1] + negative_h[1]);
  if (!std::isfinite(s_pos) || !std::isfinite(s_neg) || !std::isfinite(s_neu))
    throw BackendError("non-finite NLI score");
  return ClassDistribution::normalized(s_pos, s_neg, s_neu);
}

std::array<double, 3> combine_nli_logits(const NliLogits& positive_h,
                                         const NliLogits& negative_h) {
  return {positive_h.entail, negative_h.entail,
          0.5 * (positive_h.neutral + negative_h.neutral)};
}

ClassDistribution combine_nli(const NliLogits& positive_h, const NliLogits& negative_h,
                              NliScoring scoring) {
  if (!positive_h.finite() || !negative_h.finite())
    throw BackendError("non-finite NLI logits");
  if (scoring == NliScoring::probability_argmax)
    return combine_nli_probabilities(positive_h.probabilities(), negative_h.probabilities());
  return ClassDistribution::softmax(combine_nli_logits(positive_h, negative_h));
}

ClassDistribution nli_predict(const LabeledExample& example, const PromptTemplate& tmpl,
                              Backend& backend, NliScoring scoring,
                              const Verbalizer& verbalizer, const AspectAliases& aliases) {
  check_head_backend(HeadKind::nli, backend.descriptor());
  auto hyp = render_hypotheses(tmpl, aliases.apply(example.aspect), verbalizer);
  NliLogits pos = backend.nli_score(example.text, hyp.positive_hypothesis);
  NliLogits neg = backend.nli_score(example.text, hyp.negative_hypothesis);
  return combine_nli(pos, neg, scoring);
}

ClassDistribution baseline_predict(const LabeledExample& example, Backend& backend,
                                   HeadKind kind, const AspectAliases& aliases) {
  if (!is_baseline(kind)) throw Error("baseline_predict needs a baseline head");
  check_head_backend(kind, backend.descriptor());
  if (!backend.task_trained())
    throw Error("baseline undefined without training (no zero-shot baseline)");
  PairLogits logits = backend.pair_classify(example.text, aliases.apply(example.aspect));
  if (!logits.finite()) throw BackendError("non-finite pair logits");
  return ClassDistribution::softmax(logits.scores);
}

ClassDistribution predict(HeadKind head, const LabeledExample& example,
                          const PromptTemplate* tmpl, Backend& backend,
                          const PredictOptions& options) {
  if (uses_template(head) && !tmpl)
    throw Error(std::string("head ") + std::string(to_string(head)) + " needs a template");
  switch (head) {
    case HeadKind::lm_cloze:
      return lm_predict(example, *tmpl, options.verbalizer, backend, PromptMode::cloze,
                        options.aliases);
    case HeadKind::lm_next_word:
      return lm_predict(example, *tmpl, options.verbalizer, backend, PromptMode::next_word,
                        options.aliases);
    case HeadKind::nli:
      return nli_predict(example, *tmpl, backend, options.nli_scoring, options.verbalizer,
                         options.aliases);
    default:
      return baseline_predict(example, backend, head, options.aliases);
  }
}

double cross_entropy(const ClassDistribution& prediction, Polarity gold) {
  double p = prediction[gold];
  if (!std::isfinite(p) || p < 0) throw Error("non-finite probability in loss");
  return p <= 0.0 ? std::numeric_limits<double>::infinity() : -std::log(p);
}

double cross_entropy_from_logits(const std::array<double, 3>& logits, Polarity gold) {
  for (double l : logits)
    if (!std::isfinite(l)) throw Error("non-finite logit in loss");
  double m = std::max({logits[0], logits[1], logits[2]});
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  return -(logits[index_of(gold)] - m - std::log(z));
}

double training_loss(HeadKind head, Polarity gold, const PredictionContext& context) {
  double loss = 0.0;
  switch (head) {
    case HeadKind::lm_cloze:
    case HeadKind::lm_next_word: {
      const auto* s = std::get_if<LabelWordScores>(&context);
      if (!s) throw Error("LM loss needs label-word scores");
      loss = cross_entropy(label_word_distribution(s->tokens, s->items), gold);
      break;
    }
    case HeadKind::nli: {
      const auto* s = std::get_if<NliPairScores>(&context);
      if (!s) throw Error("NLI loss needs both hypothesis scores");
      loss = cross_entropy_from_logits(combine_nli_logits(s->positive_h, s->negative_h), gold);
      break;
    }
    default: {
      const auto* s = std::get_if<PairLogits>(&context);
      if (!s) throw Error("baseline loss needs pair logits");
      loss = cross_entropy_from_logits(s->scores, gold);
      break;
    }
  }
  if (!std::isfinite(loss)) throw Error("non-finite training loss");
  return loss;
}

TrainingInstance make_training_instance(HeadKind head, const LabeledExample& example,
                                        const PromptTemplate* tmpl,
                                        const Verbalizer& verbalizer,
                                        const AspectAliases& aliases) {
  if (uses_template(head) && !tmpl)
    throw Error(std::string("head ") + std::string(to_string(head)) + " needs a template");
  const std::string aspect = aliases.apply(example.aspect);
  switch (head) {
    case HeadKind::lm_cloze:
    case HeadKind::lm_next_word: {
      auto mode = head == HeadKind::lm_cloze ? PromptMode::cloze : PromptMode::next_word;
      LabelWordInstance x;
      x.text = render(mode, *tmpl, aspect, example.text).full_text;
      x.mode = mode;
      x.label_words = verbalizer.words();
      x.target = index_of(verbalizer.polarity(verbalizer.word(example.polarity)));
      return x;
    }
    case HeadKind::nli: {
      auto hyp = render_hypotheses(*tmpl, aspect, verbalizer);
      return NliInstance{example.text, hyp.positive_hypothesis, hyp.negative_hypothesis,
                         example.polarity};
    }
    default:
      return PairInstance{example.text, aspect, example.polarity};
  }
}

}  // namespace atsc
