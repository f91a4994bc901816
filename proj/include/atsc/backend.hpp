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

// The scoring and training surface every model backend provides.
//
// Heads and the experiment harness only talk to `Backend`.  Concrete
// backends are TinyBackend (an in-process model for desk-scale runs and
// tests) and HttpBackend (a client for an external transformer runtime).

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "atsc/prompting.hpp"
#include "atsc/tokenizer.hpp"
#include "atsc/types.hpp"

namespace atsc {

enum class BackendFamily { masked_lm, causal_lm, nli, pair_classifier };
enum class Provenance { generic, domain_adapted };
// Which representation a pair classifier reads out: the pooled first
// position ([CLS]) or the next-sentence-prediction style pair head.
enum class PairReadout { cls, nsp };

std::string_view to_string(BackendFamily f);
std::string_view to_string(Provenance p);
std::string_view to_string(PairReadout r);
BackendFamily parse_backend_family(std::string_view s);
Provenance parse_provenance(std::string_view s);
PairReadout parse_pair_readout(std::string_view s);

struct BackendDescriptor {
  BackendFamily family = BackendFamily::masked_lm;
  Provenance provenance = Provenance::generic;
  std::optional<Domain> domain;
  std::optional<PairReadout> readout;  // pair_classifier only

  // NLI backends are generic; domain-adapted backends name their domain;
  // pair classifiers declare a readout.
  void validate() const;
  // "family/provenance[/domain]", the registry key.
  std::string key() const;
  bool operator==(const BackendDescriptor&) const = default;
};

struct TokenDistribution {
  std::map<std::string, double> entries;
  // True when entries cover only the requested candidates; their
  // probabilities are then the unrenormalized full-vocabulary values.
  bool restricted = false;

  double at(std::string_view item) const;
  double total() const;
};

// Unnormalized NLI scores for one (premise, hypothesis) pair.
struct NliLogits {
  double entail = 0.0;
  double neutral = 0.0;
  double contradict = 0.0;

  bool finite() const;
  // Softmax over (entail, neutral, contradict).
  std::array<double, 3> probabilities() const;
};

// Scores in class order (positive, negative, neutral).
struct PairLogits {
  std::array<double, 3> scores{};
  bool finite() const;
};

enum class LossKind {
  label_word_cross_entropy,
  three_way_cross_entropy,
  masked_lm,
  causal_lm
};
std::string_view to_string(LossKind k);

// Cloze or next-word prompt trained on the restricted label-word softmax.
struct LabelWordInstance {
  std::string text;
  PromptMode mode = PromptMode::cloze;
  std::array<std::string, 3> label_words;  // class order
  std::size_t target = 0;                  // index into label_words
};

// Review as premise with the two label-word hypotheses.  Trained on the
// softmax over (entail+, entail-, mean(neutral+, neutral-)) logits.
struct NliInstance {
  std::string premise;
  std::string positive_hypothesis;
  std::string negative_hypothesis;
  Polarity target = Polarity::neutral;
};

// (review, aspect) two-segment input for the no-prompt baselines.
struct PairInstance {
  std::string text;
  std::string aspect;
  Polarity target = Polarity::neutral;
};

// Token ids with a target per position; -1 marks positions outside the loss.
// An instance with no scored position contributes nothing.
struct MaskedLmInstance {
  std::vector<int> input_ids;
  std::vector<int> target_ids;
};

struct CausalLmInstance {
  std::vector<int> input_ids;
  std::vector<int> target_ids;
};

using TrainingInstance = std::variant<LabelWordInstance, NliInstance, PairInstance,
                                      MaskedLmInstance, CausalLmInstance>;

LossKind loss_kind(const TrainingInstance& instance);

// Defaults live in configs/default.json; the values here are the same.
struct TrainingSchedule {
  std::size_t epochs = 20;
  std::size_t batch_size = 4;
  double learning_rate = 1e-2;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  // Linear decay to zero over the planned steps, or a constant rate.
  bool linear_decay = false;
  // Stops after this many optimizer steps when set (pretraining).
  std::optional<std::size_t> max_steps;
};

struct FitReport {
  double initial_loss = 0.0;  // mean loss of the first epoch
  double final_loss = 0.0;    // mean loss of the last epoch
  double min_loss = 0.0;      // smallest epoch mean
  std::vector<double> epoch_losses;
  std::size_t steps = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;
  virtual std::vector<Piece> tokenize(std::string_view text) const = 0;
  virtual std::size_t max_length() const = 0;
  // Whether `word` is one vocabulary item, and its first item otherwise.
  virtual bool is_single_item(std::string_view word) const = 0;
  virtual std::string first_item(std::string_view word) const = 0;

  // Exactly one [MASK] in text.  Empty candidates select the full vocabulary;
  // every candidate must be a single item.
  virtual TokenDistribution mask_fill(std::string_view text_with_mask,
                                      std::span<const std::string> candidates) = 0;
  virtual TokenDistribution next_token(std::string_view prefix,
                                       std::span<const std::string> candidates) = 0;
  virtual NliLogits nli_score(std::string_view premise, std::string_view hypothesis) = 0;
  virtual PairLogits pair_classify(std::string_view text, std::string_view aspect) = 0;

  // Updates all parameters.  Throws BackendError on a non-finite loss.
  virtual FitReport fit(std::span<const TrainingInstance> instances,
                        const TrainingSchedule& schedule) = 0;

  // True once fit has run on task instances (label word, NLI or pair).
  virtual bool task_trained() const = 0;
  // Scoring may be called concurrently.
  virtual bool shareable() const { return false; }
};

// Number of "[MASK]" occurrences.
std::size_t count_masks(std::string_view text);

// Keeps the last `budget` pieces, dropping from the left.  With `protect`
// trailing pieces that alone exceed the budget, throws BackendError.
std::vector<Piece> truncate_left(std::vector<Piece> pieces, std::size_t budget,
                                 std::size_t protect = 0);

// Data order for one epoch: seeded_permutation(n, derive_seed(seed, epoch)).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

// Label words that are not single vocabulary items for this backend, each
// with the item that will be scored instead.
std::vector<std::pair<std::string, std::string>> check_label_words(
    const Backend& backend, const Verbalizer& verbalizer);

nlohmann::json to_json(const BackendDescriptor& d);
BackendDescriptor backend_descriptor_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainingInstance& instance);
TrainingInstance training_instance_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainingSchedule& schedule);
TrainingSchedule training_schedule_from_json(const nlohmann::json& j,
                                             TrainingSchedule defaults = {});
nlohmann::json to_json(const FitReport& report);
FitReport fit_report_from_json(const nlohmann::json& j);

}  // namespace atsc
