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

#include "atsc/backend.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "atsc/rng.hpp"

namespace atsc {

std::string_view to_string(BackendFamily f) {
  switch (f) {
    case BackendFamily::masked_lm: return "masked_lm";
    case BackendFamily::causal_lm: return "causal_lm";
    case BackendFamily::nli: return "nli";
    case BackendFamily::pair_classifier: return "pair_classifier";
  }
  return "?";
}

std::string_view to_string(Provenance p) {
  return p == Provenance::generic ? "generic" : "domain_adapted";
}

std::string_view to_string(PairReadout r) { return r == PairReadout::cls ? "cls" : "nsp"; }

BackendFamily parse_backend_family(std::string_view s) {
  if (s == "masked_lm") return BackendFamily::masked_lm;
  if (s == "causal_lm") return BackendFamily::causal_lm;
  if (s == "nli") return BackendFamily::nli;
  if (s == "pair_classifier") return BackendFamily::pair_classifier;
  throw ConfigError("unknown backend family '" + std::string(s) + "'");
}

Provenance parse_provenance(std::string_view s) {
  if (s == "generic") return Provenance::generic;
  if (s == "domain_adapted") return Provenance::domain_adapted;
  throw ConfigError("unknown provenance '" + std::string(s) + "'");
}

PairReadout parse_pair_readout(std::string_view s) {
  if (s == "cls") return PairReadout::cls;
  if (s == "nsp") return PairReadout::nsp;
  throw ConfigError("unknown pair readout '" + std::string(s) + "'");
}

std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::label_word_cross_entropy: return "label_word_cross_entropy";
    case LossKind::three_way_cross_entropy: return "three_way_cross_entropy";
    case LossKind::masked_lm: return "masked_lm";
    case LossKind::causal_lm: return "causal_lm";
  }
  return "?";
}

void BackendDescriptor::validate() const {
  if (family == BackendFamily::nli && provenance != Provenance::generic)
    throw ConfigError("NLI backends must be generic (no review-text pretraining)");
  if (provenance == Provenance::domain_adapted && !domain)
    throw ConfigError("domain-adapted backend must name its domain");
  if (family == BackendFamily::pair_classifier && !readout)
    throw ConfigError("pair classifier must declare a readout (cls or nsp)");
  if (family != BackendFamily::pair_classifier && readout)
    throw ConfigError("only pair classifiers take a readout");
}

std::string BackendDescriptor::key() const {
  std::string k = std::string(to_string(family)) + "/" + std::string(to_string(provenance));
  if (domain) k += "/" + std::string(to_string(*domain));
  return k;
}

double TokenDistribution::at(std::string_view item) const {
  auto it = entries.find(std::string(item));
  if (it == entries.end()) throw BackendError("no probability for '" + std::string(item) + "'");
  return it->second;
}

double TokenDistribution::total() const {
  double t = 0.0;
  for (const auto& [k, v] : entries) t += v;
  return t;
}

bool NliLogits::finite() const {
  return std::isfinite(entail) && std::isfinite(neutral) && std::isfinite(contradict);
}

std::array<double, 3> NliLogits::probabilities() const {
  double m = std::max({entail, neutral, contradict});
  std::array<double, 3> e = {std::exp(entail - m), std::exp(neutral - m),
                             std::exp(contradict - m)};
  double z = e[0] + e[1] + e[2];
  return {e[0] / z, e[1] / z, e[2] / z};
}

bool PairLogits::finite() const {
  return std::all_of(scores.begin(), scores.end(), [](double s) { return std::isfinite(s); });
}

LossKind loss_kind(const TrainingInstance& instance) {
  switch (instance.index()) {
    case 0: return LossKind::label_word_cross_entropy;
    case 1:
    case 2: return LossKind::three_way_cross_entropy;
    case 3: return LossKind::masked_lm;
    default: return LossKind::causal_lm;
  }
}

std::size_t count_masks(std::string_view text) {
  std::size_t n = 0;
  for (auto pos = text.find(kMaskSlot); pos != std::string_view::npos;
       pos = text.find(kMaskSlot, pos + kMaskSlot.size()))
    ++n;
  return n;
}

std::vector<Piece> truncate_left(std::vector<Piece> pieces, std::size_t budget,
                                 std::size_t protect) {
  if (protect > budget)
    throw BackendError("prompt of " + std::to_string(protect) +
                       " items exceeds the length budget of " + std::to_string(budget));
  if (pieces.size() <= budget) return pieces;
  pieces.erase(pieces.begin(), pieces.end() - static_cast<std::ptrdiff_t>(budget));
  return pieces;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  return seeded_permutation(n, derive_seed(seed, epoch));
}

std::vector<std::pair<std::string, std::string>> check_label_words(
    const Backend& backend, const Verbalizer& verbalizer) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& w : verbalizer.words())
    if (!backend.is_single_item(w)) out.emplace_back(w, backend.first_item(w));
  return out;
}

nlohmann::json to_json(const BackendDescriptor& d) {
  nlohmann::json j{{"family", to_string(d.family)}, {"provenance", to_string(d.provenance)}};
  if (d.domain) j["domain"] = to_string(*d.domain);
  if (d.readout) j["readout"] = to_string(*d.readout);
  return j;
}

BackendDescriptor backend_descriptor_from_json(const nlohmann::json& j) {
  BackendDescriptor d;
  d.family = parse_backend_family(j.at("family").get<std::string>());
  d.provenance = parse_provenance(j.value("provenance", "generic"));
  if (j.contains("domain") && !j["domain"].is_null())
    d.domain = parse_domain(j["domain"].get<std::string>());
  if (j.contains("readout") && !j["readout"].is_null())
    d.readout = parse_pair_readout(j["readout"].get<std::string>());
  return d;
}

nlohmann::json to_json(const TrainingInstance& instance) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, LabelWordInstance>) {
          return {{"kind", "label_word"},
                  {"text", x.text},
                  {"mode", x.mode == PromptMode::cloze ? "cloze" : "next_word"},
                  {"label_words", x.label_words},
                  {"target", x.target}};
        } else if constexpr (std::is_same_v<T, NliInstance>) {
          return {{"kind", "nli"},
                  {"premise", x.premise},
                  {"positive_hypothesis", x.positive_hypothesis},
                  {"negative_hypothesis", x.negative_hypothesis},
                  {"target", index_of(x.target)}};
        } else if constexpr (std::is_same_v<T, PairInstance>) {
          return {{"kind", "pair"},
                  {"text", x.text},
                  {"aspect", x.aspect},
                  {"target", index_of(x.target)}};
        } else if constexpr (std::is_same_v<T, MaskedLmInstance>) {
          return {{"kind", "masked_lm"}, {"input_ids", x.input_ids}, {"target_ids", x.target_ids}};
        } else {
          return {{"kind", "causal_lm"}, {"input_ids", x.input_ids}, {"target_ids", x.target_ids}};
        }
      },
      instance);
}

TrainingInstance training_instance_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  auto polarity_at = [&](const char* key) {
    auto idx = j.at(key).get<std::size_t>();
    if (idx > 2) throw Error("class index out of range");
    return kPolarities[idx];
  };
  if (kind == "label_word") {
    LabelWordInstance x;
    x.text = j.at("text").get<std::string>();
    x.mode = j.at("mode").get<std::string>() == "cloze" ? PromptMode::cloze : PromptMode::next_word;
    x.label_words = j.at("label_words").get<std::array<std::string, 3>>();
    x.target = j.at("target").get<std::size_t>();
    return x;
  }
  if (kind == "nli")
    return NliInstance{j.at("premise").get<std::string>(),
                       j.at("positive_hypothesis").get<std::string>(),
                       j.at("negative_hypothesis").get<std::string>(), polarity_at("target")};
  if (kind == "pair")
    return PairInstance{j.at("text").get<std::string>(), j.at("aspect").get<std::string>(),
                        polarity_at("target")};
  if (kind == "masked_lm")
    return MaskedLmInstance{j.at("input_ids").get<std::vector<int>>(),
                            j.at("target_ids").get<std::vector<int>>()};
  if (kind == "causal_lm")
    return CausalLmInstance{j.at("input_ids").get<std::vector<int>>(),
                            j.at("target_ids").get<std::vector<int>>()};
  throw Error("unknown training instance kind '" + kind + "'");
}

nlohmann::json to_json(const TrainingSchedule& s) {
  nlohmann::json j{{"epochs", s.epochs},
                   {"batch_size", s.batch_size},
                   {"learning_rate", s.learning_rate},
                   {"weight_decay", s.weight_decay},
                   {"seed", s.seed},
                   {"lr_decay", s.linear_decay ? "linear" : "constant"}};
  if (s.max_steps) j["max_steps"] = *s.max_steps;
  return j;
}

TrainingSchedule training_schedule_from_json(const nlohmann::json& j,
                                             TrainingSchedule s) {
  s.epochs = j.value("epochs", s.epochs);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.learning_rate = j.value("learning_rate", s.learning_rate);
  s.weight_decay = j.value("weight_decay", s.weight_decay);
  s.seed = j.value("seed", s.seed);
  if (j.contains("lr_decay")) {
    auto decay = j["lr_decay"].get<std::string>();
    if (decay != "linear" && decay != "constant")
      throw ConfigError("lr_decay must be linear or constant, got '" + decay + "'");
    s.linear_decay = decay == "linear";
  }
  if (j.contains("max_steps") && !j["max_steps"].is_null())
    s.max_steps = j["max_steps"].get<std::size_t>();
  if (s.epochs == 0 || s.batch_size == 0 || !(s.learning_rate > 0))
    throw ConfigError("training schedule needs epochs, batch_size and learning_rate > 0");
  return s;
}

nlohmann::json to_json(const FitReport& r) {
  return {{"initial_loss", r.initial_loss},
          {"final_loss", r.final_loss},
          {"min_loss", r.min_loss},
          {"epoch_losses", r.epoch_losses},
          {"steps", r.steps}};
}

FitReport fit_report_from_json(const nlohmann::json& j) {
  FitReport r;
  r.initial_loss = j.at("initial_loss").get<double>();
  r.final_loss = j.at("final_loss").get<double>();
  r.min_loss = j.value("min_loss", r.final_loss);
  r.epoch_losses = j.value("epoch_losses", std::vector<double>{});
  r.steps = j.value("steps", std::size_t{0});
  return r;
}

}  // namespace atsc
