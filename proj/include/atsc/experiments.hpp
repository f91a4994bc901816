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

// Runs and grids.
//
// A run samples its training subset with the run seed, fits (unless zero
// shot) with the same seed driving the data order, and scores the full test
// split.  Grid cells average over seeds first and templates second.

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "atsc/backend.hpp"
#include "atsc/corpus.hpp"
#include "atsc/heads.hpp"
#include "atsc/metrics.hpp"
#include "atsc/prompting.hpp"
#include "atsc/registry.hpp"

namespace atsc {

struct RunConfig {
  HeadKind head = HeadKind::nli;
  std::optional<std::string> template_id;  // unset for baselines
  Domain train_domain = Domain::laptops;
  Domain test_domain = Domain::laptops;
  Task test_task = Task::atsc;
  FewShotSpec few_shot;
  TrainingSchedule schedule;  // epochs default 20; seed is overwritten by few_shot.seed
  Provenance provenance = Provenance::generic;
  // Which domain a domain-adapted backend was pretrained on.
  bool provenance_follows_train = true;
  NliScoring eval_scoring = NliScoring::probability_argmax;

  void validate() const;
  // Resolved backend descriptor for this run.
  BackendDescriptor backend() const;
  // Stable identifier used for file names.
  std::string id() const;
};

struct Prediction {
  std::string source_id;
  Polarity gold = Polarity::neutral;
  ClassDistribution distribution;
  Polarity predicted = Polarity::neutral;
};

struct RunResult {
  RunConfig config;
  EvalReport report;
  std::optional<double> final_train_loss;
  std::optional<FitReport> fit;
  std::vector<Prediction> predictions;
  std::string error;  // non-empty when the run failed

  bool ok() const { return error.empty(); }
};

// Labeled splits keyed by (task, domain).
class ExperimentData {
 public:
  void set_train(Task task, Domain domain, std::vector<LabeledExample> examples);
  void set_test(Task task, Domain domain, std::vector<LabeledExample> examples);
  const std::vector<LabeledExample>& train(Task task, Domain domain) const;
  const std::vector<LabeledExample>& test(Task task, Domain domain) const;
  bool has_train(Task task, Domain domain) const;
  bool has_test(Task task, Domain domain) const;
  // Every text and aspect, train splits first, in key order.  A fresh
  // backend's vocabulary comes from here so it does not vary by cell.
  std::vector<std::string> all_texts() const;

 private:
  std::map<std::pair<Task, Domain>, std::vector<LabeledExample>> train_, test_;
};

struct ExperimentContext {
  const ExperimentData* data = nullptr;
  const BackendProvider* backends = nullptr;
  const TemplateRegistry* templates = nullptr;
  Verbalizer verbalizer;
  AspectAliases aliases;
  std::string fingerprint;
};

struct EvalOutput {
  EvalReport report;
  std::vector<Prediction> predictions;
};

// Scores every example in order.
EvalOutput evaluate(HeadKind head, const PromptTemplate* tmpl, Backend& backend,
                    const std::vector<LabeledExample>& examples, const PredictOptions& options);

// Vocabulary hints for a fresh in-process backend: the train split plus the
// template, label and replacement words.
ProvisionContext provision_context(const ExperimentContext& ctx, Domain train_domain);

struct RunOutput {
  RunResult result;
  std::unique_ptr<Backend> backend;  // trained (or untouched, zero shot)
};

// Throws on failure; grids catch and record.
RunOutput run_one(const RunConfig& config, const ExperimentContext& ctx);

// Same as run_one with different train and test domains.
RunOutput cross_domain(const RunConfig& config, const ExperimentContext& ctx);

// Scores a trained (or zero-shot) model on category examples.
EvalReport acsc_transfer(HeadKind head, const PromptTemplate* tmpl, Backend& backend,
                         const std::vector<LabeledExample>& acsc_test,
                         const PredictOptions& options = {});

struct AblationResult {
  EvalReport original;
  EvalReport replaced;
  double delta_accuracy = 0.0;  // replaced - original
  double delta_macro_f1 = 0.0;
};

// Prompts use `replacement` instead of each aspect, with plural agreement;
// examples whose aspect already equals `replacement` are scored unchanged.
AblationResult aspect_ablation(HeadKind head, const PromptTemplate& tmpl, Backend& backend,
                               const std::vector<LabeledExample>& test,
                               const std::string& replacement = "things",
                               const PredictOptions& options = {});

struct GridSpec {
  std::vector<HeadKind> heads;
  std::vector<std::string> templates;
  std::vector<std::optional<std::size_t>> sizes;  // nullopt = full
  std::vector<std::uint64_t> seeds;
  std::vector<std::pair<Domain, Domain>> domains;  // (train, test)
  Task test_task = Task::atsc;
  Provenance provenance = Provenance::generic;
  bool provenance_follows_train = true;
  TrainingSchedule schedule;
  NliScoring eval_scoring = NliScoring::probability_argmax;
  std::size_t workers = 1;

  // Expanded configs; baselines skip zero shot and templates.
  std::vector<RunConfig> expand() const;
};

// Runs every config; failures are recorded in RunResult::error and the grid
// continues.  Zero-shot runs of one cell must agree across seeds; a mismatch
// is recorded as an error on those runs.
std::vector<RunResult> run_grid(const GridSpec& grid, const ExperimentContext& ctx,
                                const std::function<void(const RunResult&)>& on_done = {});

struct CellKey {
  HeadKind head = HeadKind::nli;
  Domain train_domain = Domain::laptops;
  Domain test_domain = Domain::laptops;
  Task test_task = Task::atsc;
  std::string size;  // FewShotSpec::label()
  Provenance provenance = Provenance::generic;

  auto operator<=>(const CellKey&) const = default;
};

struct TemplateMean {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::array<double, 3> per_class_f1{};
  std::size_t runs = 0;
};

struct AggregateCell {
  CellKey key;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::array<double, 3> per_class_f1{};
  std::vector<double> run_accuracies;  // every successful run, for z-tests
  std::vector<double> run_macro_f1;
  std::map<std::string, TemplateMean> per_template;  // "-" for baselines
  std::size_t failures = 0;
};

// Mean over seeds within a template, then over templates.  Independent of
// the order of `results`.
std::vector<AggregateCell> aggregate(const std::vector<RunResult>& results);

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunResult& result, bool with_predictions = true);
RunResult run_result_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AggregateCell& cell);

}  // namespace atsc
