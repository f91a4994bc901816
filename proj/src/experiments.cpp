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

#include "atsc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "atsc/tokenizer.hpp"

namespace atsc {

using nlohmann::json;

void RunConfig::validate() const {
  if (uses_template(head) && !template_id)
    throw ConfigError(std::string(to_string(head)) + " runs need a template");
  if (is_baseline(head) && few_shot.is_zero())
    throw ConfigError("baseline undefined without training (no zero-shot baseline)");
  if (schedule.epochs == 0 || schedule.batch_size == 0)
    throw ConfigError("epochs and batch_size must be positive");
  if (head == HeadKind::nli && provenance != Provenance::generic)
    throw ConfigError("NLI runs use generic backends only");
}

BackendDescriptor RunConfig::backend() const {
  BackendDescriptor d;
  d.family = required_family(head);
  d.readout = required_readout(head);
  d.provenance = provenance;
  if (provenance == Provenance::domain_adapted)
    d.domain = provenance_follows_train ? train_domain : test_domain;
  return d;
}

std::string RunConfig::id() const {
  std::string s = std::string(to_string(head)) + "." + template_id.value_or("none") + "." +
                  std::string(to_string(train_domain)) + "-" +
                  std::string(to_string(test_domain)) + "." + std::string(to_string(test_task)) +
                  "." + few_shot.label() + ".s" + std::to_string(few_shot.seed);
  if (provenance == Provenance::domain_adapted)
    s += ".da-" + std::string(to_string(*backend().domain));
  return s;
}

void ExperimentData::set_train(Task task, Domain domain, std::vector<LabeledExample> examples) {
  train_[{task, domain}] = std::move(examples);
}

void ExperimentData::set_test(Task task, Domain domain, std::vector<LabeledExample> examples) {
  test_[{task, domain}] = std::move(examples);
}

const std::vector<LabeledExample>& ExperimentData::train(Task task, Domain domain) const {
  auto it = train_.find({task, domain});
  if (it == train_.end())
    throw ConfigError("no " + std::string(to_string(task)) + " train split for " +
                      std::string(to_string(domain)));
  return it->second;
}

const std::vector<LabeledExample>& ExperimentData::test(Task task, Domain domain) const {
  auto it = test_.find({task, domain});
  if (it == test_.end())
    throw ConfigError("no " + std::string(to_string(task)) + " test split for " +
                      std::string(to_string(domain)));
  return it->second;
}

bool ExperimentData::has_train(Task task, Domain domain) const {
  return train_.count({task, domain}) > 0;
}

bool ExperimentData::has_test(Task task, Domain domain) const {
  return test_.count({task, domain}) > 0;
}

EvalOutput evaluate(HeadKind head, const PromptTemplate* tmpl, Backend& backend,
                    const std::vector<LabeledExample>& examples, const PredictOptions& options) {
  if (examples.empty()) throw Error("nothing to evaluate");
  EvalOutput out;
  std::vector<Polarity> gold, pred;
  for (const auto& ex : examples) {
    auto dist = predict(head, ex, tmpl, backend, options);
    if (!dist.is_valid()) throw Error("invalid class distribution for " + ex.source_id);
    Prediction p{ex.source_id, ex.polarity, dist, dist.argmax()};
    gold.push_back(p.gold);
    pred.push_back(p.predicted);
    out.predictions.push_back(std::move(p));
  }
  out.report = score(gold, pred);
  return out;
}

std::vector<std::string> ExperimentData::all_texts() const {
  std::vector<std::string> out;
  for (const auto* split : {&train_, &test_})
    for (const auto& [key, examples] : *split)
      for (const auto& ex : examples) {
        out.push_back(ex.text);
        out.push_back(ex.aspect);
      }
  return out;
}

ProvisionContext provision_context(const ExperimentContext& ctx, Domain /*train_domain*/) {
  ProvisionContext pc;
  if (ctx.data) pc.texts = ctx.data->all_texts();
  for (const auto& w : ctx.verbalizer.words()) pc.required_words.push_back(w);
  if (ctx.templates) {
    for (const auto& id : ctx.templates->ids()) {
      for (const auto& w : split_words(with_plural_agreement(ctx.templates->get(id)).pattern))
        pc.required_words.push_back(w.text);
      for (const auto& w : split_words(ctx.templates->get(id).pattern))
        pc.required_words.push_back(w.text);
    }
  }
  pc.required_words.push_back("things");
  return pc;
}

namespace {

PredictOptions predict_options(const ExperimentContext& ctx, NliScoring scoring) {
  PredictOptions o;
  o.nli_scoring = scoring;
  o.verbalizer = ctx.verbalizer;
  o.aliases = ctx.aliases;
  return o;
}

}  // namespace

RunOutput run_one(const RunConfig& config, const ExperimentContext& ctx) {
  config.validate();
  if (!ctx.data || !ctx.backends || !ctx.templates)
    throw Error("experiment context is incomplete");
  const PromptTemplate* tmpl =
      uses_template(config.head) ? &ctx.templates->get(*config.template_id) : nullptr;
  const auto& test = ctx.data->test(config.test_task, config.test_domain);

  RunOutput out;
  out.result.config = config;
  out.backend = ctx.backends->make(config.backend(), provision_context(ctx, config.train_domain));
  check_head_backend(config.head, out.backend->descriptor());
  for (const auto& [word, item] : check_label_words(*out.backend, ctx.verbalizer))
    spdlog::warn("label word '{}' is split by the backend; scoring '{}'", word, item);

  if (!config.few_shot.is_zero()) {
    auto subset = sample_few_shot(ctx.data->train(Task::atsc, config.train_domain),
                                  config.few_shot);
    std::vector<TrainingInstance> instances;
    instances.reserve(subset.size());
    for (const auto& ex : subset)
      instances.push_back(
          make_training_instance(config.head, ex, tmpl, ctx.verbalizer, ctx.aliases));
    TrainingSchedule schedule = config.schedule;
    schedule.seed = config.few_shot.seed;
    FitReport fit = out.backend->fit(instances, schedule);
    out.result.final_train_loss = fit.final_loss;
    out.result.fit = std::move(fit);
  }

  auto eval = evaluate(config.head, tmpl, *out.backend, test,
                       predict_options(ctx, config.eval_scoring));
  out.result.report = std::move(eval.report);
  out.result.predictions = std::move(eval.predictions);
  out.result.report.fingerprint = fingerprint(ctx.fingerprint + to_json(config).dump());
  return out;
}

RunOutput cross_domain(const RunConfig& config, const ExperimentContext& ctx) {
  return run_one(config, ctx);
}

EvalReport acsc_transfer(HeadKind head, const PromptTemplate* tmpl, Backend& backend,
                         const std::vector<LabeledExample>& acsc_test,
                         const PredictOptions& options) {
  for (const auto& ex : acsc_test)
    if (ex.aspect_kind != AspectKind::category)
      throw Error("acsc_transfer expects category examples, got a term in " + ex.source_id);
  return evaluate(head, tmpl, backend, acsc_test, options).report;
}

AblationResult aspect_ablation(HeadKind head, const PromptTemplate& tmpl, Backend& backend,
                               const std::vector<LabeledExample>& test,
                               const std::string& replacement, const PredictOptions& options) {
  if (replacement.empty()) throw Error("replacement aspect is empty");
  const PromptTemplate plural = with_plural_agreement(tmpl);
  PredictOptions plain = options;
  plain.aliases = {};
  std::vector<Polarity> gold, original, replaced;
  for (const auto& ex : test) {
    gold.push_back(ex.polarity);
    original.push_back(predict(head, ex, &tmpl, backend, options).argmax());
    if (options.aliases.apply(ex.aspect) == replacement) {
      replaced.push_back(original.back());
      continue;
    }
    LabeledExample swapped = ex;
    swapped.aspect = replacement;
    replaced.push_back(predict(head, swapped, &plural, backend, plain).argmax());
  }
  AblationResult r;
  r.original = score(gold, original);
  r.replaced = score(gold, replaced);
  r.delta_accuracy = r.replaced.accuracy - r.original.accuracy;
  r.delta_macro_f1 = r.replaced.macro_f1 - r.original.macro_f1;
  return r;
}

std::vector<RunConfig> GridSpec::expand() const {
  std::vector<RunConfig> out;
  for (const auto& [train, test] : domains)
    for (HeadKind head : heads)
      for (const auto& size : sizes) {
        if (is_baseline(head) && size && *size == 0) continue;
        std::vector<std::optional<std::string>> tmpls;
        if (uses_template(head))
          for (const auto& t : templates) tmpls.emplace_back(t);
        else
          tmpls.emplace_back(std::nullopt);
        for (const auto& t : tmpls)
          for (auto seed : seeds) {
            RunConfig c;
            c.head = head;
            c.template_id = t;
            c.train_domain = train;
            c.test_domain = test;
            c.test_task = test_task;
            c.few_shot = {size, seed};
            c.schedule = schedule;
            c.provenance = head == HeadKind::nli ? Provenance::generic : provenance;
            c.provenance_follows_train = provenance_follows_train;
            c.eval_scoring = eval_scoring;
            out.push_back(std::move(c));
          }
      }
  return out;
}

namespace {

void check_zero_shot_agreement(std::vector<RunResult>& results) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& c = results[i].config;
    if (!results[i].ok() || !c.few_shot.is_zero()) continue;
    RunConfig key = c;
    key.few_shot.seed = 0;
    groups[key.id()].push_back(i);
  }
  for (const auto& [key, idx] : groups) {
    const auto& first = results[idx[0]];
    for (std::size_t k = 1; k < idx.size(); ++k) {
      const auto& other = results[idx[k]];
      bool same = other.report.confusion == first.report.confusion &&
                  other.predictions.size() == first.predictions.size();
      for (std::size_t e = 0; same && e < first.predictions.size(); ++e) {
        const auto& a = first.predictions[e].distribution;
        const auto& b = other.predictions[e].distribution;
        same = std::abs(a.positive - b.positive) <= 1e-6 &&
               std::abs(a.negative - b.negative) <= 1e-6 &&
               std::abs(a.neutral - b.neutral) <= 1e-6;
      }
      if (!same) {
        spdlog::error("zero-shot results differ across seeds for {}", key);
        for (std::size_t i : idx) results[i].error = "zero-shot results differ across seeds";
        break;
      }
    }
  }
}

}  // namespace

std::vector<RunResult> run_grid(const GridSpec& grid, const ExperimentContext& ctx,
                                const std::function<void(const RunResult&)>& on_done) {
  auto configs = grid.expand();
  std::vector<RunResult> results(configs.size());
  std::size_t workers = std::max<std::size_t>(1, std::min(grid.workers, configs.size()));
  if (workers > 1) {
    for (const auto& c : configs)
      if (!ctx.backends->independent(c.backend())) {
        spdlog::info("backend {} is shared; running the grid serially", c.backend().key());
        workers = 1;
        break;
      }
  }

  std::atomic<std::size_t> next{0};
  std::mutex done_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      RunResult r;
      try {
        r = run_one(configs[i], ctx).result;
      } catch (const std::exception& e) {
        r.config = configs[i];
        r.error = e.what();
        spdlog::error("run {} failed: {}", configs[i].id(), e.what());
      }
      std::lock_guard<std::mutex> lock(done_mutex);
      results[i] = std::move(r);
      if (on_done) on_done(results[i]);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  check_zero_shot_agreement(results);
  return results;
}

std::vector<AggregateCell> aggregate(const std::vector<RunResult>& results) {
  std::vector<const RunResult*> sorted;
  for (const auto& r : results) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const RunResult* a, const RunResult* b) { return a->config.id() < b->config.id(); });

  std::map<CellKey, AggregateCell> cells;
  std::map<CellKey, std::map<std::string, std::vector<const RunResult*>>> members;
  for (const RunResult* r : sorted) {
    const auto& c = r->config;
    CellKey key{c.head, c.train_domain, c.test_domain, c.test_task, c.few_shot.label(),
                c.provenance};
    auto& cell = cells[key];
    cell.key = key;
    if (!r->ok()) {
      ++cell.failures;
      continue;
    }
    cell.run_accuracies.push_back(r->report.accuracy);
    cell.run_macro_f1.push_back(r->report.macro_f1);
    members[key][c.template_id.value_or("-")].push_back(r);
  }
  std::vector<AggregateCell> out;
  for (auto& [key, cell] : cells) {
    for (const auto& [tid, runs] : members[key]) {
      TemplateMean t;
      for (const RunResult* r : runs) {
        t.accuracy += r->report.accuracy;
        t.macro_f1 += r->report.macro_f1;
        for (std::size_t k = 0; k < 3; ++k) t.per_class_f1[k] += r->report.per_class_f1[k];
      }
      t.runs = runs.size();
      t.accuracy /= t.runs;
      t.macro_f1 /= t.runs;
      for (auto& f : t.per_class_f1) f /= t.runs;
      cell.per_template[tid] = t;
    }
    if (!cell.per_template.empty()) {
      for (const auto& [tid, t] : cell.per_template) {
        cell.accuracy += t.accuracy;
        cell.macro_f1 += t.macro_f1;
        for (std::size_t k = 0; k < 3; ++k) cell.per_class_f1[k] += t.per_class_f1[k];
      }
      double n = static_cast<double>(cell.per_template.size());
      cell.accuracy /= n;
      cell.macro_f1 /= n;
      for (auto& f : cell.per_class_f1) f /= n;
    }
    out.push_back(std::move(cell));
  }
  return out;
}

json to_json(const RunConfig& c) {
  json j{{"head", to_string(c.head)},
         {"train_domain", to_string(c.train_domain)},
         {"test_domain", to_string(c.test_domain)},
         {"test_task", to_string(c.test_task)},
         {"size", c.few_shot.label()},
         {"seed", c.few_shot.seed},
         {"schedule", to_json(c.schedule)},
         {"provenance", to_string(c.provenance)},
         {"provenance_follows_train", c.provenance_follows_train},
         {"eval_scoring", to_string(c.eval_scoring)}};
  j["template"] = c.template_id ? json(*c.template_id) : json(nullptr);
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  c.head = parse_head_kind(j.at("head").get<std::string>());
  if (j.contains("template") && !j["template"].is_null())
    c.template_id = j["template"].get<std::string>();
  c.train_domain = parse_domain(j.at("train_domain").get<std::string>());
  c.test_domain = parse_domain(j.value("test_domain", j.at("train_domain").get<std::string>()));
  c.test_task = parse_task(j.value("test_task", std::string("atsc")));
  c.few_shot.size = parse_few_shot_size(j.at("size").get<std::string>());
  c.few_shot.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("schedule")) c.schedule = training_schedule_from_json(j["schedule"]);
  c.provenance = parse_provenance(j.value("provenance", std::string("generic")));
  c.provenance_follows_train = j.value("provenance_follows_train", true);
  c.eval_scoring = parse_nli_scoring(j.value("eval_scoring", std::string("probability_argmax")));
  return c;
}

json to_json(const RunResult& r, bool with_predictions) {
  json j{{"id", r.config.id()}, {"config", to_json(r.config)}};
  if (!r.ok()) {
    j["error"] = r.error;
    return j;
  }
  j["report"] = to_json(r.report);
  j["final_train_loss"] = r.final_train_loss ? json(*r.final_train_loss) : json(nullptr);
  if (r.fit) j["fit"] = to_json(*r.fit);
  if (with_predictions) {
    auto& preds = j["predictions"] = json::array();
    for (const auto& p : r.predictions)
      preds.push_back({{"id", p.source_id},
                       {"gold", to_string(p.gold)},
                       {"predicted", to_string(p.predicted)},
                       {"distribution",
                        {p.distribution.positive, p.distribution.negative,
                         p.distribution.neutral}}});
  }
  return j;
}

RunResult run_result_from_json(const json& j) {
  RunResult r;
  r.config = run_config_from_json(j.at("config"));
  if (j.contains("error")) {
    r.error = j["error"].get<std::string>();
    return r;
  }
  r.report = eval_report_from_json(j.at("report"));
  if (j.contains("final_train_loss") && !j["final_train_loss"].is_null())
    r.final_train_loss = j["final_train_loss"].get<double>();
  if (j.contains("fit")) r.fit = fit_report_from_json(j["fit"]);
  if (j.contains("predictions")) {
    for (const auto& p : j["predictions"]) {
      auto d = p.at("distribution").get<std::array<double, 3>>();
      r.predictions.push_back({p.at("id").get<std::string>(),
                               parse_polarity(p.at("gold").get<std::string>()),
                               {d[0], d[1], d[2]},
                               parse_polarity(p.at("predicted").get<std::string>())});
    }
  }
  return r;
}

json to_json(const AggregateCell& cell) {
  json per_template = json::object();
  for (const auto& [tid, t] : cell.per_template)
    per_template[tid] = {{"accuracy", t.accuracy},
                         {"macro_f1", t.macro_f1},
                         {"per_class_f1", t.per_class_f1},
                         {"runs", t.runs}};
  return {{"head", to_string(cell.key.head)},
          {"train_domain", to_string(cell.key.train_domain)},
          {"test_domain", to_string(cell.key.test_domain)},
          {"test_task", to_string(cell.key.test_task)},
          {"size", cell.key.size},
          {"provenance", to_string(cell.key.provenance)},
          {"accuracy", cell.accuracy},
          {"macro_f1", cell.macro_f1},
          {"per_class_f1", cell.per_class_f1},
          {"run_accuracies", cell.run_accuracies},
          {"run_macro_f1", cell.run_macro_f1},
          {"per_template", per_template},
          {"failures", cell.failures}};
}

}  // namespace atsc
