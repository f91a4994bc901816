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

// atsc: ingest, corpus, pretrain, run, report.
//
// Exit status: 0 on success, 1 on a failed command, 2 on bad usage.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "atsc/config.hpp"
#include "atsc/corpus.hpp"
#include "atsc/experiments.hpp"
#include "atsc/pretrain.hpp"
#include "atsc/tabulate.hpp"
#include "atsc/tiny_backend.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::string seed_list;
  std::size_t workers = 0;
  bool quiet = false;
  bool verbose = false;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw atsc::Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Whole file or nothing: write a sibling temp file, then rename.
void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw atsc::Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw atsc::Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw atsc::ConfigError("bad seed '" + item + "' in --seed-list");
    }
  }
  if (out.empty()) throw atsc::ConfigError("--seed-list is empty");
  return out;
}

atsc::ProjectConfig project(const Globals& g, bool required) {
  atsc::ProjectConfig c;
  if (!g.config.empty()) {
    c = atsc::load_project_config(g.config);
  } else if (required) {
    throw atsc::ConfigError("--config is required");
  } else {
    c = atsc::project_config_from_json(json::object(), fs::current_path());
  }
  if (!g.seed_list.empty()) {
    c.seeds = parse_seed_list(g.seed_list);
    c.canonical["seeds"] = c.seeds;
    for (auto& grid : c.grids) grid.seeds = c.seeds;
  }
  if (g.workers > 0) {
    c.workers = g.workers;
    for (auto& grid : c.grids) grid.workers = g.workers;
  }
  if (!g.out.empty()) c.output_dir = g.out;
  return c;
}

void fail_on_problems(const atsc::ProjectConfig& c, bool require_data) {
  auto problems = c.problems(require_data);
  if (problems.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  - " + p;
  throw atsc::ConfigError(msg);
}

int cmd_ingest(const Globals& g, const std::string& task_name, const std::string& domain_name,
               const std::string& in) {
  if (g.out.empty()) throw atsc::ConfigError("ingest needs --out PATH");
  auto task = atsc::parse_task(task_name);
  auto domain = atsc::parse_domain(domain_name);
  std::string xml = read_file(in);
  auto examples = atsc::preprocess(atsc::parse_semeval(xml, task), domain);
  json meta{{"command", "ingest"},
            {"task", task_name},
            {"domain", domain_name},
            {"source", fs::path(in).filename().string()},
            {"source_hash", atsc::fingerprint(xml)}};
  meta["fingerprint"] = atsc::fingerprint(meta.dump());
  std::ostringstream body;
  atsc::write_examples(body, examples, &meta);
  write_atomic(g.out, body.str());
  auto counts = atsc::count_classes(examples);
  std::cout << "ingest: " << examples.size() << " examples (" << counts.positive << " positive, "
            << counts.negative << " negative, " << counts.neutral << " neutral) -> " << g.out
            << " [" << meta["fingerprint"].get<std::string>() << "]\n";
  return 0;
}

int cmd_corpus(const Globals& g, const std::string& source, const std::string& domain_name,
               std::optional<std::size_t> limit) {
  if (g.out.empty()) throw atsc::ConfigError("corpus needs --out PATH");
  auto domain = atsc::parse_domain(domain_name);
  std::ifstream in(source, std::ios::binary);
  if (!in) throw atsc::Error("cannot open " + source);
  std::ostringstream sentences;
  auto stats = atsc::prepare_pretrain_corpus(in, domain, limit, [&](const atsc::PretrainSentence& s) {
    sentences << s.text << '\n';
  });
  json meta{{"command", "corpus"},
            {"domain", domain_name},
            {"source", fs::path(source).filename().string()},
            {"limit", limit ? json(*limit) : json(nullptr)},
            {"records_read", stats.records_read},
            {"records_skipped", stats.records_skipped},
            {"reviews_consumed", stats.reviews_consumed},
            {"sentences", stats.sentences}};
  meta["fingerprint"] = atsc::fingerprint(meta.dump() + sentences.str());
  write_atomic(g.out, sentences.str());
  write_atomic(g.out + ".meta.json", meta.dump(2) + "\n");
  std::cout << "corpus: " << stats.reviews_consumed << " reviews, " << stats.sentences
            << " sentences (" << stats.records_skipped << " unreadable records skipped) -> "
            << g.out << " [" << meta["fingerprint"].get<std::string>() << "]\n";
  return 0;
}

int cmd_pretrain(const Globals& g, const std::string& domain_name, const std::string& corpus,
                 std::size_t steps, const std::string& family_name) {
  auto c = project(g, false);
  fail_on_problems(c, false);
  auto domain = atsc::parse_domain(domain_name);
  auto family = family_name.empty() ? c.pretrain.family : atsc::parse_backend_family(family_name);
  if (family != atsc::BackendFamily::masked_lm && family != atsc::BackendFamily::causal_lm)
    throw atsc::ConfigError("pretraining needs --family masked_lm or causal_lm");

  std::vector<std::string> sentences;
  {
    std::istringstream in(read_file(corpus));
    std::string line;
    while (std::getline(in, line))
      if (auto s = atsc::normalize_whitespace(line); !s.empty()) sentences.push_back(s);
  }
  if (sentences.empty()) throw atsc::Error("corpus " + corpus + " has no sentences");

  atsc::BackendDescriptor base{family, atsc::Provenance::generic, std::nullopt, std::nullopt};
  atsc::BackendDescriptor adapted{family, atsc::Provenance::domain_adapted, domain, std::nullopt};
  auto registry = c.backend_registry();
  std::unique_ptr<atsc::TinyBackend> backend;
  auto spec = registry.resolve(base);
  if (spec && spec->kind == atsc::BackendSpec::Kind::http)
    throw atsc::ConfigError("pretrain writes a local checkpoint; point " + base.key() +
                            " at a tiny checkpoint or leave it unset");
  if (spec && !spec->checkpoint.empty()) {
    backend = atsc::TinyBackend::load(spec->checkpoint, adapted);
  } else {
    std::vector<std::string> words = {"good", "bad", "ok", "things"};
    for (const auto& t : atsc::builtin_templates())
      for (const auto& w : atsc::split_words(t.pattern)) words.push_back(w.text);
    backend = atsc::TinyBackend::create(adapted, sentences, words, c.tiny);
  }

  atsc::PretrainOptions options;
  options.steps = steps;
  options.window = c.pretrain.window;
  options.seed = c.seeds.front();
  options.masking = c.pretrain.masking;
  options.masking.vocab_size = backend->tokenizer().size();
  options.schedule = c.pretrain.schedule;
  auto report = atsc::pretrain(*backend, sentences, options);

  fs::path out_dir = c.output_dir / "pretrained";
  fs::path ckpt = out_dir / (std::string(atsc::to_string(family)) + "-" + domain_name + ".ckpt");
  fs::create_directories(out_dir);
  backend->save(ckpt);
  json meta{{"command", "pretrain"},
            {"family", atsc::to_string(family)},
            {"domain", domain_name},
            {"corpus", fs::path(corpus).filename().string()},
            {"corpus_hash", atsc::fingerprint(read_file(corpus))},
            {"steps", steps},
            {"config", c.fingerprint()},
            {"sentences", report.sentences},
            {"instances", report.instances},
            {"masked_items", report.masked_items},
            {"fit", atsc::to_json(report.fit)}};
  meta["fingerprint"] = atsc::fingerprint(meta.dump());
  write_atomic(ckpt.string() + ".meta.json", meta.dump(2) + "\n");
  std::cout << "pretrain: " << report.instances << " instances, " << report.fit.steps
            << " steps, loss " << report.fit.initial_loss << " -> " << report.fit.final_loss
            << " -> " << ckpt.string() << " [" << meta["fingerprint"].get<std::string>() << "]\n";
  return 0;
}

int cmd_run(const Globals& g) {
  auto c = project(g, true);
  fail_on_problems(c, true);
  if (c.grids.empty() && c.ablations.empty())
    throw atsc::ConfigError("config has no grid and no ablation");

  auto data = c.load_data();
  auto templates = c.template_registry();
  auto registry = c.backend_registry();
  atsc::ExperimentContext ctx;
  ctx.data = &data;
  ctx.backends = &registry;
  ctx.templates = &templates;
  ctx.aliases = atsc::AspectAliases(c.aliases);
  ctx.fingerprint = c.fingerprint();

  const fs::path runs_dir = c.output_dir / "runs";
  fs::create_directories(runs_dir);
  std::vector<atsc::RunResult> all;
  for (const auto& grid : c.grids) {
    auto results = atsc::run_grid(grid, ctx, [&](const atsc::RunResult& r) {
      spdlog::info("{} {}", r.config.id(),
                   r.ok() ? "acc " + std::to_string(r.report.accuracy) : "FAILED: " + r.error);
    });
    for (auto& r : results) all.push_back(std::move(r));
  }
  // Zero-shot agreement is checked after the grid, so records are written last.
  for (const auto& r : all) {
    json j = atsc::to_json(r);
    j["config_fingerprint"] = ctx.fingerprint;
    write_atomic(runs_dir / (r.config.id() + ".json"), j.dump(1) + "\n");
  }

  json ablations = json::array();
  std::size_t ablation_failures = 0;
  for (const auto& spec : c.ablations) {
    for (auto domain : spec.domains)
      for (const auto& tid : spec.templates) {
        std::vector<std::uint64_t> seeds = c.seeds;
        if (spec.size && *spec.size == 0) seeds.resize(1);  // no randomness enters
        for (auto seed : seeds) {
          atsc::RunConfig rc;
          rc.head = spec.head;
          rc.template_id = tid;
          rc.train_domain = rc.test_domain = domain;
          rc.few_shot = {spec.size, seed};
          rc.schedule = c.schedule;
          json entry{{"id", rc.id()}, {"replacement", spec.replacement}};
          try {
            auto run = atsc::run_one(rc, ctx);
            atsc::PredictOptions po;
            po.verbalizer = ctx.verbalizer;
            po.aliases = ctx.aliases;
            auto ab = atsc::aspect_ablation(spec.head, templates.get(tid), *run.backend,
                                            data.test(atsc::Task::atsc, domain),
                                            spec.replacement, po);
            entry["original"] = atsc::to_json(ab.original);
            entry["replaced"] = atsc::to_json(ab.replaced);
            entry["delta_accuracy"] = ab.delta_accuracy;
            entry["delta_macro_f1"] = ab.delta_macro_f1;
          } catch (const std::exception& e) {
            entry["error"] = e.what();
            ++ablation_failures;
          }
          ablations.push_back(entry);
        }
      }
  }

  std::size_t failed = 0;
  json index{{"config_fingerprint", ctx.fingerprint}, {"runs", json::array()}};
  for (const auto& r : all) {
    json e{{"id", r.config.id()}, {"ok", r.ok()}};
    if (r.ok()) {
      e["accuracy"] = r.report.accuracy;
      e["macro_f1"] = r.report.macro_f1;
    } else {
      e["error"] = r.error;
      ++failed;
    }
    index["runs"].push_back(e);
  }
  index["cells"] = json::array();
  if (!all.empty())
    for (const auto& cell : atsc::aggregate(all)) index["cells"].push_back(atsc::to_json(cell));
  if (!ablations.empty()) index["ablations"] = ablations;
  write_atomic(c.output_dir / "index.json", index.dump(1) + "\n");

  std::cout << "run: " << all.size() << " runs (" << failed << " failed), "
            << index["cells"].size() << " cells, " << ablations.size() << " ablations -> "
            << c.output_dir.string() << " [" << ctx.fingerprint << "]\n";
  return failed == 0 && ablation_failures == 0 ? 0 : 1;
}

int cmd_report(const Globals& g, const std::vector<std::string>& layouts, bool one_sided_off,
               bool pooled) {
  fs::path out_dir = g.out;
  if (out_dir.empty()) out_dir = project(g, false).output_dir;
  const fs::path runs_dir = out_dir / "runs";
  if (!fs::is_directory(runs_dir)) throw atsc::Error("no runs under " + runs_dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(runs_dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  // Records left over from a different config are not mixed in.
  std::string current;
  if (fs::exists(out_dir / "index.json"))
    current = json::parse(read_file(out_dir / "index.json")).value("config_fingerprint", "");
  std::vector<atsc::RunResult> results;
  std::string fingerprints;
  std::size_t stale = 0;
  for (const auto& f : files) {
    json j = json::parse(read_file(f));
    if (!current.empty() && j.value("config_fingerprint", "") != current) {
      ++stale;
      continue;
    }
    results.push_back(atsc::run_result_from_json(j));
    fingerprints += j.value("config_fingerprint", "") + ":" + j.at("report").dump() + "\n";
  }
  if (stale > 0) spdlog::warn("skipped {} run records from another config", stale);
  if (results.empty()) throw atsc::Error("no run records under " + runs_dir.string());
  const std::string fp = atsc::fingerprint(fingerprints);

  atsc::TabulateOptions options;
  options.sidedness = one_sided_off ? atsc::Sidedness::two_sided : atsc::Sidedness::one_sided;
  options.variance = pooled ? atsc::VarianceModel::pooled : atsc::VarianceModel::unpooled;
  std::vector<atsc::Layout> wanted;
  for (const auto& l : layouts) wanted.push_back(atsc::parse_layout(l));
  const bool explicit_layouts = !wanted.empty();
  if (!explicit_layouts) wanted = atsc::all_layouts();

  std::size_t written = 0;
  for (auto layout : wanted) {
    auto table = atsc::tabulate(results, layout, options);
    if (table.rows.empty() && !explicit_layouts) continue;
    const std::string name(atsc::to_string(layout));
    write_atomic(out_dir / "tables" / (name + ".csv"), atsc::to_csv(table));
    write_atomic(out_dir / "tables" / (name + ".txt"),
                 atsc::to_text(table) + "\nfingerprint " + fp + "\n");
    write_atomic(out_dir / "tables" / (name + ".csv.meta.json"),
                 json{{"fingerprint", fp}, {"layout", name}, {"runs", results.size()}}.dump(2) +
                     "\n");
    ++written;
  }
  std::cout << "report: " << results.size() << " runs, " << written << " tables -> "
            << (out_dir / "tables").string() << " [" << fp << "]\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aspect-target sentiment classification with prompts"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Project configuration (JSON)");
  app.add_option("--out", g.out, "Output file (ingest, corpus) or directory");
  app.add_option("--seed-list", g.seed_list, "Comma-separated seeds, overriding the config");
  app.add_option("--workers", g.workers, "Parallel grid cells")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", g.quiet, "Only warnings and errors");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  std::string task, domain, in, source, corpus, family;
  std::optional<std::size_t> limit;
  std::size_t steps = 0;
  std::vector<std::string> layouts;
  bool two_sided = false, pooled = false;

  auto* ingest = app.add_subcommand("ingest", "SemEval XML -> labeled JSONL");
  ingest->add_option("--task", task)->required()->check(CLI::IsMember({"atsc", "acsc"}));
  ingest->add_option("--domain", domain)->required()->check(CLI::IsMember({"laptops", "restaurants"}));
  ingest->add_option("--in", in)->required();

  auto* corpus_cmd = app.add_subcommand("corpus", "Review dump -> pretraining sentences");
  corpus_cmd->add_option("--source", source)->required();
  corpus_cmd->add_option("--domain", domain)->required()->check(CLI::IsMember({"laptops", "restaurants"}));
  corpus_cmd->add_option("--limit", limit, "Reviews to consume");

  auto* pretrain = app.add_subcommand("pretrain", "Domain-adaptive pretraining");
  pretrain->add_option("--domain", domain)->required()->check(CLI::IsMember({"laptops", "restaurants"}));
  pretrain->add_option("--corpus", corpus)->required();
  pretrain->add_option("--steps", steps)->required()->check(CLI::PositiveNumber);
  pretrain->add_option("--family", family)->check(CLI::IsMember({"masked_lm", "causal_lm"}));

  auto* run = app.add_subcommand("run", "Run the configured grids and ablations");
  run->add_option("--config", g.config, "Project configuration (JSON)");

  auto* report = app.add_subcommand("report", "Tables from finished runs");
  report->add_option("--layout", layouts, "main, cross_domain, acsc, per_prompt, per_class");
  report->add_flag("--two-sided", two_sided, "Two-sided z-test");
  report->add_flag("--pooled", pooled, "Pooled-variance z-test");

  for (auto* sub : {ingest, corpus_cmd, pretrain, run, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  spdlog::set_default_logger(spdlog::stderr_color_st("atsc"));
  spdlog::set_level(g.verbose ? spdlog::level::debug
                              : (g.quiet ? spdlog::level::warn : spdlog::level::info));
  spdlog::set_pattern("[%l] %v");

  try {
    if (*ingest) return cmd_ingest(g, task, domain, in);
    if (*corpus_cmd) return cmd_corpus(g, source, domain, limit);
    if (*pretrain) return cmd_pretrain(g, domain, corpus, steps, family);
    if (*run) return cmd_run(g);
    if (*report) return cmd_report(g, layouts, two_sided, pooled);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
