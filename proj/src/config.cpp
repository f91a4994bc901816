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

#include "atsc/config.hpp"

#include <cstdlib>
#include <fstream>

namespace atsc {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::uint64_t>& default_seeds() {
  static const std::vector<std::uint64_t> seeds = {13, 42, 87, 1234, 2718};
  return seeds;
}

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

namespace {

std::vector<std::pair<Domain, Domain>> parse_domain_pairs(const json& j) {
  std::vector<std::pair<Domain, Domain>> out;
  for (const auto& d : j) {
    if (d.is_string()) {
      Domain x = parse_domain(d.get<std::string>());
      out.emplace_back(x, x);
    } else {
      Domain train = parse_domain(d.at("train").get<std::string>());
      out.emplace_back(train, parse_domain(d.value("test", d.at("train").get<std::string>())));
    }
  }
  return out;
}

GridSpec parse_grid(const json& g, const ProjectConfig& c) {
  GridSpec grid;
  for (const auto& h : g.at("heads")) grid.heads.push_back(parse_head_kind(h.get<std::string>()));
  grid.templates = g.value("templates", std::vector<std::string>{});
  if (grid.templates.empty())
    for (const auto& t : builtin_templates()) grid.templates.push_back(t.id);
  for (const auto& s : g.at("sizes"))
    grid.sizes.push_back(s.is_number() ? std::optional<std::size_t>(s.get<std::size_t>())
                                       : parse_few_shot_size(s.get<std::string>()));
  grid.domains = parse_domain_pairs(g.at("domains"));
  grid.test_task = parse_task(g.value("test_task", std::string("atsc")));
  grid.provenance = parse_provenance(g.value("provenance", std::string("generic")));
  grid.provenance_follows_train = g.value("provenance_follows_train", true);
  grid.eval_scoring =
      parse_nli_scoring(g.value("eval_scoring", std::string("probability_argmax")));
  grid.schedule = g.contains("schedule") ? training_schedule_from_json(g["schedule"], c.schedule)
                                         : c.schedule;
  grid.seeds = c.seeds;
  grid.workers = c.workers;
  return grid;
}

}  // namespace

ProjectConfig project_config_from_json(const json& j, const fs::path& base, const EnvLookup& env) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  ProjectConfig c;
  const json data = j.value("data", json::object());

  fs::path root = data.value("root", std::string("."));
  if (auto r = env ? env(kDataRootEnv) : std::nullopt) root = *r;
  c.data_root = root.is_relative() ? base / root : root;

  for (const char* task_name : {"atsc", "acsc"}) {
    if (!data.contains(task_name)) continue;
    for (const auto& [domain, paths] : data[task_name].items()) {
      SplitPaths sp;
      if (paths.contains("train")) sp.train = paths["train"].get<std::string>();
      if (paths.contains("test")) sp.test = paths["test"].get<std::string>();
      c.semeval[{parse_task(task_name), parse_domain(domain)}] = sp;
    }
  }
  if (data.contains("corpora"))
    for (const auto& [domain, p] : data["corpora"].items())
      c.corpora[parse_domain(domain)] = p.get<std::string>();

  c.backends = j.value("backends", json::array());
  c.fresh_tiny_fallback = j.value("fresh_tiny_fallback", true);
  c.seeds = j.value("seeds", default_seeds());
  c.workers = j.value("workers", std::size_t{1});
  c.output_dir = j.value("output_dir", std::string("runs"));
  if (j.contains("schedule")) c.schedule = training_schedule_from_json(j["schedule"]);

  if (j.contains("tiny")) {
    const auto& t = j["tiny"];
    c.tiny.embedding_dim = t.value("embedding_dim", c.tiny.embedding_dim);
    c.tiny.hidden_dim = t.value("hidden_dim", c.tiny.hidden_dim);
    c.tiny.max_length = t.value("max_length", c.tiny.max_length);
    c.tiny.locality = t.value("locality", c.tiny.locality);
    c.tiny.init_scale = t.value("init_scale", c.tiny.init_scale);
    c.tiny.grad_clip = t.value("grad_clip", c.tiny.grad_clip);
    c.tiny.init_seed = t.value("init_seed", c.tiny.init_seed);
  }
  if (j.contains("templates"))
    for (const auto& t : j["templates"])
      c.extra_templates.push_back({t.at("id").get<std::string>(), t.at("pattern").get<std::string>()});
  c.aliases = j.value("aliases", std::map<std::string, std::string>{});

  if (j.contains("grid")) c.grids.push_back(parse_grid(j["grid"], c));
  if (j.contains("grids"))
    for (const auto& g : j["grids"]) c.grids.push_back(parse_grid(g, c));

  if (j.contains("ablations"))
    for (const auto& a : j["ablations"]) {
      AblationSpec s;
      s.head = parse_head_kind(a.value("head", std::string("nli")));
      s.templates = a.value("templates", std::vector<std::string>{});
      if (s.templates.empty())
        for (const auto& t : builtin_templates()) s.templates.push_back(t.id);
      for (const auto& d : a.at("domains")) s.domains.push_back(parse_domain(d.get<std::string>()));
      s.size = parse_few_shot_size(a.value("size", std::string("0")));
      s.replacement = a.value("replacement", std::string("things"));
      c.ablations.push_back(std::move(s));
    }

  if (j.contains("pretrain")) {
    const auto& p = j["pretrain"];
    c.pretrain.family = parse_backend_family(p.value("family", std::string("masked_lm")));
    c.pretrain.masking.rate = p.value("mask_rate", c.pretrain.masking.rate);
    c.pretrain.masking.corrupt_80_10_10 = p.value("corrupt_80_10_10", false);
    c.pretrain.window = p.value("window", c.pretrain.window);
    if (p.contains("schedule"))
      c.pretrain.schedule = training_schedule_from_json(p["schedule"], c.pretrain.schedule);
  }

  // Paths and parallelism do not change results.
  c.canonical = j;
  c.canonical.erase("data");
  c.canonical.erase("workers");
  c.canonical.erase("output_dir");
  c.canonical["seeds"] = c.seeds;
  return c;
}

ProjectConfig load_project_config(const fs::path& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return project_config_from_json(j, path.parent_path(), env);
}

std::string ProjectConfig::fingerprint() const { return atsc::fingerprint(canonical.dump()); }

fs::path ProjectConfig::resolve_data(const fs::path& p) const {
  return p.is_relative() ? data_root / p : p;
}

std::vector<std::string> ProjectConfig::problems(bool require_data) const {
  std::vector<std::string> out;
  if (seeds.empty()) out.push_back("seed list is empty");
  if (workers == 0) out.push_back("workers must be at least 1");
  if (require_data) {
    for (const auto& [key, sp] : semeval) {
      std::string what = std::string(to_string(key.first)) + "/" + std::string(to_string(key.second));
      for (const auto& p : {sp.train, sp.test})
        if (!p.empty() && !fs::exists(resolve_data(p)))
          out.push_back(what + " split not found: " + resolve_data(p).string());
    }
    for (const auto& [d, p] : corpora)
      if (!fs::exists(resolve_data(p)))
        out.push_back(std::string(to_string(d)) + " corpus not found: " + resolve_data(p).string());
  }
  TemplateRegistry reg;
  for (const auto& t : extra_templates) {
    try {
      reg.add(t);
    } catch (const Error& e) {
      out.push_back(e.what());
    }
  }
  for (const auto& g : grids) {
    if (g.heads.empty()) out.push_back("grid without heads");
    if (g.sizes.empty()) out.push_back("grid without sizes");
    if (g.domains.empty()) out.push_back("grid without domains");
    for (const auto& t : g.templates)
      if (!reg.contains(t)) out.push_back("grid names unknown template '" + t + "'");
    for (const auto& [train, test] : g.domains) {
      bool trains = false;
      for (const auto& s : g.sizes) trains = trains || !(s && *s == 0);
      if (trains && !semeval.count({Task::atsc, train}))
        out.push_back("grid trains on " + std::string(to_string(train)) + " but no atsc split is configured");
      if (!semeval.count({g.test_task, test}))
        out.push_back("grid tests on " + std::string(to_string(g.test_task)) + "/" +
                      std::string(to_string(test)) + " but no split is configured");
    }
  }
  try {
    backend_registry();
  } catch (const Error& e) {
    out.push_back(e.what());
  }
  return out;
}

TemplateRegistry ProjectConfig::template_registry() const {
  TemplateRegistry reg;
  for (const auto& t : extra_templates) reg.add(t);
  return reg;
}

BackendRegistry ProjectConfig::backend_registry() const {
  BackendRegistry reg;
  reg.set_tiny_config(tiny);
  reg.load(backends, data_root);
  reg.fresh_tiny_fallback = fresh_tiny_fallback;
  return reg;
}

std::vector<LabeledExample> load_split(const fs::path& path, Task task, Domain domain) {
  if (path.extension() == ".xml") return preprocess(parse_semeval_file(path, task), domain);
  return read_examples_file(path);
}

ExperimentData ProjectConfig::load_data() const {
  ExperimentData data;
  for (const auto& [key, sp] : semeval) {
    if (!sp.train.empty())
      data.set_train(key.first, key.second, load_split(resolve_data(sp.train), key.first, key.second));
    if (!sp.test.empty())
      data.set_test(key.first, key.second, load_split(resolve_data(sp.test), key.first, key.second));
  }
  return data;
}

}  // namespace atsc
