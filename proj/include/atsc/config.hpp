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

// Project configuration: one JSON file.  The environment may override
// paths only (ATSC_DATA_ROOT for the data root); everything that affects
// results lives in the file and in its fingerprint.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atsc/backend.hpp"
#include "atsc/corpus.hpp"
#include "atsc/experiments.hpp"
#include "atsc/pretrain.hpp"
#include "atsc/prompting.hpp"
#include "atsc/registry.hpp"
#include "atsc/tiny_backend.hpp"

namespace atsc {

inline constexpr const char* kDataRootEnv = "ATSC_DATA_ROOT";

struct SplitPaths {
  std::filesystem::path train;  // empty when absent
  std::filesystem::path test;
};

struct AblationSpec {
  HeadKind head = HeadKind::nli;
  std::vector<std::string> templates;
  std::vector<Domain> domains;
  std::optional<std::size_t> size = 0;
  std::string replacement = "things";
};

struct PretrainSettings {
  BackendFamily family = BackendFamily::masked_lm;
  MaskingOptions masking;
  std::size_t window = 64;
  TrainingSchedule schedule;
};

struct ProjectConfig {
  std::filesystem::path data_root;
  std::map<std::pair<Task, Domain>, SplitPaths> semeval;
  std::map<Domain, std::filesystem::path> corpora;
  nlohmann::json backends = nlohmann::json::array();
  // Off: a descriptor with no entry or environment override is an error
  // instead of a freshly initialized tiny model.
  bool fresh_tiny_fallback = true;
  std::vector<std::uint64_t> seeds;
  std::size_t workers = 1;
  std::filesystem::path output_dir = "runs";
  TrainingSchedule schedule;
  TinyConfig tiny;
  std::vector<PromptTemplate> extra_templates;
  std::map<std::string, std::string> aliases;
  std::vector<GridSpec> grids;
  std::vector<AblationSpec> ablations;
  PretrainSettings pretrain;
  // Effective configuration, canonical for the fingerprint.
  nlohmann::json canonical;

  std::string fingerprint() const;
  // Every problem found, not just the first.
  std::vector<std::string> problems(bool require_data) const;
  std::filesystem::path resolve_data(const std::filesystem::path& p) const;

  TemplateRegistry template_registry() const;
  BackendRegistry backend_registry() const;
  // Reads each configured split (SemEval XML or JSONL records).
  ExperimentData load_data() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

// `base` resolves relative paths in the file.
ProjectConfig project_config_from_json(const nlohmann::json& j, const std::filesystem::path& base,
                                       const EnvLookup& env = process_env);
ProjectConfig load_project_config(const std::filesystem::path& path,
                                  const EnvLookup& env = process_env);

const std::vector<std::uint64_t>& default_seeds();

// Reads SemEval XML (by .xml extension) or JSONL records.
std::vector<LabeledExample> load_split(const std::filesystem::path& path, Task task, Domain domain);

}  // namespace atsc
