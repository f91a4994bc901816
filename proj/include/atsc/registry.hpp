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

// Backend registry keyed by (family, provenance, domain[, readout]).
//
// An entry is either a tiny checkpoint on disk or an HTTP server.  The
// environment can point any key elsewhere without touching the config:
//
//   ATSC_BACKEND_<FAMILY>_<PROVENANCE>[_<DOMAIN>][_<READOUT>]=http://host:port
//   ATSC_BACKEND_<FAMILY>_<PROVENANCE>[_<DOMAIN>][_<READOUT>]=tiny:/path/model.ckpt
//
// e.g. ATSC_BACKEND_NLI_GENERIC, ATSC_BACKEND_MASKED_LM_DOMAIN_ADAPTED_LAPTOPS.
// The most specific variable wins.  Keys with no entry get a freshly
// initialized tiny backend when `fresh_tiny_fallback` is set.

#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "atsc/backend.hpp"
#include "atsc/tiny_backend.hpp"

namespace atsc {

struct BackendSpec {
  enum class Kind { tiny, http };
  Kind kind = Kind::tiny;
  BackendDescriptor descriptor;
  std::filesystem::path checkpoint;  // tiny; empty = fresh weights
  std::string url;                   // http
};

// What a fresh tiny backend builds its vocabulary from.
struct ProvisionContext {
  std::vector<std::string> texts;
  std::vector<std::string> required_words;
};

class BackendProvider {
 public:
  virtual ~BackendProvider() = default;
  virtual std::unique_ptr<Backend> make(const BackendDescriptor& descriptor,
                                        const ProvisionContext& context) const = 0;
  // Whether instances for `descriptor` are independent of one another, so
  // separate runs may train them concurrently.
  virtual bool independent(const BackendDescriptor& descriptor) const = 0;
};

class BackendRegistry : public BackendProvider {
 public:
  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  BackendRegistry();

  void add(BackendSpec spec);
  // Config entries, then environment overrides.
  std::optional<BackendSpec> resolve(const BackendDescriptor& descriptor) const;

  std::unique_ptr<Backend> make(const BackendDescriptor& descriptor,
                                const ProvisionContext& context) const override;
  bool independent(const BackendDescriptor& descriptor) const override;

  void set_env_lookup(EnvLookup lookup) { env_ = std::move(lookup); }
  void set_tiny_config(TinyConfig config) { tiny_ = config; }
  const TinyConfig& tiny_config() const { return tiny_; }
  bool fresh_tiny_fallback = true;

  // Reads [{"family", "provenance", "domain", "readout", "kind", "checkpoint",
  // "url"}, ...]; relative checkpoints resolve against `base`.
  void load(const nlohmann::json& entries, const std::filesystem::path& base = {});

  // Names checked for `descriptor`, most specific first.
  static std::vector<std::string> env_names(const BackendDescriptor& descriptor);
  static BackendSpec parse_location(const std::string& value, const BackendDescriptor& d);

 private:
  std::vector<BackendSpec> specs_;
  EnvLookup env_;
  TinyConfig tiny_;
};

}  // namespace atsc
