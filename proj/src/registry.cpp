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

#include "atsc/registry.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "atsc/http_backend.hpp"

namespace atsc {
namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// Lower score = closer match; nullopt when the spec cannot serve `d`.
std::optional<int> match_rank(const BackendSpec& spec, const BackendDescriptor& d) {
  const auto& s = spec.descriptor;
  if (s.family != d.family || s.provenance != d.provenance) return std::nullopt;
  if (s.domain && s.domain != d.domain) return std::nullopt;
  if (s.readout && s.readout != d.readout) return std::nullopt;
  int rank = 0;
  if (d.domain && !s.domain) rank += 2;
  if (d.readout && !s.readout) rank += 1;
  return rank;
}

}  // namespace

BackendRegistry::BackendRegistry()
    : env_([](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (v == nullptr || *v == '\0') return std::nullopt;
        return std::string(v);
      }) {}

void BackendRegistry::add(BackendSpec spec) {
  if (spec.kind == BackendSpec::Kind::http && spec.url.empty())
    throw ConfigError("http backend " + spec.descriptor.key() + " needs a url");
  specs_.push_back(std::move(spec));
}

std::vector<std::string> BackendRegistry::env_names(const BackendDescriptor& d) {
  std::string base = "ATSC_BACKEND_" + upper(to_string(d.family)) + "_" +
                     upper(to_string(d.provenance));
  std::vector<std::string> names;
  std::vector<std::string> domains = {""};
  if (d.domain) domains.insert(domains.begin(), "_" + upper(to_string(*d.domain)));
  for (const auto& dom : domains) {
    if (d.readout) names.push_back(base + dom + "_" + upper(to_string(*d.readout)));
    names.push_back(base + dom);
  }
  return names;
}

BackendSpec BackendRegistry::parse_location(const std::string& value,
                                            const BackendDescriptor& d) {
  BackendSpec spec;
  spec.descriptor = d;
  if (value.rfind("http://", 0) == 0 || value.rfind("https://", 0) == 0) {
    spec.kind = BackendSpec::Kind::http;
    spec.url = value;
  } else {
    spec.kind = BackendSpec::Kind::tiny;
    spec.checkpoint = value.rfind("tiny:", 0) == 0 ? value.substr(5) : value;
  }
  return spec;
}

std::optional<BackendSpec> BackendRegistry::resolve(const BackendDescriptor& d) const {
  if (env_) {
    for (const auto& name : env_names(d))
      if (auto v = env_(name)) return parse_location(*v, d);
  }
  const BackendSpec* best = nullptr;
  int best_rank = 0;
  for (const auto& s : specs_) {
    auto r = match_rank(s, d);
    if (r && (!best || *r < best_rank)) {
      best = &s;
      best_rank = *r;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

bool BackendRegistry::independent(const BackendDescriptor& d) const {
  auto spec = resolve(d);
  return !spec || spec->kind == BackendSpec::Kind::tiny;
}

std::unique_ptr<Backend> BackendRegistry::make(const BackendDescriptor& d,
                                               const ProvisionContext& context) const {
  d.validate();
  auto spec = resolve(d);
  if (!spec) {
    if (!fresh_tiny_fallback) throw ConfigError("no backend registered for " + d.key());
    return TinyBackend::create(d, context.texts, context.required_words, tiny_);
  }
  if (spec->kind == BackendSpec::Kind::http) return std::make_unique<HttpBackend>(spec->url, d);
  if (spec->checkpoint.empty())
    return TinyBackend::create(d, context.texts, context.required_words, tiny_);
  if (!std::filesystem::exists(spec->checkpoint))
    throw ConfigError("checkpoint for " + d.key() + " not found: " + spec->checkpoint.string());
  spdlog::debug("loading {} from {}", d.key(), spec->checkpoint.string());
  return TinyBackend::load(spec->checkpoint, d);
}

void BackendRegistry::load(const nlohmann::json& entries, const std::filesystem::path& base) {
  if (!entries.is_array()) throw ConfigError("backends must be a list");
  for (const auto& e : entries) {
    BackendSpec spec;
    spec.descriptor = backend_descriptor_from_json(e);
    auto kind = e.value("kind", std::string("tiny"));
    if (kind == "http") {
      spec.kind = BackendSpec::Kind::http;
      spec.url = e.value("url", std::string());
    } else if (kind == "tiny") {
      if (e.contains("checkpoint")) {
        std::filesystem::path p = e["checkpoint"].get<std::string>();
        spec.checkpoint = p.is_relative() && !base.empty() ? base / p : p;
      }
    } else {
      throw ConfigError("unknown backend kind '" + kind + "'");
    }
    add(std::move(spec));
  }
}

}  // namespace atsc
