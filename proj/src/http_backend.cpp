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

#include "atsc/http_backend.hpp"

#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace atsc {

using nlohmann::json;

HttpBackend::HttpBackend(const std::string& url, std::optional<BackendDescriptor> expected,
                         HttpOptions options)
    : url_(url), client_(std::make_unique<httplib::Client>(url)) {
  if (!client_->is_valid()) throw BackendError("invalid backend url '" + url + "'");
  auto secs = static_cast<time_t>(options.timeout_seconds);
  client_->set_connection_timeout(10, 0);
  client_->set_read_timeout(secs, 0);
  client_->set_write_timeout(secs, 0);

  json d = call("/describe", nullptr);
  descriptor_ = backend_descriptor_from_json(d);
  descriptor_.validate();
  max_length_ = d.value("max_length", max_length_);
  if (expected && !(*expected == descriptor_))
    throw BackendError("backend at " + url + " serves " + to_json(descriptor_).dump() +
                       ", expected " + to_json(*expected).dump());
  if (options.reset_on_connect) {
    call("/reset", nullptr);
    task_trained_ = false;
  } else {
    task_trained_ = d.value("task_trained", false);
  }
}

HttpBackend::~HttpBackend() = default;

json HttpBackend::call(const std::string& path, const json* body) const {
  httplib::Result res =
      body == nullptr && path == "/describe"
          ? client_->Get(path)
          : client_->Post(path, body ? body->dump() : std::string("{}"), "application/json");
  if (!res)
    throw BackendError("backend " + url_ + path + " unreachable: " + httplib::to_string(res.error()));
  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception&) {
    throw BackendError("backend " + url_ + path + " sent a non-JSON reply (status " +
                       std::to_string(res->status) + ")");
  }
  if (res->status < 200 || res->status >= 300)
    throw BackendError("backend " + url_ + path + ": " +
                       reply.value("error", std::string("status ") + std::to_string(res->status)));
  return reply;
}

std::vector<Piece> HttpBackend::tokenize(std::string_view text) const {
  json body{{"text", text}};
  std::vector<Piece> out;
  for (const auto& p : call("/tokenize", &body).at("pieces"))
    out.push_back({p.at("text"), p.at("id"), p.value("begin", std::size_t{0}),
                   p.value("end", std::size_t{0})});
  return out;
}

bool HttpBackend::is_single_item(std::string_view word) const {
  json body{{"word", word}};
  return call("/single_item", &body).at("single").get<bool>();
}

std::string HttpBackend::first_item(std::string_view word) const {
  json body{{"word", word}};
  return call("/single_item", &body).at("first").get<std::string>();
}

TokenDistribution HttpBackend::token_query(const std::string& path, std::string_view text,
                                           std::span<const std::string> candidates) {
  json body{{"text", text}, {"candidates", std::vector<std::string>(candidates.begin(),
                                                                      candidates.end())}};
  json reply = call(path, &body);
  TokenDistribution out;
  out.restricted = reply.value("restricted", !candidates.empty());
  for (const auto& [k, v] : reply.at("entries").items()) {
    double p = v.get<double>();
    if (!std::isfinite(p) || p < 0) throw BackendError("backend returned an invalid probability");
    out.entries[k] = p;
  }
  return out;
}

TokenDistribution HttpBackend::mask_fill(std::string_view text_with_mask,
                                         std::span<const std::string> candidates) {
  if (count_masks(text_with_mask) != 1)
    throw BackendError("mask_fill needs exactly one [MASK], got " +
                       std::to_string(count_masks(text_with_mask)));
  return token_query("/mask_fill", text_with_mask, candidates);
}

TokenDistribution HttpBackend::next_token(std::string_view prefix,
                                          std::span<const std::string> candidates) {
  return token_query("/next_token", prefix, candidates);
}

NliLogits HttpBackend::nli_score(std::string_view premise, std::string_view hypothesis) {
  if (premise.empty() || hypothesis.empty())
    throw BackendError("nli_score needs a non-empty premise and hypothesis");
  json body{{"premise", premise}, {"hypothesis", hypothesis}};
  json r = call("/nli_score", &body);
  NliLogits out{r.at("entail"), r.at("neutral"), r.at("contradict")};
  if (!out.finite()) throw BackendError("backend returned non-finite NLI logits");
  return out;
}

PairLogits HttpBackend::pair_classify(std::string_view text, std::string_view aspect) {
  if (text.empty() || aspect.empty())
    throw BackendError("pair_classify needs a non-empty text and aspect");
  json body{{"text", text}, {"aspect", aspect}};
  PairLogits out{call("/pair_classify", &body).at("scores").get<std::array<double, 3>>()};
  if (!out.finite()) throw BackendError("backend returned non-finite pair logits");
  return out;
}

FitReport HttpBackend::fit(std::span<const TrainingInstance> instances,
                           const TrainingSchedule& schedule) {
  json body{{"schedule", to_json(schedule)}, {"instances", json::array()}};
  bool task = false;
  for (const auto& inst : instances) {
    body["instances"].push_back(to_json(inst));
    if (inst.index() <= 2) task = true;
  }
  FitReport report = fit_report_from_json(call("/fit", &body));
  if (task) task_trained_ = true;
  return report;
}

}  // namespace atsc
