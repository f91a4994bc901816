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

// Backend served over HTTP with JSON bodies, so real checkpoints can live in
// another runtime (tools/hf_backend_server.py).
//
//   GET  /describe       descriptor + {"max_length", "task_trained"}
//   POST /reset          restore the weights the server started with
//   POST /tokenize       {"text"} -> {"pieces": [{text, id, begin, end}]}
//   POST /single_item    {"word"} -> {"single": bool, "first": str}
//   POST /mask_fill      {"text", "candidates"} -> {"entries", "restricted"}
//   POST /next_token     {"text", "candidates"} -> {"entries", "restricted"}
//   POST /nli_score      {"premise", "hypothesis"} -> {entail, neutral, contradict}
//   POST /pair_classify  {"text", "aspect"} -> {"scores": [3]}
//   POST /fit            {"instances", "schedule"} -> FitReport
//
// Any non-2xx reply carries {"error": message} and becomes a BackendError.

#pragma once

#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "atsc/backend.hpp"

namespace httplib {
class Client;
}

namespace atsc {

struct HttpOptions {
  double timeout_seconds = 600.0;
  // POST /reset on connect so every run starts from the served weights.
  bool reset_on_connect = true;
};

class HttpBackend final : public Backend {
 public:
  // Throws BackendError when the server is unreachable or its descriptor
  // differs from `expected`.
  explicit HttpBackend(const std::string& url,
                       std::optional<BackendDescriptor> expected = std::nullopt,
                       HttpOptions options = {});
  ~HttpBackend() override;

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  std::vector<Piece> tokenize(std::string_view text) const override;
  std::size_t max_length() const override { return max_length_; }
  bool is_single_item(std::string_view word) const override;
  std::string first_item(std::string_view word) const override;

  TokenDistribution mask_fill(std::string_view text_with_mask,
                              std::span<const std::string> candidates) override;
  TokenDistribution next_token(std::string_view prefix,
                               std::span<const std::string> candidates) override;
  NliLogits nli_score(std::string_view premise, std::string_view hypothesis) override;
  PairLogits pair_classify(std::string_view text, std::string_view aspect) override;
  FitReport fit(std::span<const TrainingInstance> instances,
                const TrainingSchedule& schedule) override;
  bool task_trained() const override { return task_trained_; }

  const std::string& url() const { return url_; }

 private:
  nlohmann::json call(const std::string& path, const nlohmann::json* body) const;
  TokenDistribution token_query(const std::string& path, std::string_view text,
                                std::span<const std::string> candidates);

  std::string url_;
  std::unique_ptr<httplib::Client> client_;
  BackendDescriptor descriptor_;
  std::size_t max_length_ = 512;
  bool task_trained_ = false;
};

}  // namespace atsc
