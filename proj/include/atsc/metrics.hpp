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

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "atsc/types.hpp"

namespace atsc {

// confusion[gold][predicted], indexed by index_of(Polarity).
using ConfusionMatrix = std::array<std::array<std::size_t, 3>, 3>;

struct EvalReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::array<double, 3> per_class_f1{};
  ConfusionMatrix confusion{};
  std::string fingerprint;

  double f1(Polarity p) const { return per_class_f1[index_of(p)]; }
};

// Builds the confusion matrix and derived metrics.  A class with a zero F1
// denominator (absent from gold and predictions) contributes F1 = 0 to the
// macro average.
EvalReport score(std::span<const Polarity> gold,
                 std::span<const Polarity> predicted);

// Derived metrics from a confusion matrix alone.
EvalReport report_from_confusion(const ConfusionMatrix& confusion);

enum class Sidedness { one_sided, two_sided };
enum class VarianceModel { unpooled, pooled };

struct SignificanceResult {
  std::vector<double> group_a;
  std::vector<double> group_b;
  double z = 0.0;
  double p = 0.5;
  bool significant_at_05 = false;
};

// Two-mean z-test on per-run scores.  The default is one-sided (a > b) with
// unpooled sample variances.
SignificanceResult z_test(std::span<const double> a, std::span<const double> b,
                          Sidedness sided = Sidedness::one_sided,
                          VarianceModel variance = VarianceModel::unpooled);

double mean(std::span<const double> xs);
double sample_variance(std::span<const double> xs);

nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

}  // namespace atsc
