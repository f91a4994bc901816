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

#include "atsc/metrics.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

namespace atsc {

EvalReport report_from_confusion(const ConfusionMatrix& confusion) {
  EvalReport r;
  r.confusion = confusion;
  std::size_t correct = 0;
  for (std::size_t g = 0; g < 3; ++g)
    for (std::size_t p = 0; p < 3; ++p) {
      r.n += confusion[g][p];
      if (g == p) correct += confusion[g][p];
    }
  r.accuracy = r.n == 0 ? 0.0 : static_cast<double>(correct) / r.n;

  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t tp = confusion[c][c];
    std::size_t gold_total = 0, pred_total = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      gold_total += confusion[c][k];
      pred_total += confusion[k][c];
    }
    // F1 = 2tp / (|gold| + |pred|); zero denominator scores 0.
    std::size_t denom = gold_total + pred_total;
    r.per_class_f1[c] = denom == 0 ? 0.0 : 2.0 * tp / denom;
  }
  r.macro_f1 = (r.per_class_f1[0] + r.per_class_f1[1] + r.per_class_f1[2]) / 3.0;
  return r;
}

EvalReport score(std::span<const Polarity> gold,
                 std::span<const Polarity> predicted) {
  if (gold.size() != predicted.size())
    throw Error("score: gold has " + std::to_string(gold.size()) +
                " labels but predictions have " +
                std::to_string(predicted.size()));
  ConfusionMatrix confusion{};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto g = index_of(gold[i]);
    auto p = index_of(predicted[i]);
    if (g > 2 || p > 2) throw Error("score: label outside the 3-class set");
    ++confusion[g][p];
  }
  return report_from_confusion(confusion);
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / (xs.size() - 1);
}

SignificanceResult z_test(std::span<const double> a, std::span<const double> b,
                          Sidedness sided, VarianceModel variance) {
  if (a.size() < 2 || b.size() < 2)
    throw Error("z_test: each group needs at least two scores");
  for (auto group : {a, b})
    for (double x : group)
      if (!(x >= 0.0 && x <= 1.0))
        throw Error("z_test: scores must lie in [0, 1]");

  SignificanceResult r;
  r.group_a.assign(a.begin(), a.end());
  r.group_b.assign(b.begin(), b.end());

  const double na = a.size(), nb = b.size();
  const double va = sample_variance(a), vb = sample_variance(b);
  const double diff = mean(a) - mean(b);
  double se2 = 0.0;
  if (variance == VarianceModel::unpooled) {
    se2 = va / na + vb / nb;
  } else {
    double pooled = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2);
    se2 = pooled * (1.0 / na + 1.0 / nb);
  }

  if (se2 <= 0.0) {
    if (diff == 0.0) {
      r.z = 0.0;
      r.p = sided == Sidedness::one_sided ? 0.5 : 1.0;
    } else {
      r.z = diff > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
      r.p = sided == Sidedness::two_sided ? 0.0 : (diff > 0 ? 0.0 : 1.0);
    }
  } else {
    r.z = diff / std::sqrt(se2);
    r.p = sided == Sidedness::one_sided
              ? 0.5 * std::erfc(r.z / std::sqrt(2.0))
              : std::erfc(std::abs(r.z) / std::sqrt(2.0));
  }
  r.significant_at_05 = r.p < 0.05;
  return r;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  j["n"] = report.n;
  j["accuracy"] = report.accuracy;
  j["macro_f1"] = report.macro_f1;
  j["per_class_f1"] = {{"positive", report.per_class_f1[0]},
                       {"negative", report.per_class_f1[1]},
                       {"neutral", report.per_class_f1[2]}};
  j["confusion"] = report.confusion;
  j["fingerprint"] = report.fingerprint;
  return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r = report_from_confusion(
      j.at("confusion").get<ConfusionMatrix>());
  r.fingerprint = j.value("fingerprint", "");
  return r;
}

}  // namespace atsc
