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

// Result tables.  Scores are percentages with two decimals; a cell with no
// runs is "--".
//
//   main          rows (domain, model), columns per size: Acc, MF1, dAcc.
//                 dAcc is against the best baseline of that size; "*" marks
//                 a significant increase (z-test over per-run accuracies).
//   cross_domain  rows (test domain, model, size): In / Cross Acc and MF1.
//   acsc          rows (model, size) evaluated on category examples.
//   per_prompt    rows (domain, model, template), columns per size.
//   per_class     rows (domain, model, size): F1 per class.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "atsc/experiments.hpp"
#include "atsc/metrics.hpp"

namespace atsc {

enum class Layout { main, cross_domain, acsc, per_prompt, per_class };

std::string_view to_string(Layout layout);
Layout parse_layout(std::string_view s);
const std::vector<Layout>& all_layouts();

struct Table {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct TabulateOptions {
  Sidedness sidedness = Sidedness::one_sided;
  VarianceModel variance = VarianceModel::unpooled;
};

// Throws Error on empty input.
Table tabulate(const std::vector<RunResult>& results, Layout layout,
               const TabulateOptions& options = {});

std::string to_csv(const Table& table);
std::string to_text(const Table& table);

// Size labels in grid order: 0, 16, 64, ..., full.
bool size_label_less(const std::string& a, const std::string& b);

}  // namespace atsc
