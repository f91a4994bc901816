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

#include "atsc/tabulate.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace atsc {
namespace {

constexpr const char* kMissing = "--";

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::string signed_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f", 100.0 * v);
  return buf;
}

std::string model_name(const CellKey& k) {
  std::string s(to_string(k.head));
  if (k.provenance == Provenance::domain_adapted) s += " (domain_adapted)";
  return s;
}

struct Cells {
  std::vector<AggregateCell> all;

  const AggregateCell* find(HeadKind head, Domain train, Domain test, Task task,
                            const std::string& size, Provenance prov) const {
    for (const auto& c : all)
      if (c.key.head == head && c.key.train_domain == train && c.key.test_domain == test &&
          c.key.test_task == task && c.key.size == size && c.key.provenance == prov &&
          !c.run_accuracies.empty())
        return &c;
    return nullptr;
  }
};

std::vector<std::string> sizes_of(const std::vector<AggregateCell>& cells) {
  std::set<std::string> s;
  for (const auto& c : cells) s.insert(c.key.size);
  std::vector<std::string> out(s.begin(), s.end());
  std::sort(out.begin(), out.end(), size_label_less);
  return out;
}

// (head, provenance) pairs in head order.
std::vector<std::pair<HeadKind, Provenance>> models_of(const std::vector<AggregateCell>& cells) {
  std::set<std::pair<HeadKind, Provenance>> s;
  for (const auto& c : cells) s.insert({c.key.head, c.key.provenance});
  return {s.begin(), s.end()};
}

std::vector<Domain> domains_of(const std::vector<AggregateCell>& cells) {
  std::set<Domain> s;
  for (const auto& c : cells) s.insert(c.key.test_domain);
  return {s.begin(), s.end()};
}

Table main_table(const Cells& cells, const TabulateOptions& options) {
  Table t{"main", {"domain", "model"}, {}};
  std::vector<AggregateCell> in_domain;
  for (const auto& c : cells.all)
    if (c.key.train_domain == c.key.test_domain && c.key.test_task == Task::atsc)
      in_domain.push_back(c);
  auto sizes = sizes_of(in_domain);
  for (const auto& s : sizes) {
    t.header.push_back(s + " Acc");
    t.header.push_back(s + " MF1");
    t.header.push_back(s + " dAcc");
  }
  for (Domain d : domains_of(in_domain)) {
    for (auto [head, prov] : models_of(in_domain)) {
      bool any = false;
      std::vector<std::string> row = {std::string(to_string(d)), ""};
      for (const auto& s : sizes) {
        const auto* c = cells.find(head, d, d, Task::atsc, s, prov);
        if (!c) {
          row.insert(row.end(), {kMissing, kMissing, kMissing});
          continue;
        }
        any = true;
        row[1] = model_name(c->key);
        std::string acc = pct(c->accuracy);
        std::string delta = kMissing;
        if (!is_baseline(head)) {
          const AggregateCell* best = nullptr;
          for (HeadKind b : {HeadKind::baseline_cls, HeadKind::baseline_nsp})
            for (Provenance p : {Provenance::generic, Provenance::domain_adapted})
              if (const auto* bc = cells.find(b, d, d, Task::atsc, s, p))
                if (!best || bc->accuracy > best->accuracy) best = bc;
          if (best) {
            delta = signed_pct(c->accuracy - best->accuracy);
            if (c->run_accuracies.size() >= 2 && best->run_accuracies.size() >= 2 &&
                z_test(c->run_accuracies, best->run_accuracies, options.sidedness,
                       options.variance)
                    .significant_at_05)
              acc += "*";
          }
        }
        row.insert(row.end(), {acc, pct(c->macro_f1), delta});
      }
      if (!any) continue;
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

Table cross_domain_table(const Cells& cells) {
  Table t{"cross_domain", {"test_domain", "model", "size", "In Acc", "In MF1", "Cross Acc",
                           "Cross MF1"}, {}};
  std::vector<AggregateCell> atsc;
  for (const auto& c : cells.all)
    if (c.key.test_task == Task::atsc) atsc.push_back(c);
  auto sizes = sizes_of(atsc);
  for (Domain d : domains_of(atsc))
    for (auto [head, prov] : models_of(atsc))
      for (const auto& s : sizes) {
        Domain other = d == Domain::laptops ? Domain::restaurants : Domain::laptops;
        const auto* in = cells.find(head, d, d, Task::atsc, s, prov);
        const auto* cross = cells.find(head, other, d, Task::atsc, s, prov);
        if (!cross) continue;
        t.rows.push_back({std::string(to_string(d)), model_name(cross->key), s,
                          in ? pct(in->accuracy) : kMissing, in ? pct(in->macro_f1) : kMissing,
                          pct(cross->accuracy), pct(cross->macro_f1)});
      }
  return t;
}

Table acsc_table(const Cells& cells) {
  Table t{"acsc", {"train_domain", "model", "size", "Acc", "MF1"}, {}};
  std::vector<AggregateCell> acsc;
  for (const auto& c : cells.all)
    if (c.key.test_task == Task::acsc && !c.run_accuracies.empty()) acsc.push_back(c);
  std::sort(acsc.begin(), acsc.end(), [](const auto& a, const auto& b) {
    if (a.key.train_domain != b.key.train_domain) return a.key.train_domain < b.key.train_domain;
    if (a.key.head != b.key.head) return a.key.head < b.key.head;
    if (a.key.provenance != b.key.provenance) return a.key.provenance < b.key.provenance;
    return size_label_less(a.key.size, b.key.size);
  });
  for (const auto& c : acsc)
    t.rows.push_back({std::string(to_string(c.key.train_domain)), model_name(c.key), c.key.size,
                      pct(c.accuracy), pct(c.macro_f1)});
  return t;
}

Table per_prompt_table(const Cells& cells) {
  Table t{"per_prompt", {"domain", "model", "template"}, {}};
  std::vector<AggregateCell> in_domain;
  for (const auto& c : cells.all)
    if (c.key.train_domain == c.key.test_domain && c.key.test_task == Task::atsc &&
        uses_template(c.key.head))
      in_domain.push_back(c);
  auto sizes = sizes_of(in_domain);
  for (const auto& s : sizes) {
    t.header.push_back(s + " Acc");
    t.header.push_back(s + " MF1");
  }
  for (Domain d : domains_of(in_domain))
    for (auto [head, prov] : models_of(in_domain)) {
      std::set<std::string> templates;
      for (const auto& c : in_domain)
        if (c.key.head == head && c.key.provenance == prov && c.key.test_domain == d)
          for (const auto& [tid, m] : c.per_template) templates.insert(tid);
      for (const auto& tid : templates) {
        std::vector<std::string> row = {std::string(to_string(d)),
                                        model_name({head, d, d, Task::atsc, "", prov}), tid};
        for (const auto& s : sizes) {
          const auto* c = cells.find(head, d, d, Task::atsc, s, prov);
          auto it = c ? c->per_template.find(tid) : decltype(c->per_template.end()){};
          if (!c || it == c->per_template.end()) {
            row.insert(row.end(), {kMissing, kMissing});
          } else {
            row.insert(row.end(), {pct(it->second.accuracy), pct(it->second.macro_f1)});
          }
        }
        t.rows.push_back(std::move(row));
      }
    }
  return t;
}

Table per_class_table(const Cells& cells) {
  Table t{"per_class", {"domain", "model", "size", "F1 positive", "F1 negative", "F1 neutral",
                        "MF1"}, {}};
  std::vector<AggregateCell> in_domain;
  for (const auto& c : cells.all)
    if (c.key.train_domain == c.key.test_domain && c.key.test_task == Task::atsc &&
        !c.run_accuracies.empty())
      in_domain.push_back(c);
  std::sort(in_domain.begin(), in_domain.end(), [](const auto& a, const auto& b) {
    if (a.key.test_domain != b.key.test_domain) return a.key.test_domain < b.key.test_domain;
    if (a.key.head != b.key.head) return a.key.head < b.key.head;
    if (a.key.provenance != b.key.provenance) return a.key.provenance < b.key.provenance;
    return size_label_less(a.key.size, b.key.size);
  });
  for (const auto& c : in_domain)
    t.rows.push_back({std::string(to_string(c.key.test_domain)), model_name(c.key), c.key.size,
                      pct(c.per_class_f1[0]), pct(c.per_class_f1[1]), pct(c.per_class_f1[2]),
                      pct(c.macro_f1)});
  return t;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string_view to_string(Layout layout) {
  switch (layout) {
    case Layout::main: return "main";
    case Layout::cross_domain: return "cross_domain";
    case Layout::acsc: return "acsc";
    case Layout::per_prompt: return "per_prompt";
    case Layout::per_class: return "per_class";
  }
  return "?";
}

Layout parse_layout(std::string_view s) {
  for (Layout l : all_layouts())
    if (to_string(l) == s) return l;
  throw ConfigError("unknown table layout '" + std::string(s) + "'");
}

const std::vector<Layout>& all_layouts() {
  static const std::vector<Layout> layouts = {Layout::main, Layout::cross_domain, Layout::acsc,
                                              Layout::per_prompt, Layout::per_class};
  return layouts;
}

bool size_label_less(const std::string& a, const std::string& b) {
  auto rank = [](const std::string& s) -> std::pair<int, std::size_t> {
    if (s == "full") return {1, 0};
    try {
      return {0, std::stoul(s)};
    } catch (const std::exception&) {
      return {2, 0};
    }
  };
  auto ra = rank(a), rb = rank(b);
  return ra != rb ? ra < rb : a < b;
}

Table tabulate(const std::vector<RunResult>& results, Layout layout,
               const TabulateOptions& options) {
  if (results.empty()) throw Error("no results to tabulate");
  Cells cells{aggregate(results)};
  switch (layout) {
    case Layout::main: return main_table(cells, options);
    case Layout::cross_domain: return cross_domain_table(cells);
    case Layout::acsc: return acsc_table(cells);
    case Layout::per_prompt: return per_prompt_table(cells);
    case Layout::per_class: return per_class_table(cells);
  }
  throw Error("unknown layout");
}

std::string to_csv(const Table& table) {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_field(fields[i]);
    out << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out.str();
}

std::string to_text(const Table& table) {
  std::vector<std::size_t> width(table.header.size(), 0);
  auto measure = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i)
      width[i] = std::max(width[i], r[i].size());
  };
  measure(table.header);
  for (const auto& r : table.rows) measure(r);
  std::ostringstream out;
  out << table.title << '\n';
  auto line = [&](const std::vector<std::string>& r) {
    std::string text;
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string cell = i < r.size() ? r[i] : "";
      std::string pad(width[i] - cell.size(), ' ');
      bool numeric = !cell.empty() && (std::isdigit(static_cast<unsigned char>(cell[0])) ||
                                       cell[0] == '+' || cell[0] == '-');
      if (i) text += "  ";
      text += numeric ? pad + cell : cell + pad;
    }
    text.erase(text.find_last_not_of(' ') + 1);
    out << text << '\n';
  };
  line(table.header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
  for (const auto& r : table.rows) line(r);
  return out.str();
}

}  // namespace atsc
