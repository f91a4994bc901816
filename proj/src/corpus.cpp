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

#include "atsc/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "atsc/rng.hpp"

namespace atsc {

namespace pt = boost::property_tree;

Task parse_task(std::string_view s) {
  if (s == "atsc") return Task::atsc;
  if (s == "acsc") return Task::acsc;
  throw Error("unknown task '" + std::string(s) + "'");
}

std::string_view to_string(Task t) { return t == Task::atsc ? "atsc" : "acsc"; }

std::string codepoint_substr(std::string_view text, CharSpan span) {
  if (span.from > span.to) throw Error("span start after span end");
  std::size_t cp = 0, begin = std::string_view::npos, end = std::string_view::npos;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    bool boundary = i == text.size() ||
                    (static_cast<unsigned char>(text[i]) & 0xC0) != 0x80;
    if (!boundary) continue;
    if (cp == span.from) begin = i;
    if (cp == span.to) {
      end = i;
      break;
    }
    ++cp;
  }
  if (begin == std::string_view::npos || end == std::string_view::npos)
    throw Error("span [" + std::to_string(span.from) + ", " +
                std::to_string(span.to) + ") is out of range");
  return std::string(text.substr(begin, end - begin));
}

namespace {

std::optional<std::size_t> parse_offset(const pt::ptree& attrs, const char* key) {
  auto v = attrs.get_optional<std::string>(key);
  if (!v) return std::nullopt;
  try {
    return static_cast<std::size_t>(std::stoul(*v));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<RawAnnotation> parse_semeval(std::string_view xml_document, Task kind) {
  pt::ptree tree;
  {
    std::istringstream in{std::string(xml_document)};
    try {
      pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
      throw ParseError("malformed SemEval XML: " + e.message(), e.line());
    }
  }
  auto root = tree.get_child_optional("sentences");
  if (!root) throw ParseError("SemEval XML has no <sentences> root");

  const char* group = kind == Task::atsc ? "aspectTerms" : "aspectCategories";
  const char* item = kind == Task::atsc ? "aspectTerm" : "aspectCategory";
  const char* surface_attr = kind == Task::atsc ? "term" : "category";

  std::vector<RawAnnotation> out;
  std::vector<std::string> bad_records;
  std::size_t index = 0;
  for (const auto& [tag, sentence] : *root) {
    if (tag != "sentence") continue;
    RawAnnotation ann;
    ann.aspect_kind = kind == Task::atsc ? AspectKind::term : AspectKind::category;
    ann.sentence_id = sentence.get("<xmlattr>.id", "s" + std::to_string(index));
    ++index;
    auto text = sentence.get_optional<std::string>("text");
    if (!text) {
      bad_records.push_back(ann.sentence_id);
      continue;
    }
    ann.text = *text;
    bool record_ok = true;
    if (auto aspects = sentence.get_child_optional(group)) {
      for (const auto& [atag, node] : *aspects) {
        if (atag != item) continue;
        const auto* attrs = node.get_child_optional("<xmlattr>").get_ptr();
        auto surface = attrs ? attrs->get_optional<std::string>(surface_attr)
                             : boost::optional<std::string>();
        auto polarity = attrs ? attrs->get_optional<std::string>("polarity")
                              : boost::optional<std::string>();
        if (!surface || !polarity) {
          record_ok = false;
          continue;
        }
        RawAspect aspect;
        aspect.surface = *surface;
        try {
          aspect.polarity = parse_raw_polarity(*polarity);
        } catch (const Error&) {
          record_ok = false;
          continue;
        }
        if (kind == Task::atsc) {
          auto from = parse_offset(*attrs, "from");
          auto to = parse_offset(*attrs, "to");
          if (from && to) {
            aspect.span = CharSpan{*from, *to};
            std::string found;
            try {
              found = codepoint_substr(ann.text, *aspect.span);
            } catch (const Error&) {
              found.clear();
            }
            if (found != aspect.surface)
              spdlog::warn("sentence {}: span [{}, {}) gives '{}' but term is '{}'",
                           ann.sentence_id, *from, *to, found, aspect.surface);
          }
        }
        ann.aspects.push_back(std::move(aspect));
      }
    }
    if (!record_ok) bad_records.push_back(ann.sentence_id);
    out.push_back(std::move(ann));
  }
  if (!bad_records.empty()) {
    std::string ids;
    for (const auto& id : bad_records) ids += (ids.empty() ? "" : ", ") + id;
    throw RecordError("aspect records missing a valid polarity or surface in sentences: " + ids,
                      bad_records);
  }
  return out;
}

std::vector<RawAnnotation> parse_semeval_file(const std::filesystem::path& path,
                                              Task kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_semeval(buf.str(), kind);
}

std::vector<LabeledExample> preprocess(const std::vector<RawAnnotation>& raw,
                                       Domain domain) {
  std::vector<LabeledExample> out;
  for (const auto& ann : raw) {
    for (std::size_t i = 0; i < ann.aspects.size(); ++i) {
      const auto& a = ann.aspects[i];
      Polarity p;
      switch (a.polarity) {
        case RawPolarity::conflict: continue;
        case RawPolarity::positive: p = Polarity::positive; break;
        case RawPolarity::negative: p = Polarity::negative; break;
        default: p = Polarity::neutral; break;
      }
      out.push_back({ann.text, a.surface, p, domain, ann.aspect_kind,
                     ann.sentence_id + "#" + std::to_string(i)});
    }
  }
  return out;
}

std::string FewShotSpec::label() const {
  return size ? std::to_string(*size) : "full";
}

const std::vector<FewShotSpec>& paper_size_grid() {
  static const std::vector<FewShotSpec> grid = {
      {0, 0}, {16, 0}, {64, 0}, {256, 0}, {1024, 0}, {std::nullopt, 0}};
  return grid;
}

std::optional<std::size_t> parse_few_shot_size(std::string_view s) {
  if (s == "full" || s == "Full") return std::nullopt;
  if (s == "zero" || s == "Zero") return 0;
  std::size_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (!s.empty() && ec == std::errc() && end == s.data() + s.size()) return v;
  throw Error("invalid few-shot size '" + std::string(s) + "'");
}

std::vector<LabeledExample> sample_few_shot(const std::vector<LabeledExample>& examples,
                                            const FewShotSpec& spec) {
  if (spec.is_full()) return examples;
  if (*spec.size > examples.size())
    throw Error("few-shot size " + std::to_string(*spec.size) +
                " exceeds the " + std::to_string(examples.size()) +
                " available examples");
  if (*spec.size == 0) return {};
  auto order = seeded_permutation(examples.size(), spec.seed);
  std::vector<LabeledExample> out;
  out.reserve(*spec.size);
  for (std::size_t i = 0; i < *spec.size; ++i) out.push_back(examples[order[i]]);
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

namespace {

bool is_abbreviation(std::string_view word) {
  static const std::unordered_set<std::string> abbreviations = {
      "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g",
      "i.e", "inc", "ltd", "co", "no", "approx", "min", "max", "ft", "lb", "oz"};
  std::string lower;
  for (char c : word) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower.size() == 1 && std::isalpha(static_cast<unsigned char>(lower[0])))
    return true;
  // Dotted initials: p.m, u.s.a
  bool dotted = lower.size() >= 3;
  for (std::size_t i = 0; i < lower.size() && dotted; ++i)
    dotted = i % 2 ? lower[i] == '.' : std::isalpha(static_cast<unsigned char>(lower[i])) != 0;
  return dotted || abbreviations.count(lower) > 0;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view raw) {
  std::string text = normalize_whitespace(raw);
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < text.size() &&
           (text[j] == '.' || text[j] == '!' || text[j] == '?' || text[j] == '"' ||
            text[j] == '\'' || text[j] == ')'))
      ++j;
    if (j < text.size() && text[j] != ' ') continue;
    if (c == '.' && j == i + 1) {
      std::size_t w = i;
      while (w > start && text[w - 1] != ' ') --w;
      if (is_abbreviation(std::string_view(text).substr(w, i - w))) continue;
    }
    std::string sentence = text.substr(start, j - start);
    if (!sentence.empty()) out.push_back(std::move(sentence));
    start = j + 1;
    i = j;
  }
  if (start < text.size()) out.push_back(text.substr(start));
  return out;
}

std::string_view source_category(Domain domain) {
  return domain == Domain::laptops ? "electronics" : "restaurants";
}

namespace {

std::string lowercase_trim(std::string_view s) {
  std::string out = normalize_whitespace(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool category_matches(const nlohmann::json& field, std::string_view wanted) {
  auto match_string = [&](const std::string& s) {
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ','))
      if (lowercase_trim(part) == wanted) return true;
    return false;
  };
  if (field.is_string()) return match_string(field.get<std::string>());
  if (field.is_array()) {
    for (const auto& v : field)
      if (v.is_string() && match_string(v.get<std::string>())) return true;
  }
  return false;
}

}  // namespace

CorpusStats prepare_pretrain_corpus(
    std::istream& raw_reviews, Domain domain, std::optional<std::size_t> limit,
    const std::function<void(const PretrainSentence&)>& emit) {
  CorpusStats stats;
  const std::string_view wanted = source_category(domain);
  std::string line;
  while ((!limit || stats.reviews_consumed < *limit) &&
         std::getline(raw_reviews, line)) {
    if (normalize_whitespace(line).empty()) continue;
    ++stats.records_read;
    bool matched = false;
    std::string text;
    if (line.front() == '{') {
      auto record = nlohmann::json::parse(line, nullptr, false);
      if (record.is_discarded() || !record.is_object()) {
        ++stats.records_skipped;
        continue;
      }
      const nlohmann::json* category = nullptr;
      for (const char* key : {"category", "categories"})
        if (record.contains(key)) category = &record[key];
      const nlohmann::json* body = nullptr;
      for (const char* key : {"text", "reviewText"})
        if (record.contains(key) && record[key].is_string()) body = &record[key];
      if (!category || !body) {
        ++stats.records_skipped;
        continue;
      }
      matched = category_matches(*category, wanted);
      text = body->get<std::string>();
    } else {
      auto tab = line.find('\t');
      if (tab == std::string::npos) {
        ++stats.records_skipped;
        continue;
      }
      matched = category_matches(line.substr(0, tab), wanted);
      text = line.substr(tab + 1);
    }
    if (!matched) continue;
    ++stats.reviews_consumed;
    for (auto& s : split_sentences(text)) {
      ++stats.sentences;
      emit(PretrainSentence{std::move(s), domain});
    }
  }
  return stats;
}

nlohmann::json to_json(const LabeledExample& e) {
  return nlohmann::json{{"text", e.text},
                        {"aspect", e.aspect},
                        {"polarity", to_string(e.polarity)},
                        {"domain", to_string(e.domain)},
                        {"aspect_kind", to_string(e.aspect_kind)},
                        {"source_id", e.source_id}};
}

LabeledExample labeled_example_from_json(const nlohmann::json& j) {
  LabeledExample e;
  e.text = j.at("text").get<std::string>();
  e.aspect = j.at("aspect").get<std::string>();
  e.polarity = parse_polarity(j.at("polarity").get<std::string>());
  e.domain = parse_domain(j.at("domain").get<std::string>());
  e.aspect_kind = parse_aspect_kind(j.at("aspect_kind").get<std::string>());
  e.source_id = j.at("source_id").get<std::string>();
  return e;
}

void write_examples(std::ostream& out, const std::vector<LabeledExample>& examples,
                    const nlohmann::json* meta) {
  if (meta) out << nlohmann::json{{"_meta", *meta}}.dump() << '\n';
  for (const auto& e : examples) out << to_json(e).dump() << '\n';
}

std::vector<LabeledExample> read_examples(std::istream& in) {
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (j.contains("_meta")) continue;
      out.push_back(labeled_example_from_json(j));
    } catch (const std::exception& e) {
      throw ParseError(std::string("bad example record: ") + e.what(), line_no);
    }
  }
  return out;
}

std::vector<LabeledExample> read_examples_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_examples(in);
}

ClassCounts count_classes(const std::vector<LabeledExample>& examples) {
  ClassCounts c;
  for (const auto& e : examples) {
    switch (e.polarity) {
      case Polarity::positive: ++c.positive; break;
      case Polarity::negative: ++c.negative; break;
      case Polarity::neutral: ++c.neutral; break;
    }
  }
  return c;
}

}  // namespace atsc
