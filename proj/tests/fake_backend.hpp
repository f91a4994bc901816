// Scripted backend for head tests: every answer comes from a lookup table.
#pragma once

#include <functional>
#include <map>
#include <string>

#include "atsc/backend.hpp"
#include "atsc/tokenizer.hpp"

namespace atsc::fake {

class FakeBackend : public Backend {
 public:
  explicit FakeBackend(BackendDescriptor d) : d_(std::move(d)) {}

  // Full-vocabulary distribution returned for every query.
  std::map<std::string, double> vocab = {{"good", 0.2}, {"bad", 0.1}, {"ok", 0.05}, {"the", 0.65}};
  std::function<NliLogits(std::string_view, std::string_view)> nli;
  PairLogits pair{{0.3, -0.1, 0.2}};
  bool trained = false;  // baselines refuse to score until set
  std::vector<std::string> calls;

  const BackendDescriptor& descriptor() const override { return d_; }
  std::vector<Piece> tokenize(std::string_view text) const override {
    std::vector<Piece> out;
    for (const auto& w : split_words(text)) out.push_back({w.text, 5, w.begin, w.end});
    return out;
  }
  std::size_t max_length() const override { return 512; }
  bool is_single_item(std::string_view w) const override { return vocab.count(std::string(w)) > 0; }
  std::string first_item(std::string_view w) const override { return std::string(w.substr(0, 1)); }
  TokenDistribution mask_fill(std::string_view text, std::span<const std::string> c) override {
    calls.push_back("mask_fill:" + std::string(text));
    return answer(c);
  }
  TokenDistribution next_token(std::string_view text, std::span<const std::string> c) override {
    calls.push_back("next_token:" + std::string(text));
    return answer(c);
  }
  NliLogits nli_score(std::string_view premise, std::string_view hypothesis) override {
    calls.push_back("nli:" + std::string(hypothesis));
    return nli ? nli(premise, hypothesis) : NliLogits{};
  }
  PairLogits pair_classify(std::string_view, std::string_view) override { return pair; }
  FitReport fit(std::span<const TrainingInstance>, const TrainingSchedule&) override { return {}; }
  bool task_trained() const override { return trained; }

 private:
  TokenDistribution answer(std::span<const std::string> c) const {
    TokenDistribution t;
    if (c.empty()) {
      t.entries = vocab;
      return t;
    }
    t.restricted = true;
    for (const auto& w : c) t.entries[w] = vocab.at(w);
    return t;
  }
  BackendDescriptor d_;
};

}  // namespace atsc::fake
