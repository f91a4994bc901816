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

// A small in-process backend for desk-scale runs and tests.
//
// Word pieces are embedded, then mixed with their neighbours by a width-5 tanh
// convolution (plus the embedding itself).  Around a focus position (the mask,
// the next-token slot, or [CLS]) two vectors are pooled from those: a query
// q weighted by exp(-|i - focus| / locality) (uniform for the [CLS] readout,
// which has to find the aspect at the far end), and an attention read with
// scores c_i.q / sqrt(d).  Without the convolution a bag of embeddings cannot
// tell which aspect an opinion word sits next to.  [q; attended] feeds a tanh
// layer and a vocabulary softmax for the LM families.
// Two-segment inputs (NLI, nsp readout) use mean-pooled segments u, v and the
// features [u; v; u*v; |u-v|].  Every parameter is trained by fit (Adam).

#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "atsc/backend.hpp"
#include "atsc/tokenizer.hpp"

namespace atsc {

struct TinyConfig {
  std::size_t embedding_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t max_length = 128;
  double locality = 2.0;
  double init_scale = 0.1;
  double grad_clip = 5.0;  // global L2 norm; 0 disables
  std::uint64_t init_seed = 7;
};

struct TinyParameters {
  enum Block {
    kEmbeddings,       // V x d
    kLmHidden,         // H x 2d
    kLmHiddenBias,     // H x 1
    kLmOutput,         // V x H
    kLmOutputBias,     // V x 1
    kPairHidden,       // H x 4d
    kPairHiddenBias,   // H x 1
    kPairOutput,       // 3 x H
    kPairOutputBias,   // 3 x 1
    kCtxConv,          // d x 5d
    kCtxConvBias,      // d x 1
    kNumBlocks
  };
  std::array<Eigen::MatrixXd, kNumBlocks> blocks;

  Eigen::MatrixXd& operator[](Block b) { return blocks[b]; }
  const Eigen::MatrixXd& operator[](Block b) const { return blocks[b]; }
  TinyParameters zeros_like() const;
  double squared_norm() const;
};

class TinyBackend final : public Backend {
 public:
  TinyBackend(BackendDescriptor descriptor, WordPieceTokenizer tokenizer,
              TinyConfig config = {});

  // Vocabulary from `texts` plus `required_words` (label words, prompt words).
  static std::unique_ptr<TinyBackend> create(BackendDescriptor descriptor,
                                             std::span<const std::string> texts,
                                             std::vector<std::string> required_words,
                                             TinyConfig config = {});

  void save(const std::filesystem::path& path) const;
  // `descriptor` replaces the stored one, e.g. to start a pair classifier
  // from a masked-LM checkpoint.
  static std::unique_ptr<TinyBackend> load(const std::filesystem::path& path,
                                           std::optional<BackendDescriptor> descriptor = {});
  std::unique_ptr<TinyBackend> clone() const;

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  std::vector<Piece> tokenize(std::string_view text) const override;
  std::size_t max_length() const override { return config_.max_length; }
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
  bool shareable() const override { return true; }

  // Loss of one instance; the gradient is added into `grad` when given.
  // Returns NaN for instances without a scored position.
  double loss_and_gradient(const TrainingInstance& instance, TinyParameters* grad) const;
  double loss(const TrainingInstance& instance) const {
    return loss_and_gradient(instance, nullptr);
  }

  TinyParameters& parameters() { return params_; }
  const TinyParameters& parameters() const { return params_; }
  const WordPieceTokenizer& tokenizer() const { return tokenizer_; }
  const TinyConfig& config() const { return config_; }

 private:
  struct SeqCache;
  struct PairCache;

  std::vector<int> ids_of(std::string_view text) const;
  // global: uniform query weights, for the [CLS] readout
  Eigen::VectorXd seq_features(std::span<const int> ids, std::size_t focus,
                               SeqCache* cache, bool global = false) const;
  void seq_backward(const SeqCache& cache, const Eigen::VectorXd& dx,
                    TinyParameters& grad) const;
  Eigen::VectorXd pair_features(std::span<const int> a, std::span<const int> b,
                                PairCache* cache) const;
  void pair_backward(const PairCache& cache, const Eigen::VectorXd& dx,
                     TinyParameters& grad) const;

  // Vocabulary logits at `focus` (LM families).
  Eigen::VectorXd lm_logits(std::span<const int> ids, std::size_t focus) const;
  TokenDistribution distribution(const Eigen::VectorXd& logits,
                                 std::span<const std::string> candidates) const;
  int single_id(const std::string& item) const;

  std::vector<int> lm_input(std::string_view text, std::size_t* focus, bool cloze) const;
  std::pair<std::vector<int>, std::vector<int>> pair_input(std::string_view first,
                                                           std::string_view second) const;
  std::vector<int> cls_input(std::string_view text, std::string_view aspect) const;

  double label_word_loss(const LabelWordInstance& x, TinyParameters* grad) const;
  double nli_loss(const NliInstance& x, TinyParameters* grad) const;
  double pair_loss(const PairInstance& x, TinyParameters* grad) const;
  double token_loss(std::span<const int> ids, std::span<const int> targets, bool causal,
                    TinyParameters* grad) const;

  // Three logits from two-segment features through the pair head.
  Eigen::Vector3d pair_head(const Eigen::VectorXd& x, Eigen::VectorXd* hidden) const;
  void pair_head_backward(const Eigen::VectorXd& x, const Eigen::VectorXd& hidden,
                          const Eigen::Vector3d& dlogits, TinyParameters& grad,
                          Eigen::VectorXd* dx) const;

  BackendDescriptor descriptor_;
  WordPieceTokenizer tokenizer_;
  TinyConfig config_;
  TinyParameters params_;
  bool task_trained_ = false;
};

}  // namespace atsc
