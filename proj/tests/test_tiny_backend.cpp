#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "atsc/heads.hpp"
#include "atsc/tiny_backend.hpp"

using namespace atsc;

namespace {

const std::vector<std::string> kTexts = {
    "The battery life is great.", "The screen was awful and dim.",
    "I used the keyboard yesterday.", "Great food but terrible service.",
    "The battery life is great.", "The screen was awful and dim."};

std::unique_ptr<TinyBackend> make(BackendFamily f, std::optional<PairReadout> r = {},
                                  TinyConfig config = {}) {
  config.embedding_dim = 8;
  config.hidden_dim = 6;
  return TinyBackend::create({f, Provenance::generic, {}, r}, kTexts,
                             {"good", "bad", "ok", "felt", "made", "me", "feel", "is", "was"},
                             config);
}

// Central differences on a random sample of entries in every block.
void check_gradient(TinyBackend& b, const TrainingInstance& x, const char* what) {
  TinyParameters grad = b.parameters().zeros_like();
  double base = b.loss_and_gradient(x, &grad);
  ASSERT_TRUE(std::isfinite(base)) << what;
  std::mt19937_64 gen(3);
  const double h = 1e-6;
  std::size_t checked = 0;
  for (int blk = 0; blk < TinyParameters::kNumBlocks; ++blk) {
    auto& m = b.parameters().blocks[blk];
    for (int k = 0; k < 12; ++k) {
      Eigen::Index i = gen() % m.rows(), j = gen() % m.cols();
      double keep = m(i, j);
      m(i, j) = keep + h;
      double up = b.loss(x);
      m(i, j) = keep - h;
      double down = b.loss(x);
      m(i, j) = keep;
      double numeric = (up - down) / (2 * h);
      double analytic = grad.blocks[blk](i, j);
      EXPECT_NEAR(analytic, numeric, 1e-5 + 1e-4 * std::abs(numeric))
          << what << " block " << blk << " (" << i << ", " << j << ")";
      ++checked;
    }
  }
  EXPECT_GT(checked, 0u);
}

}  // namespace

TEST(TinyGradient, LabelWordCloze) {
  auto b = make(BackendFamily::masked_lm);
  check_gradient(*b, LabelWordInstance{"The screen was dim. The screen is [MASK].", PromptMode::cloze,
                                       {"good", "bad", "ok"}, 1},
                 "cloze");
}

TEST(TinyGradient, LabelWordNextWord) {
  auto b = make(BackendFamily::causal_lm);
  check_gradient(*b, LabelWordInstance{"The screen was dim. The screen is", PromptMode::next_word,
                                       {"good", "bad", "ok"}, 2},
                 "next word");
}

TEST(TinyGradient, Nli) {
  auto b = make(BackendFamily::nli);
  check_gradient(*b, NliInstance{"Great food.", "The food is good.", "The food is bad.",
                                 Polarity::neutral},
                 "nli");
}

TEST(TinyGradient, PairReadouts) {
  auto nsp = make(BackendFamily::pair_classifier, PairReadout::nsp);
  check_gradient(*nsp, PairInstance{"Terrible service.", "service", Polarity::negative}, "nsp");
  auto cls = make(BackendFamily::pair_classifier, PairReadout::cls);
  check_gradient(*cls, PairInstance{"Terrible service.", "service", Polarity::negative}, "cls");
}

TEST(TinyGradient, TokenObjectives) {
  auto m = make(BackendFamily::masked_lm);
  auto ids = m->tokenize("the battery life is great");
  MaskedLmInstance x;
  for (const auto& p : ids) x.input_ids.push_back(p.id), x.target_ids.push_back(-1);
  x.target_ids[1] = x.input_ids[1];
  x.input_ids[1] = WordPieceTokenizer::kMask;
  check_gradient(*m, x, "masked lm");

  auto c = make(BackendFamily::causal_lm);
  CausalLmInstance y;
  for (const auto& p : c->tokenize("the screen was awful")) y.input_ids.push_back(p.id);
  for (std::size_t i = 0; i + 1 < y.input_ids.size(); ++i) y.target_ids.push_back(y.input_ids[i + 1]);
  y.target_ids.push_back(-1);
  check_gradient(*c, y, "causal lm");
}

TEST(TinyScoring, RestrictedAgreesWithFullVocabulary) {
  auto b = make(BackendFamily::masked_lm);
  std::vector<std::string> words = {"good", "bad", "ok"};
  auto full = b->mask_fill("The screen is [MASK].", {});
  auto part = b->mask_fill("The screen is [MASK].", words);
  EXPECT_FALSE(full.restricted);
  EXPECT_TRUE(part.restricted);
  EXPECT_NEAR(full.total(), 1.0, 1e-9);
  for (const auto& w : words) EXPECT_NEAR(part.at(w), full.at(w), 1e-12) << w;

  auto c = make(BackendFamily::causal_lm);
  auto nf = c->next_token("The screen is", {});
  auto np = c->next_token("The screen is", words);
  for (const auto& w : words) EXPECT_NEAR(np.at(w), nf.at(w), 1e-12) << w;
}

TEST(TinyScoring, MaskCountAndCandidatesAreChecked) {
  auto b = make(BackendFamily::masked_lm);
  EXPECT_THROW(b->mask_fill("no mask here", {}), Error);
  EXPECT_THROW(b->mask_fill("[MASK] and [MASK]", {}), Error);
  std::vector<std::string> split = {"zzzqqq"};
  EXPECT_THROW(b->mask_fill("It is [MASK].", split), Error);
  EXPECT_THROW(b->nli_score("a", "b"), BackendError);
}

TEST(TinyScoring, LongInputKeepsTheMask) {
  TinyConfig cfg;
  cfg.max_length = 16;
  auto b = make(BackendFamily::masked_lm, {}, cfg);
  std::string text;
  for (int i = 0; i < 40; ++i) text += "the battery life is great ";
  text += "The screen is [MASK].";
  std::vector<std::string> words = {"good", "bad", "ok"};
  auto d = b->mask_fill(text, words);
  EXPECT_GT(d.total(), 0.0);
}

TEST(TinyFit, OverfitsSixteenExamples) {
  auto b = make(BackendFamily::nli);
  std::vector<TrainingInstance> xs;
  const char* words[] = {"great", "awful", "fine"};
  for (int i = 0; i < 16; ++i) {
    auto p = kPolarities[i % 3];
    xs.push_back(NliInstance{std::string("The food was ") + words[i % 3] + " " + std::to_string(i),
                             "The food is good.", "The food is bad.", p});
  }
  TrainingSchedule s;
  s.epochs = 20;
  s.seed = 42;
  auto r = b->fit(xs, s);
  EXPECT_EQ(r.epoch_losses.size(), 20u);
  EXPECT_EQ(r.steps, 20u * 4u);
  EXPECT_LT(r.final_loss, r.initial_loss);
  EXPECT_TRUE(b->task_trained());
}

TEST(TinyFit, SameSeedSameWeights) {
  auto a = make(BackendFamily::masked_lm), b = make(BackendFamily::masked_lm);
  std::vector<TrainingInstance> xs = {
      LabelWordInstance{"The screen is [MASK].", PromptMode::cloze, {"good", "bad", "ok"}, 0},
      LabelWordInstance{"The fan is [MASK].", PromptMode::cloze, {"good", "bad", "ok"}, 1}};
  TrainingSchedule s;
  s.epochs = 3;
  s.seed = 9;
  a->fit(xs, s);
  b->fit(xs, s);
  for (int k = 0; k < TinyParameters::kNumBlocks; ++k)
    EXPECT_TRUE(a->parameters().blocks[k] == b->parameters().blocks[k]);
}

TEST(TinyFit, LinearDecayEndsSmallerSteps) {
  std::vector<TrainingInstance> xs = {
      LabelWordInstance{"The screen is [MASK].", PromptMode::cloze, {"good", "bad", "ok"}, 0},
      LabelWordInstance{"The fan is [MASK].", PromptMode::cloze, {"good", "bad", "ok"}, 1}};
  TrainingSchedule constant, linear;
  constant.epochs = linear.epochs = 6;
  constant.batch_size = linear.batch_size = 1;
  linear.linear_decay = true;
  auto a = make(BackendFamily::masked_lm), b = make(BackendFamily::masked_lm);
  auto ra = a->fit(xs, constant), rb = b->fit(xs, linear);
  EXPECT_EQ(ra.steps, rb.steps);
  EXPECT_EQ(ra.epoch_losses[0], rb.epoch_losses[0]);  // first step at the full rate
  double da = 0, db = 0;
  for (int i = 0; i < TinyParameters::kNumBlocks; ++i) {
    auto blk = static_cast<TinyParameters::Block>(i);
    da += (a->parameters()[blk] - make(BackendFamily::masked_lm)->parameters()[blk]).squaredNorm();
    db += (b->parameters()[blk] - make(BackendFamily::masked_lm)->parameters()[blk]).squaredNorm();
  }
  EXPECT_LT(db, da);
  auto j = to_json(linear);
  EXPECT_EQ(j["lr_decay"], "linear");
  EXPECT_TRUE(training_schedule_from_json(j).linear_decay);
  j["lr_decay"] = "cosine";
  EXPECT_THROW(training_schedule_from_json(j), ConfigError);
}

TEST(TinyFit, WrongInstanceTypeIsRejected) {
  auto b = make(BackendFamily::nli);
  std::vector<TrainingInstance> xs = {PairInstance{"x", "y", Polarity::neutral}};
  EXPECT_THROW(b->fit(xs, {}), BackendError);
}

TEST(TinyFit, NonFiniteLossIsReported) {
  auto b = make(BackendFamily::nli);
  b->parameters()[TinyParameters::kPairOutputBias](0, 0) = NAN;
  std::vector<TrainingInstance> xs = {NliInstance{"a", "b", "c", Polarity::neutral}};
  EXPECT_THROW(b->fit(xs, {}), BackendError);
}

TEST(TinyCheckpoint, SaveLoadRoundTrip) {
  auto b = make(BackendFamily::masked_lm);
  auto path = std::filesystem::temp_directory_path() / "atsc_tiny_roundtrip.ckpt";
  b->save(path);
  auto c = TinyBackend::load(path);
  EXPECT_EQ(c->descriptor(), b->descriptor());
  EXPECT_EQ(c->tokenizer().vocab(), b->tokenizer().vocab());
  std::vector<std::string> words = {"good", "bad", "ok"};
  auto x = b->mask_fill("The screen is [MASK].", words);
  auto y = c->mask_fill("The screen is [MASK].", words);
  for (const auto& w : words) EXPECT_EQ(x.at(w), y.at(w));

  BackendDescriptor as_nli{BackendFamily::nli, Provenance::generic, {}, {}};
  auto d = TinyBackend::load(path, as_nli);
  EXPECT_EQ(d->descriptor().family, BackendFamily::nli);
  EXPECT_FALSE(d->task_trained());
  std::filesystem::remove(path);
}

TEST(TinyCheckpoint, CorruptFileIsRejected) {
  auto path = std::filesystem::temp_directory_path() / "atsc_tiny_corrupt.ckpt";
  {
    std::ofstream out(path, std::ios::binary);
    out << "not cbor";
  }
  EXPECT_THROW(TinyBackend::load(path), Error);
  std::filesystem::remove(path);
}

TEST(Tokenizer, WordPieceFallbackCoversUnseenWords) {
  auto b = make(BackendFamily::masked_lm);
  EXPECT_TRUE(b->is_single_item("good"));
  auto pieces = b->tokenize("Batterylife");
  ASSERT_GT(pieces.size(), 1u);
  for (const auto& p : pieces) EXPECT_NE(p.id, WordPieceTokenizer::kUnk);
  EXPECT_EQ(pieces.front().begin, 0u);
  EXPECT_EQ(pieces.back().end, 11u);
}
