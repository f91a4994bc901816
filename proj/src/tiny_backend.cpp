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

#include "atsc/tiny_backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "atsc/heads.hpp"
#include "atsc/rng.hpp"

namespace atsc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TinyParameters TinyParameters::zeros_like() const {
  TinyParameters z;
  for (std::size_t i = 0; i < kNumBlocks; ++i)
    z.blocks[i] = MatrixXd::Zero(blocks[i].rows(), blocks[i].cols());
  return z;
}

double TinyParameters::squared_norm() const {
  double s = 0.0;
  for (const auto& b : blocks) s += b.squaredNorm();
  return s;
}

namespace {
constexpr Eigen::Index kConvWidth = 5;
constexpr Eigen::Index kConvHalf = kConvWidth / 2;
}  // namespace

struct TinyBackend::SeqCache {
  std::vector<int> ids;
  std::size_t focus = 0;
  MatrixXd windows;  // n x 5d, zero padded
  MatrixXd act;      // n x d, tanh part only
  MatrixXd ctx;      // n x d, act + embedding
  VectorXd local;    // n, zero at focus
  VectorXd attn;     // n, zero at focus
  VectorXd query;
};

struct TinyBackend::PairCache {
  std::vector<int> a, b;
  VectorXd u, v;
};

TinyBackend::TinyBackend(BackendDescriptor descriptor, WordPieceTokenizer tokenizer,
                         TinyConfig config)
    : descriptor_(descriptor), tokenizer_(std::move(tokenizer)), config_(config) {
  descriptor_.validate();
  const auto V = static_cast<Eigen::Index>(tokenizer_.size());
  const auto d = static_cast<Eigen::Index>(config_.embedding_dim);
  const auto H = static_cast<Eigen::Index>(config_.hidden_dim);
  Rng rng(config_.init_seed);
  auto gaussian = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
    MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = scale * rng.normal();
    return m;
  };
  params_[TinyParameters::kEmbeddings] = gaussian(V, d, config_.init_scale);
  params_[TinyParameters::kLmHidden] = gaussian(H, 2 * d, 1.0 / std::sqrt(2.0 * d));
  params_[TinyParameters::kLmHiddenBias] = MatrixXd::Zero(H, 1);
  params_[TinyParameters::kLmOutput] = gaussian(V, H, 1.0 / std::sqrt(double(H)));
  params_[TinyParameters::kLmOutputBias] = MatrixXd::Zero(V, 1);
  params_[TinyParameters::kPairHidden] = gaussian(H, 4 * d, 1.0 / std::sqrt(4.0 * d));
  params_[TinyParameters::kPairHiddenBias] = MatrixXd::Zero(H, 1);
  params_[TinyParameters::kPairOutput] = gaussian(3, H, 1.0 / std::sqrt(double(H)));
  params_[TinyParameters::kPairOutputBias] = MatrixXd::Zero(3, 1);
  params_[TinyParameters::kCtxConv] = gaussian(d, kConvWidth * d, 1.0 / std::sqrt(kConvWidth * double(d)));
  params_[TinyParameters::kCtxConvBias] = MatrixXd::Zero(d, 1);
}

std::unique_ptr<TinyBackend> TinyBackend::create(BackendDescriptor descriptor,
                                                 std::span<const std::string> texts,
                                                 std::vector<std::string> required_words,
                                                 TinyConfig config) {
  WordPieceTokenizer::BuildOptions options;
  options.required_words = std::move(required_words);
  return std::make_unique<TinyBackend>(descriptor, WordPieceTokenizer::build(texts, options),
                                       config);
}

std::unique_ptr<TinyBackend> TinyBackend::clone() const {
  return std::make_unique<TinyBackend>(*this);
}

void TinyBackend::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["format"] = "atsc-tiny-v2";
  j["descriptor"] = to_json(descriptor_);
  j["config"] = {{"embedding_dim", config_.embedding_dim},
                 {"hidden_dim", config_.hidden_dim},
                 {"max_length", config_.max_length},
                 {"locality", config_.locality},
                 {"init_scale", config_.init_scale},
                 {"grad_clip", config_.grad_clip},
                 {"init_seed", config_.init_seed}};
  j["vocab"] = tokenizer_.vocab();
  j["lowercase"] = tokenizer_.lowercase();
  j["task_trained"] = task_trained_;
  auto& blocks = j["blocks"];
  for (const auto& b : params_.blocks) {
    std::vector<double> data(b.data(), b.data() + b.size());
    blocks.push_back({{"rows", b.rows()}, {"cols", b.cols()}, {"data", data}});
  }
  auto bytes = nlohmann::json::to_cbor(j);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<TinyBackend> TinyBackend::load(const std::filesystem::path& path,
                                               std::optional<BackendDescriptor> descriptor) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  nlohmann::json j;
  try {
    j = nlohmann::json::from_cbor(bytes);
  } catch (const std::exception& e) {
    throw Error("corrupt checkpoint " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "atsc-tiny-v2")
    throw Error("unsupported checkpoint format in " + path.string());
  TinyConfig config;
  const auto& c = j.at("config");
  config.embedding_dim = c.at("embedding_dim");
  config.hidden_dim = c.at("hidden_dim");
  config.max_length = c.at("max_length");
  config.locality = c.at("locality");
  config.init_scale = c.at("init_scale");
  config.grad_clip = c.at("grad_clip");
  config.init_seed = c.at("init_seed");
  auto d = descriptor ? *descriptor : backend_descriptor_from_json(j.at("descriptor"));
  auto backend = std::make_unique<TinyBackend>(
      d, WordPieceTokenizer(j.at("vocab").get<std::vector<std::string>>(), j.at("lowercase")),
      config);
  const auto& blocks = j.at("blocks");
  if (blocks.size() != TinyParameters::kNumBlocks) throw Error("checkpoint block count mismatch");
  for (std::size_t i = 0; i < TinyParameters::kNumBlocks; ++i) {
    auto& target = backend->params_.blocks[i];
    auto data = blocks[i].at("data").get<std::vector<double>>();
    if (blocks[i].at("rows").get<Eigen::Index>() != target.rows() ||
        blocks[i].at("cols").get<Eigen::Index>() != target.cols() ||
        static_cast<Eigen::Index>(data.size()) != target.size())
      throw Error("checkpoint block " + std::to_string(i) + " has the wrong shape");
    target = Eigen::Map<const MatrixXd>(data.data(), target.rows(), target.cols());
  }
  // A descriptor override starts a new task; the task flag only carries over
  // for the same family.
  backend->task_trained_ = j.value("task_trained", false) &&
                           (!descriptor || descriptor->family ==
                                               backend_descriptor_from_json(j.at("descriptor")).family);
  return backend;
}

std::vector<Piece> TinyBackend::tokenize(std::string_view text) const {
  return tokenizer_.tokenize(text);
}

bool TinyBackend::is_single_item(std::string_view word) const {
  auto pieces = tokenizer_.tokenize(word);
  return pieces.size() == 1 && pieces[0].id != WordPieceTokenizer::kUnk;
}

std::string TinyBackend::first_item(std::string_view word) const {
  auto pieces = tokenizer_.tokenize(word);
  if (pieces.empty()) throw BackendError("label word '" + std::string(word) + "' is empty");
  return pieces[0].text;
}

int TinyBackend::single_id(const std::string& item) const {
  auto id = tokenizer_.id(item);
  if (!id || *id == WordPieceTokenizer::kUnk)
    throw BackendError("candidate '" + item + "' is not a single vocabulary item");
  return *id;
}

std::vector<int> TinyBackend::ids_of(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& p : tokenizer_.tokenize(text)) ids.push_back(p.id);
  return ids;
}

VectorXd TinyBackend::seq_features(std::span<const int> ids, std::size_t focus,
                                   SeqCache* cache, bool global) const {
  const auto d = static_cast<Eigen::Index>(config_.embedding_dim);
  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto& E = params_[TinyParameters::kEmbeddings];
  VectorXd x = VectorXd::Zero(2 * d);
  if (n == 0 || (n == 1 && focus == 0)) {
    if (cache) *cache = {};
    return x;
  }
  MatrixXd windows = MatrixXd::Zero(n, kConvWidth * d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < kConvWidth; ++k) {
      Eigen::Index j = i + k - kConvHalf;
      if (j >= 0 && j < n) windows.row(i).segment(k * d, d) = E.row(ids[j]);
    }
  MatrixXd act = ((windows * params_[TinyParameters::kCtxConv].transpose()).rowwise() +
                  params_[TinyParameters::kCtxConvBias].col(0).transpose())
                     .array()
                     .tanh();
  MatrixXd ctx = act;
  for (Eigen::Index i = 0; i < n; ++i) ctx.row(i) += E.row(ids[i]);

  const auto f = static_cast<Eigen::Index>(focus);
  VectorXd local = VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != f) local(i) = global ? 1.0 : std::exp(-std::abs(double(i - f)) / config_.locality);
  local /= local.sum();
  VectorXd q = ctx.transpose() * local;

  const double scale = 1.0 / std::sqrt(double(d));
  VectorXd scores = ctx * q * scale;
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != f) top = std::max(top, scores(i));
  VectorXd attn = VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != f) attn(i) = std::exp(scores(i) - top);
  attn /= attn.sum();

  x.head(d) = q;
  x.tail(d) = ctx.transpose() * attn;
  if (cache)
    *cache = {{ids.begin(), ids.end()}, focus, std::move(windows), std::move(act),
              std::move(ctx), std::move(local), std::move(attn), std::move(q)};
  return x;
}

void TinyBackend::seq_backward(const SeqCache& cache, const VectorXd& dx,
                               TinyParameters& grad) const {
  if (cache.ids.empty()) return;
  const auto d = static_cast<Eigen::Index>(config_.embedding_dim);
  const auto n = static_cast<Eigen::Index>(cache.ids.size());
  const double scale = 1.0 / std::sqrt(double(d));
  const VectorXd dq_direct = dx.head(d);
  const VectorXd dread = dx.tail(d);

  // read = sum a_i c_i, a = softmax(c_i.q * scale) over i != focus
  MatrixXd dctx = cache.attn * dread.transpose();
  VectorXd g = cache.ctx * dread;
  double mean_g = cache.attn.dot(g);
  VectorXd ds = cache.attn.cwiseProduct((g.array() - mean_g).matrix()) * scale;
  dctx += ds * cache.query.transpose();
  VectorXd dq = dq_direct + cache.ctx.transpose() * ds;
  dctx += cache.local * dq.transpose();

  MatrixXd dz = dctx.array() * (1.0 - cache.act.array().square());
  grad[TinyParameters::kCtxConv] += dz.transpose() * cache.windows;
  grad[TinyParameters::kCtxConvBias].col(0) += dz.colwise().sum().transpose();
  MatrixXd dwin = dz * params_[TinyParameters::kCtxConv];
  auto& gE = grad[TinyParameters::kEmbeddings];
  for (Eigen::Index i = 0; i < n; ++i) {
    gE.row(cache.ids[i]) += dctx.row(i);
    for (Eigen::Index k = 0; k < kConvWidth; ++k) {
      Eigen::Index j = i + k - kConvHalf;
      if (j >= 0 && j < n) gE.row(cache.ids[j]) += dwin.row(i).segment(k * d, d);
    }
  }
}

VectorXd TinyBackend::pair_features(std::span<const int> a, std::span<const int> b,
                                    PairCache* cache) const {
  const auto d = static_cast<Eigen::Index>(config_.embedding_dim);
  const auto& E = params_[TinyParameters::kEmbeddings];
  auto pool = [&](std::span<const int> ids) {
    VectorXd m = VectorXd::Zero(d);
    for (int id : ids) m += E.row(id).transpose();
    if (!ids.empty()) m /= double(ids.size());
    return m;
  };
  VectorXd u = pool(a), v = pool(b);
  VectorXd x(4 * d);
  x << u, v, u.cwiseProduct(v), (u - v).cwiseAbs();
  if (cache) *cache = {{a.begin(), a.end()}, {b.begin(), b.end()}, u, v};
  return x;
}

void TinyBackend::pair_backward(const PairCache& cache, const VectorXd& dx,
                                TinyParameters& grad) const {
  const auto d = static_cast<Eigen::Index>(config_.embedding_dim);
  VectorXd sign = (cache.u - cache.v).unaryExpr([](double t) {
    return t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0);
  });
  VectorXd du = dx.segment(0, d) + dx.segment(2 * d, d).cwiseProduct(cache.v) +
                dx.segment(3 * d, d).cwiseProduct(sign);
  VectorXd dv = dx.segment(d, d) + dx.segment(2 * d, d).cwiseProduct(cache.u) -
                dx.segment(3 * d, d).cwiseProduct(sign);
  auto& gE = grad[TinyParameters::kEmbeddings];
  for (int id : cache.a) gE.row(id) += (du / double(cache.a.size())).transpose();
  for (int id : cache.b) gE.row(id) += (dv / double(cache.b.size())).transpose();
}

std::vector<int> TinyBackend::lm_input(std::string_view text, std::size_t* focus,
                                       bool cloze) const {
  if (cloze && count_masks(text) != 1)
    throw BackendError("mask_fill needs exactly one [MASK], got " +
                       std::to_string(count_masks(text)));
  auto pieces = tokenizer_.tokenize(text);
  std::size_t protect = 0;
  if (cloze) {
    for (std::size_t i = 0; i < pieces.size(); ++i)
      if (pieces[i].id == WordPieceTokenizer::kMask) protect = pieces.size() - i;
  }
  pieces = truncate_left(std::move(pieces), config_.max_length, protect);
  std::vector<int> ids;
  for (const auto& p : pieces) ids.push_back(p.id);
  if (cloze) {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == WordPieceTokenizer::kMask) *focus = i;
  } else {
    *focus = ids.size();
  }
  return ids;
}

std::pair<std::vector<int>, std::vector<int>> TinyBackend::pair_input(
    std::string_view first, std::string_view second) const {
  auto b = tokenizer_.tokenize(second);
  if (b.size() > config_.max_length)
    throw BackendError("second segment exceeds the length budget");
  auto a = truncate_left(tokenizer_.tokenize(first), config_.max_length - b.size());
  std::vector<int> ia, ib;
  for (const auto& p : a) ia.push_back(p.id);
  for (const auto& p : b) ib.push_back(p.id);
  return {ia, ib};
}

std::vector<int> TinyBackend::cls_input(std::string_view text, std::string_view aspect) const {
  auto b = tokenizer_.tokenize(aspect);
  if (b.size() + 2 > config_.max_length) throw BackendError("aspect exceeds the length budget");
  auto a = truncate_left(tokenizer_.tokenize(text), config_.max_length - b.size() - 2);
  std::vector<int> ids = {WordPieceTokenizer::kCls};
  for (const auto& p : a) ids.push_back(p.id);
  ids.push_back(WordPieceTokenizer::kSep);
  for (const auto& p : b) ids.push_back(p.id);
  return ids;
}

VectorXd TinyBackend::lm_logits(std::span<const int> ids, std::size_t focus) const {
  VectorXd x = seq_features(ids, focus, nullptr);
  VectorXd h = (params_[TinyParameters::kLmHidden] * x +
                params_[TinyParameters::kLmHiddenBias].col(0))
                   .array()
                   .tanh();
  return params_[TinyParameters::kLmOutput] * h + params_[TinyParameters::kLmOutputBias].col(0);
}

TokenDistribution TinyBackend::distribution(const VectorXd& logits,
                                            std::span<const std::string> candidates) const {
  const double m = logits.maxCoeff();
  VectorXd p = (logits.array() - m).exp();
  p /= p.sum();
  TokenDistribution out;
  if (candidates.empty()) {
    for (Eigen::Index i = 0; i < p.size(); ++i)
      out.entries[tokenizer_.token(static_cast<int>(i))] += p(i);
    return out;
  }
  out.restricted = true;
  for (const auto& c : candidates) out.entries[c] = p(single_id(c));
  return out;
}

TokenDistribution TinyBackend::mask_fill(std::string_view text_with_mask,
                                         std::span<const std::string> candidates) {
  if (descriptor_.family != BackendFamily::masked_lm)
    throw BackendError("mask_fill needs a masked_lm backend");
  std::size_t focus = 0;
  auto ids = lm_input(text_with_mask, &focus, true);
  return distribution(lm_logits(ids, focus), candidates);
}

TokenDistribution TinyBackend::next_token(std::string_view prefix,
                                          std::span<const std::string> candidates) {
  if (descriptor_.family != BackendFamily::causal_lm)
    throw BackendError("next_token needs a causal_lm backend");
  if (count_masks(prefix) != 0) throw BackendError("next_token prefix contains [MASK]");
  std::size_t focus = 0;
  auto ids = lm_input(prefix, &focus, false);
  return distribution(lm_logits(ids, focus), candidates);
}

Eigen::Vector3d TinyBackend::pair_head(const VectorXd& x, VectorXd* hidden) const {
  VectorXd h = (params_[TinyParameters::kPairHidden] * x +
                params_[TinyParameters::kPairHiddenBias].col(0))
                   .array()
                   .tanh();
  Eigen::Vector3d o = params_[TinyParameters::kPairOutput] * h +
                      params_[TinyParameters::kPairOutputBias].col(0);
  if (hidden) *hidden = std::move(h);
  return o;
}

void TinyBackend::pair_head_backward(const VectorXd& x, const VectorXd& hidden,
                                     const Eigen::Vector3d& dlogits, TinyParameters& grad,
                                     VectorXd* dx) const {
  grad[TinyParameters::kPairOutput] += dlogits * hidden.transpose();
  grad[TinyParameters::kPairOutputBias].col(0) += dlogits;
  VectorXd dh = params_[TinyParameters::kPairOutput].transpose() * dlogits;
  VectorXd dz = dh.cwiseProduct((1.0 - hidden.array().square()).matrix());
  grad[TinyParameters::kPairHidden] += dz * x.transpose();
  grad[TinyParameters::kPairHiddenBias].col(0) += dz;
  *dx = params_[TinyParameters::kPairHidden].transpose() * dz;
}

NliLogits TinyBackend::nli_score(std::string_view premise, std::string_view hypothesis) {
  if (descriptor_.family != BackendFamily::nli)
    throw BackendError("nli_score needs an nli backend");
  if (premise.empty() || hypothesis.empty())
    throw BackendError("nli_score needs a non-empty premise and hypothesis");
  auto [a, b] = pair_input(premise, hypothesis);
  Eigen::Vector3d o = pair_head(pair_features(a, b, nullptr), nullptr);
  return {o(0), o(1), o(2)};
}

PairLogits TinyBackend::pair_classify(std::string_view text, std::string_view aspect) {
  if (descriptor_.family != BackendFamily::pair_classifier)
    throw BackendError("pair_classify needs a pair_classifier backend");
  if (text.empty() || aspect.empty())
    throw BackendError("pair_classify needs a non-empty text and aspect");
  Eigen::Vector3d o;
  if (descriptor_.readout == PairReadout::nsp) {
    auto [a, b] = pair_input(text, aspect);
    o = pair_head(pair_features(a, b, nullptr), nullptr);
  } else {
    auto ids = cls_input(text, aspect);
    VectorXd x = seq_features(ids, 0, nullptr, true);
    VectorXd h = (params_[TinyParameters::kLmHidden] * x +
                  params_[TinyParameters::kLmHiddenBias].col(0))
                     .array()
                     .tanh();
    o = params_[TinyParameters::kPairOutput] * h + params_[TinyParameters::kPairOutputBias].col(0);
  }
  return {{o(0), o(1), o(2)}};
}

namespace {

// Softmax cross-entropy over a small logit vector; returns the loss and
// writes p - onehot into dlogits.
double softmax_xent(const VectorXd& logits, Eigen::Index target, VectorXd* dlogits) {
  const double m = logits.maxCoeff();
  VectorXd p = (logits.array() - m).exp();
  const double z = p.sum();
  p /= z;
  if (dlogits) {
    *dlogits = p;
    (*dlogits)(target) -= 1.0;
  }
  return -(logits(target) - m - std::log(z));
}

}  // namespace

double TinyBackend::label_word_loss(const LabelWordInstance& x, TinyParameters* grad) const {
  bool cloze = x.mode == PromptMode::cloze;
  std::size_t focus = 0;
  auto ids = lm_input(x.text, &focus, cloze);
  std::array<int, 3> label_ids{};
  for (std::size_t k = 0; k < 3; ++k)
    label_ids[k] = single_id(is_single_item(x.label_words[k]) ? x.label_words[k]
                                                             : first_item(x.label_words[k]));
  SeqCache cache;
  VectorXd feats = seq_features(ids, focus, grad ? &cache : nullptr);
  const auto& W1 = params_[TinyParameters::kLmHidden];
  const auto& Wo = params_[TinyParameters::kLmOutput];
  VectorXd h = (W1 * feats + params_[TinyParameters::kLmHiddenBias].col(0)).array().tanh();
  VectorXd logits(3);
  for (std::size_t k = 0; k < 3; ++k)
    logits(k) = Wo.row(label_ids[k]).dot(h) + params_[TinyParameters::kLmOutputBias](label_ids[k], 0);
  VectorXd dl;
  double loss = softmax_xent(logits, static_cast<Eigen::Index>(x.target), grad ? &dl : nullptr);
  if (!grad) return loss;
  VectorXd dh = VectorXd::Zero(h.size());
  for (std::size_t k = 0; k < 3; ++k) {
    (*grad)[TinyParameters::kLmOutput].row(label_ids[k]) += dl(k) * h.transpose();
    (*grad)[TinyParameters::kLmOutputBias](label_ids[k], 0) += dl(k);
    dh += dl(k) * Wo.row(label_ids[k]).transpose();
  }
  VectorXd dz = dh.cwiseProduct((1.0 - h.array().square()).matrix());
  (*grad)[TinyParameters::kLmHidden] += dz * feats.transpose();
  (*grad)[TinyParameters::kLmHiddenBias].col(0) += dz;
  seq_backward(cache, W1.transpose() * dz, *grad);
  return loss;
}

double TinyBackend::nli_loss(const NliInstance& x, TinyParameters* grad) const {
  auto [pa, pb] = pair_input(x.premise, x.positive_hypothesis);
  auto [na, nb] = pair_input(x.premise, x.negative_hypothesis);
  PairCache pc, nc;
  VectorXd px = pair_features(pa, pb, &pc), nx = pair_features(na, nb, &nc);
  VectorXd ph, nh;
  Eigen::Vector3d po = pair_head(px, &ph), no = pair_head(nx, &nh);
  auto s = combine_nli_logits({po(0), po(1), po(2)}, {no(0), no(1), no(2)});
  VectorXd logits(3);
  logits << s[0], s[1], s[2];
  VectorXd ds;
  double loss = softmax_xent(logits, static_cast<Eigen::Index>(index_of(x.target)),
                             grad ? &ds : nullptr);
  if (!grad) return loss;
  Eigen::Vector3d dpo(ds(0), 0.5 * ds(2), 0.0), dno(ds(1), 0.5 * ds(2), 0.0);
  VectorXd dpx, dnx;
  pair_head_backward(px, ph, dpo, *grad, &dpx);
  pair_head_backward(nx, nh, dno, *grad, &dnx);
  pair_backward(pc, dpx, *grad);
  pair_backward(nc, dnx, *grad);
  return loss;
}

double TinyBackend::pair_loss(const PairInstance& x, TinyParameters* grad) const {
  const auto target = static_cast<Eigen::Index>(index_of(x.target));
  if (descriptor_.readout == PairReadout::nsp) {
    auto [a, b] = pair_input(x.text, x.aspect);
    PairCache cache;
    VectorXd feats = pair_features(a, b, &cache);
    VectorXd h;
    VectorXd o = pair_head(feats, &h);
    VectorXd dl;
    double loss = softmax_xent(o, target, grad ? &dl : nullptr);
    if (!grad) return loss;
    VectorXd dx;
    pair_head_backward(feats, h, Eigen::Vector3d(dl), *grad, &dx);
    pair_backward(cache, dx, *grad);
    return loss;
  }
  auto ids = cls_input(x.text, x.aspect);
  SeqCache cache;
  VectorXd feats = seq_features(ids, 0, grad ? &cache : nullptr, true);
  const auto& W1 = params_[TinyParameters::kLmHidden];
  const auto& Wc = params_[TinyParameters::kPairOutput];
  VectorXd h = (W1 * feats + params_[TinyParameters::kLmHiddenBias].col(0)).array().tanh();
  VectorXd o = Wc * h + params_[TinyParameters::kPairOutputBias].col(0);
  VectorXd dl;
  double loss = softmax_xent(o, target, grad ? &dl : nullptr);
  if (!grad) return loss;
  (*grad)[TinyParameters::kPairOutput] += dl * h.transpose();
  (*grad)[TinyParameters::kPairOutputBias].col(0) += dl;
  VectorXd dz = (Wc.transpose() * dl).cwiseProduct((1.0 - h.array().square()).matrix());
  (*grad)[TinyParameters::kLmHidden] += dz * feats.transpose();
  (*grad)[TinyParameters::kLmHiddenBias].col(0) += dz;
  seq_backward(cache, W1.transpose() * dz, *grad);
  return loss;
}

double TinyBackend::token_loss(std::span<const int> all_ids, std::span<const int> all_targets,
                               bool causal, TinyParameters* grad) const {
  if (all_ids.size() != all_targets.size())
    throw BackendError("token instance has mismatched input and target lengths");
  const auto V = static_cast<int>(tokenizer_.size());
  std::size_t start = all_ids.size() > config_.max_length ? all_ids.size() - config_.max_length : 0;
  auto ids = all_ids.subspan(start);
  auto targets = all_targets.subspan(start);
  for (int id : ids)
    if (id < 0 || id >= V) throw BackendError("token id out of range");

  const auto& W1 = params_[TinyParameters::kLmHidden];
  const auto& Wo = params_[TinyParameters::kLmOutput];
  std::size_t scored = 0;
  double total = 0.0;
  std::vector<std::size_t> positions;
  for (std::size_t p = 0; p < ids.size(); ++p)
    if (targets[p] >= 0) positions.push_back(p);
  if (positions.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double scale = 1.0 / positions.size();
  for (std::size_t p : positions) {
    if (targets[p] >= V) throw BackendError("target id out of range");
    auto context = causal ? ids.subspan(0, p + 1) : ids;
    std::size_t focus = causal ? p + 1 : p;
    SeqCache cache;
    VectorXd feats = seq_features(context, focus, grad ? &cache : nullptr);
    VectorXd h = (W1 * feats + params_[TinyParameters::kLmHiddenBias].col(0)).array().tanh();
    VectorXd logits = Wo * h + params_[TinyParameters::kLmOutputBias].col(0);
    VectorXd dl;
    total += softmax_xent(logits, targets[p], grad ? &dl : nullptr);
    ++scored;
    if (!grad) continue;
    dl *= scale;
    (*grad)[TinyParameters::kLmOutput] += dl * h.transpose();
    (*grad)[TinyParameters::kLmOutputBias].col(0) += dl;
    VectorXd dz = (Wo.transpose() * dl).cwiseProduct((1.0 - h.array().square()).matrix());
    (*grad)[TinyParameters::kLmHidden] += dz * feats.transpose();
    (*grad)[TinyParameters::kLmHiddenBias].col(0) += dz;
    seq_backward(cache, W1.transpose() * dz, *grad);
  }
  return total / scored;
}

double TinyBackend::loss_and_gradient(const TrainingInstance& instance,
                                      TinyParameters* grad) const {
  const auto family = descriptor_.family;
  auto require = [&](BackendFamily f, const char* what) {
    if (family != f)
      throw BackendError(std::string(what) + " instances need a " + std::string(to_string(f)) +
                         " backend, this one is " + std::string(to_string(family)));
  };
  if (const auto* x = std::get_if<LabelWordInstance>(&instance)) {
    require(x->mode == PromptMode::cloze ? BackendFamily::masked_lm : BackendFamily::causal_lm,
            "label-word");
    return label_word_loss(*x, grad);
  }
  if (const auto* x = std::get_if<NliInstance>(&instance)) {
    require(BackendFamily::nli, "NLI");
    return nli_loss(*x, grad);
  }
  if (const auto* x = std::get_if<PairInstance>(&instance)) {
    require(BackendFamily::pair_classifier, "pair");
    return pair_loss(*x, grad);
  }
  if (const auto* x = std::get_if<MaskedLmInstance>(&instance)) {
    require(BackendFamily::masked_lm, "masked-LM");
    return token_loss(x->input_ids, x->target_ids, false, grad);
  }
  const auto& x = std::get<CausalLmInstance>(instance);
  require(BackendFamily::causal_lm, "causal-LM");
  return token_loss(x.input_ids, x.target_ids, true, grad);
}

FitReport TinyBackend::fit(std::span<const TrainingInstance> instances,
                           const TrainingSchedule& schedule) {
  if (schedule.epochs == 0 || schedule.batch_size == 0)
    throw BackendError("training schedule needs epochs and batch_size > 0");
  FitReport report;
  if (instances.empty()) return report;

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  TinyParameters m = params_.zeros_like(), v = params_.zeros_like();
  bool saw_task = false;
  std::size_t planned = schedule.epochs * ((instances.size() + schedule.batch_size - 1) /
                                           schedule.batch_size);
  if (schedule.max_steps) planned = std::min(planned, *schedule.max_steps);

  for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
    auto order = epoch_order(instances.size(), schedule.seed, epoch);
    double epoch_total = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += schedule.batch_size) {
      if (schedule.max_steps && report.steps >= *schedule.max_steps) break;
      std::size_t end = std::min(order.size(), begin + schedule.batch_size);
      TinyParameters grad = params_.zeros_like();
      std::size_t in_batch = 0;
      for (std::size_t k = begin; k < end; ++k) {
        const auto& inst = instances[order[k]];
        double loss = loss_and_gradient(inst, &grad);
        if (std::isnan(loss) && (std::holds_alternative<MaskedLmInstance>(inst) ||
                                 std::holds_alternative<CausalLmInstance>(inst)))
          continue;  // nothing scored
        if (!std::isfinite(loss))
          throw BackendError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(report.steps) + ", instance " +
                             std::to_string(order[k]) + " (" +
                             std::string(to_string(loss_kind(inst))) + ")");
        if (inst.index() <= 2) saw_task = true;
        epoch_total += loss;
        ++epoch_count;
        ++in_batch;
      }
      if (in_batch == 0) continue;
      const double inv = 1.0 / in_batch;
      for (auto& g : grad.blocks) g *= inv;
      if (config_.grad_clip > 0) {
        double norm = std::sqrt(grad.squared_norm());
        if (!std::isfinite(norm)) throw BackendError("non-finite gradient");
        if (norm > config_.grad_clip)
          for (auto& g : grad.blocks) g *= config_.grad_clip / norm;
      }
      const double lr =
          schedule.linear_decay
              ? schedule.learning_rate * (1.0 - double(report.steps) / double(planned))
              : schedule.learning_rate;
      ++report.steps;
      const double t = static_cast<double>(report.steps);
      const double c1 = 1.0 - std::pow(beta1, t), c2 = 1.0 - std::pow(beta2, t);
      for (std::size_t b = 0; b < TinyParameters::kNumBlocks; ++b) {
        m.blocks[b] = beta1 * m.blocks[b] + (1 - beta1) * grad.blocks[b];
        v.blocks[b] = beta2 * v.blocks[b] + (1 - beta2) * grad.blocks[b].cwiseAbs2();
        auto step = (m.blocks[b].array() / c1) / ((v.blocks[b].array() / c2).sqrt() + eps);
        if (schedule.weight_decay > 0)
          params_.blocks[b] *= (1.0 - lr * schedule.weight_decay);
        params_.blocks[b].array() -= lr * step;
      }
    }
    if (epoch_count > 0) report.epoch_losses.push_back(epoch_total / epoch_count);
    if (schedule.max_steps && report.steps >= *schedule.max_steps) break;
  }
  if (!report.epoch_losses.empty()) {
    report.initial_loss = report.epoch_losses.front();
    report.final_loss = report.epoch_losses.back();
    report.min_loss = *std::min_element(report.epoch_losses.begin(), report.epoch_losses.end());
  }
  if (saw_task) task_trained_ = true;
  return report;
}

}  // namespace atsc
