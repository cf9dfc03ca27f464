// Copyright 2026 The DONUT Authors.
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

#include "donut/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "donut/checkpoint.hpp"
#include "donut/corpus.hpp"
#include "donut/errors.hpp"
#include "donut/io.hpp"
#include "donut/numeric.hpp"

namespace donut {

using nn::Tensor2;

AeConfig AeConfig::paper() { return AeConfig{}; }

AeConfig AeConfig::desk() {
  AeConfig c;
  c.hidden_dim = 64;
  c.epochs = 100;
  c.batch = 64;
  return c;
}

void AeConfig::validate() const {
  if (embedding_dim < 1 || hidden_dim < 1 || epochs < 0 || batch < 1 || max_length < 2)
    throw ConfigError("autoencoder sizes must be positive");
  if (embedding_dim >= max_length) throw ConfigError("autoencoder embedding must be smaller than max_length");
  if (!(lr > 0.0) || weight_decay < 0.0 || dropout < 0.0 || dropout >= 1.0)
    throw ConfigError("autoencoder learning rate, decay or dropout out of range");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0)
    throw ConfigError("autoencoder validation fraction must lie in [0, 1)");
}

nlohmann::json AeConfig::to_json() const {
  return {{"embedding_dim", embedding_dim}, {"hidden_dim", hidden_dim},
          {"epochs", epochs},              {"batch", batch},
          {"lr", lr},                      {"weight_decay", weight_decay},
          {"dropout", dropout},            {"max_length", max_length},
          {"clip_norm", clip_norm},        {"validation_fraction", validation_fraction},
          {"patience", patience}};
}

AeConfig AeConfig::from_json(const nlohmann::json& j, AeConfig c) {
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.dropout = j.value("dropout", c.dropout);
  c.max_length = j.value("max_length", c.max_length);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.patience = j.value("patience", c.patience);
  c.validate();
  return c;
}

Preprocessed preprocess(std::span<const double> series, int max_length) {
  const std::size_t keep = std::min(series.size(), static_cast<std::size_t>(std::max(max_length, 1)));
  auto tail = series.subspan(series.size() - keep);
  Preprocessed p;
  p.mean = stats::mean(tail);
  p.std = std::max(std::sqrt(stats::variance(tail)), kStdFloor);
  p.values.resize(keep);
  for (std::size_t i = 0; i < keep; ++i) p.values[i] = (tail[i] - p.mean) / p.std;
  return p;
}

// ---- model --------------------------------------------------------------------

struct Autoencoder::Batch {
  int steps = 0;
  int size = 0;
  std::vector<int> lengths;
  Tensor2 x;     // (T*B) x 1, zero padded
  Tensor2 mask;  // (T*B) x 1
  double tokens = 0.0;
};

Autoencoder::Autoencoder(const AeConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      seed_(seed),
      enc1_("encoder.lstm1", 1, cfg.hidden_dim),
      enc2_("encoder.lstm2", cfg.hidden_dim, cfg.hidden_dim),
      dec1_("decoder.lstm1", cfg.embedding_dim, cfg.hidden_dim),
      dec2_("decoder.lstm2", cfg.hidden_dim, cfg.hidden_dim),
      bottleneck_("encoder.embedding", cfg.hidden_dim, cfg.embedding_dim, nn::Activation::Identity),
      readout_("decoder.readout", cfg.hidden_dim, 1, nn::Activation::Identity),
      enc_drop_(cfg.dropout),
      dec_drop_(cfg.dropout) {
  cfg_.validate();
  Rng rng(derive_seed(seed, 0xAE));
  enc1_.init(rng);
  enc2_.init(rng);
  bottleneck_.init(rng);
  dec1_.init(rng);
  dec2_.init(rng);
  readout_.init(rng);
}

nn::ParamList Autoencoder::params() {
  nn::ParamList out;
  for (auto* group : {&enc1_, &enc2_}) {
    auto p = group->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  for (auto* p : bottleneck_.params()) out.push_back(p);
  for (auto* group : {&dec1_, &dec2_}) {
    auto p = group->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  for (auto* p : readout_.params()) out.push_back(p);
  return out;
}

Autoencoder::Batch Autoencoder::make_batch(const std::vector<const std::vector<double>*>& seqs) {
  Batch b;
  b.size = static_cast<int>(seqs.size());
  for (const auto* s : seqs) {
    b.lengths.push_back(static_cast<int>(s->size()));
    b.steps = std::max(b.steps, static_cast<int>(s->size()));
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(b.steps) * b.size;
  b.x = Tensor2::Zero(rows, 1);
  b.mask = Tensor2::Zero(rows, 1);
  for (int j = 0; j < b.size; ++j) {
    const auto& s = *seqs[j];
    for (std::size_t t = 0; t < s.size(); ++t) {
      b.x(static_cast<Eigen::Index>(t) * b.size + j, 0) = s[t];
      b.mask(static_cast<Eigen::Index>(t) * b.size + j, 0) = 1.0;
    }
    b.tokens += static_cast<double>(s.size());
  }
  return b;
}

Tensor2 Autoencoder::encode_batch(const Batch& b) const {
  const Tensor2 h1 = enc1_.apply(b.x, b.steps, b.size);
  const Tensor2 h2 = enc2_.apply(h1, b.steps, b.size);
  Tensor2 last(b.size, cfg_.hidden_dim);
  for (int j = 0; j < b.size; ++j) last.row(j) = h2.row(static_cast<Eigen::Index>(b.lengths[j] - 1) * b.size + j);
  return bottleneck_.apply(last);
}

Tensor2 Autoencoder::decode_batch(const Tensor2& emb, int steps) const {
  const int B = static_cast<int>(emb.rows());
  Tensor2 rep(static_cast<Eigen::Index>(steps) * B, emb.cols());
  for (int t = 0; t < steps; ++t) rep.middleRows(static_cast<Eigen::Index>(t) * B, B) = emb;
  const Tensor2 h3 = dec1_.apply(rep, steps, B);
  const Tensor2 h4 = dec2_.apply(h3, steps, B);
  return readout_.apply(h4);
}

void Autoencoder::require_trained() const {
  if (!trained_) throw UntrainedModel();
}

std::vector<double> Autoencoder::encode(std::span<const double> series) const {
  require_trained();
  const auto p = preprocess(series, cfg_.max_length);
  const Batch b = make_batch({&p.values});
  const Tensor2 e = encode_batch(b);
  return {e.data(), e.data() + e.size()};
}

std::vector<std::vector<double>> Autoencoder::encode_many(const std::vector<std::vector<double>>& series) const {
  require_trained();
  std::vector<std::vector<double>> pre(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) pre[i] = preprocess(series[i], cfg_.max_length).values;
  std::vector<std::size_t> order(series.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pre[a].size() < pre[b].size(); });
  std::vector<std::vector<double>> out(series.size());
  constexpr std::size_t chunk = 128;
  for (std::size_t start = 0; start < order.size(); start += chunk) {
    std::vector<const std::vector<double>*> seqs;
    const std::size_t stop = std::min(order.size(), start + chunk);
    for (std::size_t k = start; k < stop; ++k) seqs.push_back(&pre[order[k]]);
    const Tensor2 e = encode_batch(make_batch(seqs));
    for (std::size_t k = start; k < stop; ++k) {
      const auto r = e.row(static_cast<Eigen::Index>(k - start));
      out[order[k]].assign(r.data(), r.data() + r.size());
    }
  }
  return out;
}

std::vector<double> Autoencoder::reconstruct(std::span<const double> series) const {
  require_trained();
  const auto p = preprocess(series, cfg_.max_length);
  const Batch b = make_batch({&p.values});
  const Tensor2 y = decode_batch(encode_batch(b), b.steps);
  return {y.data(), y.data() + y.size()};
}

double Autoencoder::batch_loss(const std::vector<const std::vector<double>*>& seqs, bool training, bool backward,
                               Rng& rng) {
  const Batch b = make_batch(seqs);
  const int T = b.steps, B = b.size, H = cfg_.hidden_dim;

  const Tensor2& h1 = enc1_.forward(b.x, T, B);
  const Tensor2 d1 = enc_drop_.forward(h1, training, rng);
  const Tensor2& h2 = enc2_.forward(d1, T, B);
  Tensor2 last(B, H);
  for (int j = 0; j < B; ++j) last.row(j) = h2.row(static_cast<Eigen::Index>(b.lengths[j] - 1) * B + j);
  const Tensor2 emb = bottleneck_.forward(last);
  Tensor2 rep(static_cast<Eigen::Index>(T) * B, emb.cols());
  for (int t = 0; t < T; ++t) rep.middleRows(static_cast<Eigen::Index>(t) * B, B) = emb;
  const Tensor2& h3 = dec1_.forward(rep, T, B);
  const Tensor2 d3 = dec_drop_.forward(h3, training, rng);
  const Tensor2& h4 = dec2_.forward(d3, T, B);
  const Tensor2& y = readout_.forward(h4);

  const Tensor2 err = (y - b.x).cwiseProduct(b.mask);
  const double loss = err.squaredNorm() / b.tokens;
  if (!backward) return loss;

  const Tensor2 dy = err * (2.0 / b.tokens);
  const Tensor2 dh4 = readout_.backward(dy);
  const Tensor2 dd3 = dec2_.backward(dh4);
  const Tensor2 dh3 = dec_drop_.backward(dd3);
  const Tensor2 drep = dec1_.backward(dh3);
  Tensor2 demb = Tensor2::Zero(B, emb.cols());
  for (int t = 0; t < T; ++t) demb += drep.middleRows(static_cast<Eigen::Index>(t) * B, B);
  const Tensor2 dlast = bottleneck_.backward(demb);
  Tensor2 dh2 = Tensor2::Zero(static_cast<Eigen::Index>(T) * B, H);
  for (int j = 0; j < B; ++j) dh2.row(static_cast<Eigen::Index>(b.lengths[j] - 1) * B + j) = dlast.row(j);
  const Tensor2 dd1 = enc2_.backward(dh2);
  const Tensor2 dh1 = enc_drop_.backward(dd1);
  enc1_.backward(dh1);
  return loss;
}

nlohmann::json Autoencoder::to_json() const {
  auto* self = const_cast<Autoencoder*>(this);
  return {{"schema_version", nn::kCheckpointSchema},
          {"kind", "lstm_autoencoder"},
          {"config", cfg_.to_json()},
          {"seed", seed_},
          {"trained", trained_},
          {"layers", nn::params_to_json(self->params())}};
}

Autoencoder Autoencoder::from_json(const nlohmann::json& j) {
  if (j.value("kind", std::string()) != "lstm_autoencoder") throw ParseError("not an autoencoder checkpoint");
  const auto cfg = AeConfig::from_json(j.at("config"), AeConfig{});
  Autoencoder ae(cfg, j.value("seed", std::uint64_t{0}));
  nn::params_from_json(j.at("layers"), ae.params());
  ae.trained_ = j.value("trained", false);
  return ae;
}

// ---- training -----------------------------------------------------------------

namespace {

using SeqBatch = std::vector<const std::vector<double>*>;

// Length buckets: a shuffled order stably sorted by length, cut into
// batches, then the batch order shuffled.
std::vector<SeqBatch> bucket_batches(const std::vector<std::vector<double>>& pre, std::vector<std::size_t> ids,
                                     int batch, Rng* rng) {
  if (rng) rng->shuffle(ids);
  std::stable_sort(ids.begin(), ids.end(), [&](auto a, auto b) { return pre[a].size() < pre[b].size(); });
  std::vector<SeqBatch> out;
  for (std::size_t s = 0; s < ids.size(); s += static_cast<std::size_t>(batch)) {
    SeqBatch b;
    for (std::size_t k = s; k < std::min(ids.size(), s + static_cast<std::size_t>(batch)); ++k)
      b.push_back(&pre[ids[k]]);
    out.push_back(std::move(b));
  }
  if (rng) rng->shuffle(out);
  return out;
}

double token_count(const SeqBatch& b) {
  double n = 0.0;
  for (const auto* s : b) n += static_cast<double>(s->size());
  return n;
}

}  // namespace

AeTrainResult train_autoencoder(const std::vector<std::vector<double>>& series, const AeConfig& cfg,
                                std::uint64_t seed, const EpochCallback& on_epoch) {
  cfg.validate();
  if (series.size() < 2) throw ConfigError("autoencoder training needs at least two series");
  std::vector<std::vector<double>> pre(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) pre[i] = preprocess(series[i], cfg.max_length).values;

  std::vector<std::size_t> train_ids, val_ids;
  if (cfg.validation_fraction > 0.0) {
    std::tie(train_ids, val_ids) = partition_indices(series.size(), 1.0 - cfg.validation_fraction, derive_seed(seed, 2));
    if (val_ids.empty()) {
      val_ids.push_back(train_ids.back());
      train_ids.pop_back();
    }
  } else {
    train_ids.resize(series.size());
    std::iota(train_ids.begin(), train_ids.end(), std::size_t{0});
  }

  AeTrainResult result{Autoencoder(cfg, seed), {}};
  auto& model = result.model;
  auto params = model.params();
  nn::AdamW opt(params, {cfg.lr, cfg.weight_decay});
  Rng rng(derive_seed(seed, 1));
  const auto val_batches = bucket_batches(pre, val_ids, cfg.batch, nullptr);

  std::vector<nn::Tensor2> best;
  double best_val = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double sum = 0.0, tokens = 0.0;
    for (const auto& b : bucket_batches(pre, train_ids, cfg.batch, &rng)) {
      nn::zero_grads(params);
      const double loss = model.batch_loss(b, true, true, rng);
      if (!std::isfinite(loss))
        throw DivergenceDetected("autoencoder loss became non-finite at epoch " + std::to_string(epoch));
      if (cfg.clip_norm > 0.0) nn::clip_global_norm(params, cfg.clip_norm);
      opt.step(params);
      const double w = token_count(b);
      sum += loss * w;
      tokens += w;
    }
    const double train_loss = sum / tokens;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
    if (!val_batches.empty()) {
      double vs = 0.0, vt = 0.0;
      for (const auto& b : val_batches) {
        const double w = token_count(b);
        vs += model.batch_loss(b, false, false, rng) * w;
        vt += w;
      }
      val_loss = vs / vt;
    }
    result.history.train_loss.push_back(train_loss);
    result.history.validation_loss.push_back(val_loss);
    if (on_epoch) on_epoch(epoch, train_loss, val_loss);

    if (cfg.patience > 0 && std::isfinite(val_loss)) {
      if (val_loss < best_val) {
        best_val = val_loss;
        best.clear();
        for (auto* p : params) best.push_back(p->value);
      }
      const auto stop = nn::early_stop(result.history.validation_loss, cfg.patience);
      if (stop.stopped) {
        result.history.early_stopped = true;
        break;
      }
    }
  }
  if (!best.empty())
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best[k];
  const auto& track = val_batches.empty() ? result.history.train_loss : result.history.validation_loss;
  result.history.best_epoch = nn::early_stop(track, std::numeric_limits<int>::max()).best_epoch;
  model.mark_trained();
  return result;
}

double reconstruction_correlation(std::span<const double> reconstruction, std::span<const double> reference) {
  if (reconstruction.size() != reference.size())
    throw LengthMismatch("reconstruction and reference differ in length");
  return stats::pearson(reconstruction, reference);
}

std::string embeddings_csv(std::span<const std::string> ids, const std::vector<std::vector<double>>& embeddings) {
  std::string out = "id";
  const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().size();
  for (std::size_t k = 0; k < dim; ++k) out += ",lstm_" + std::to_string(k);
  out.push_back('\n');
  for (std::size_t r = 0; r < ids.size(); ++r) {
    out += ids[r];
    for (double v : embeddings[r]) {
      out.push_back(',');
      out += io::format_double(v);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace donut
