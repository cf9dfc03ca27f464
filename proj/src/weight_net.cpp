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

#include "donut/weight_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "donut/checkpoint.hpp"
#include "donut/errors.hpp"
#include "donut/metrics.hpp"

namespace donut {

using nn::Tensor2;

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out(kStatFeatureNames.begin(), kStatFeatureNames.end());
    for (std::size_t k = 0; k < kEmbeddingDim; ++k) out.push_back("lstm_" + std::to_string(k));
    out.push_back("period");
    out.push_back("type");
    return out;
  }();
  return names;
}

// ---- config -------------------------------------------------------------------

WeightNetConfig WeightNetConfig::paper() { return WeightNetConfig{}; }

WeightNetConfig WeightNetConfig::desk() {
  WeightNetConfig c;
  c.hidden_dim = 256;
  c.epochs = 60;
  c.batch = 64;
  return c;
}

void WeightNetConfig::validate() const {
  if (hidden_dim < 1 || epochs < 0 || batch < 1) throw ConfigError("weight net sizes must be positive");
  if (!(lr > 0.0) || weight_decay < 0.0 || dropout < 0.0 || dropout >= 1.0)
    throw ConfigError("weight net learning rate, decay or dropout out of range");
  if (validation_fraction <= 0.0 || validation_fraction >= 1.0)
    throw ConfigError("weight net validation fraction must lie in (0, 1)");
}

nlohmann::json WeightNetConfig::to_json() const {
  return {{"hidden_dim", hidden_dim}, {"epochs", epochs},   {"batch", batch},
          {"lr", lr},                 {"dropout", dropout}, {"weight_decay", weight_decay},
          {"validation_fraction", validation_fraction}};
}

WeightNetConfig WeightNetConfig::from_json(const nlohmann::json& j, WeightNetConfig c) {
  if (j.contains("hidden_layers") && j["hidden_layers"].get<int>() != 1)
    throw ConfigError("the weight net has exactly one hidden layer");
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.lr = j.value("lr", c.lr);
  c.dropout = j.value("dropout", c.dropout);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.validate();
  return c;
}

// ---- features -----------------------------------------------------------------

FeatureVector raw_features(const std::string& id, const StatFeatures* stat, const std::vector<double>* embedding,
                           PeriodKind period, SeriesType type) {
  if (!stat) throw MissingPart(id, "statistical");
  if (!embedding || embedding->size() != kEmbeddingDim) throw MissingPart(id, "embedding");
  FeatureVector f{};
  std::copy(stat->values.begin(), stat->values.end(), f.begin());
  std::copy(embedding->begin(), embedding->end(), f.begin() + kNumStatFeatures);
  f[kNumFeatures - 2] = static_cast<double>(static_cast<int>(period));
  f[kNumFeatures - 1] = static_cast<double>(static_cast<int>(type));
  return f;
}

Standardizer Standardizer::fit(std::span<const FeatureVector> rows) {
  Standardizer s;
  s.mean.assign(kNumFeatures, 0.0);
  s.std.assign(kNumFeatures, 1.0);
  if (rows.empty()) return s;
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : rows)
      if (std::isfinite(r[c])) {
        sum += r[c];
        ++count;
      }
    const double mu = count ? sum / static_cast<double>(count) : 0.0;
    double sq = 0.0;
    for (const auto& r : rows)
      if (std::isfinite(r[c])) sq += (r[c] - mu) * (r[c] - mu);
    s.mean[c] = mu;
    s.std[c] = count ? std::sqrt(sq / static_cast<double>(count)) : 1.0;
  }
  return s;
}

FeatureVector Standardizer::apply(const FeatureVector& x) const {
  if (mean.size() != kNumFeatures || std.size() != kNumFeatures)
    throw ShapeMismatch("standardizer has not been fitted");
  FeatureVector out{};
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    const double z = (x[c] - mean[c]) / std::max(std[c], 1e-8);
    out[c] = std::isfinite(z) ? z : 0.0;
  }
  return out;
}

nlohmann::json Standardizer::to_json() const { return {{"mean", mean}, {"std", std}}; }

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.std = j.at("std").get<std::vector<double>>();
  if (s.mean.size() != kNumFeatures || s.std.size() != kNumFeatures)
    throw ParseError("standardizer must hold " + std::to_string(kNumFeatures) + " columns");
  return s;
}

FeatureVector build_features(const std::string& id, const StatFeatures* stat, const std::vector<double>* embedding,
                             PeriodKind period, SeriesType type, const Standardizer& standardizer) {
  return standardizer.apply(raw_features(id, stat, embedding, period, type));
}

// ---- loss ---------------------------------------------------------------------

SeriesTarget make_target(const ForecastMatrix& forecasts, std::span<const double> train,
                         std::span<const double> test, int m) {
  if (static_cast<int>(test.size()) != forecasts.h)
    throw LengthMismatch("series '" + forecasts.id + "': test length differs from the forecast horizon");
  SeriesTarget t;
  t.forecasts = forecasts;
  t.actual.assign(test.begin(), test.end());
  // Short series, and series whose seasonal differences all vanish, fall
  // back to the lag-1 scale.
  const int lag = train.size() > static_cast<std::size_t>(m) ? m : 1;
  t.scale = metrics::mase_scale(train, lag);
  if (!(t.scale > 0.0) && lag > 1) t.scale = metrics::mase_scale(train, 1);
  if (!(t.scale > 0.0)) throw DegenerateScale();
  const auto n2 = metrics::naive2(train, m, forecasts.h);
  t.smape_naive2 = metrics::smape(test, n2);
  t.mase_naive2 = metrics::mase_with_scale(t.scale, test, n2);
  return t;
}

std::vector<double> combine(std::span<const double> w, const ForecastMatrix& b) {
  if (w.size() != kNumModels || b.b.size() != kNumModels * static_cast<std::size_t>(b.h))
    throw ShapeMismatch("combine: " + std::to_string(w.size()) + " weights for a " + std::to_string(kNumModels) +
                        "-model forecast matrix");
  std::vector<double> out(static_cast<std::size_t>(b.h), 0.0);
  for (std::size_t i = 0; i < kNumModels; ++i) {
    if (w[i] == 0.0) continue;
    const auto row = b.row(i);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += w[i] * row[t];
  }
  return out;
}

double series_owa(std::span<const double> forecast, const SeriesTarget& target) {
  metrics::SeriesScore s;
  s.smape = metrics::smape(target.actual, forecast);
  s.mase = metrics::mase_with_scale(target.scale, target.actual, forecast);
  s.smape_naive2 = target.smape_naive2;
  s.mase_naive2 = target.mase_naive2;
  return metrics::owa_single(s);
}

std::vector<double> series_owa_gradient(std::span<const double> forecast, const SeriesTarget& target) {
  const std::size_t h = target.actual.size();
  if (forecast.size() != h) throw LengthMismatch("forecast and actual differ in length");
  const double ks = 0.5 / std::max(target.smape_naive2, metrics::kOwaFloor) * 200.0 / static_cast<double>(h);
  const double km = 0.5 / std::max(target.mase_naive2, metrics::kOwaFloor) / (static_cast<double>(h) * target.scale);
  std::vector<double> g(h, 0.0);
  for (std::size_t t = 0; t < h; ++t) {
    const double y = target.actual[t], f = forecast[t];
    const double a = y - f;
    const double sa = a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
    const double sf = f > 0.0 ? 1.0 : (f < 0.0 ? -1.0 : 0.0);
    const double d = std::abs(y) + std::abs(f);
    if (d > 0.0) g[t] += ks * (-sa / d - std::abs(a) * sf / (d * d));
    g[t] += km * -sa;
  }
  return g;
}

// ---- network ------------------------------------------------------------------

WeightNet::WeightNet(const WeightNetConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      seed_(seed),
      hidden_("weightnet.hidden", static_cast<int>(kNumFeatures), cfg.hidden_dim, nn::Activation::Relu),
      drop_(cfg.dropout),
      output_("weightnet.output", cfg.hidden_dim, static_cast<int>(kNumModels), nn::Activation::Softmax) {
  cfg_.validate();
  Rng rng(derive_seed(seed, 0x3E7));
  hidden_.init(rng);
  // Zero output layer: the untrained net is the uniform average.
  output_.weight().value.setZero();
  output_.bias().value.setZero();
}

nn::ParamList WeightNet::params() {
  auto p = hidden_.params();
  for (auto* q : output_.params()) p.push_back(q);
  return p;
}

Tensor2 WeightNet::forward_batch(const Tensor2& x) const { return output_.apply(hidden_.apply(x)); }

SimplexWeights WeightNet::forward(const FeatureVector& f) const {
  Tensor2 x(1, static_cast<Eigen::Index>(kNumFeatures));
  for (std::size_t c = 0; c < kNumFeatures; ++c) x(0, static_cast<Eigen::Index>(c)) = f[c];
  const Tensor2 y = forward_batch(x);
  SimplexWeights w{};
  for (std::size_t i = 0; i < kNumModels; ++i) w[i] = y(0, static_cast<Eigen::Index>(i));
  return w;
}

double WeightNet::batch_loss(const Tensor2& x, std::span<const SeriesTarget* const> targets, bool training,
                             bool backward, Rng& rng) {
  if (static_cast<std::size_t>(x.rows()) != targets.size())
    throw ShapeMismatch("weight net batch: " + std::to_string(x.rows()) + " rows for " +
                        std::to_string(targets.size()) + " targets");
  const Tensor2& a = hidden_.forward(x);
  const Tensor2 d = drop_.forward(a, training, rng);
  const Tensor2& w = output_.forward(d);
  const double inv = 1.0 / static_cast<double>(targets.size());
  double loss = 0.0;
  Tensor2 dw = Tensor2::Zero(w.rows(), w.cols());
  for (std::size_t r = 0; r < targets.size(); ++r) {
    const auto& tgt = *targets[r];
    const auto row = w.row(static_cast<Eigen::Index>(r));
    const auto yhat = combine(std::span<const double>(row.data(), kNumModels), tgt.forecasts);
    loss += series_owa(yhat, tgt) * inv;
    if (!backward) continue;
    const auto g = series_owa_gradient(yhat, tgt);
    for (std::size_t i = 0; i < kNumModels; ++i) {
      const auto bi = tgt.forecasts.row(i);
      double s = 0.0;
      for (std::size_t t = 0; t < g.size(); ++t) s += g[t] * bi[t];
      dw(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = s * inv;
    }
  }
  if (backward) hidden_.backward(drop_.backward(output_.backward(dw)));
  return loss;
}

nlohmann::json WeightNet::to_json() const {
  auto* self = const_cast<WeightNet*>(this);
  return {{"schema_version", nn::kCheckpointSchema},
          {"kind", "weight_net"},
          {"config", cfg_.to_json()},
          {"seed", seed_},
          {"features", feature_names()},
          {"models", [] {
             std::vector<std::string> m;
             for (auto id : kAllModels) m.emplace_back(model_name(id));
             return m;
           }()},
          {"standardizer", standardizer_.to_json()},
          {"layers", nn::params_to_json(self->params())}};
}

WeightNet WeightNet::from_json(const nlohmann::json& j) {
  if (j.value("kind", std::string()) != "weight_net") throw ParseError("not a weight net checkpoint");
  WeightNet net(WeightNetConfig::from_json(j.at("config"), WeightNetConfig{}), j.value("seed", std::uint64_t{0}));
  nn::params_from_json(j.at("layers"), net.params());
  net.standardizer_ = Standardizer::from_json(j.at("standardizer"));
  return net;
}

// ---- training -----------------------------------------------------------------

namespace {

Tensor2 rows_matrix(std::span<const FeatureVector> rows, std::span<const std::size_t> ids) {
  Tensor2 x(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(kNumFeatures));
  for (std::size_t r = 0; r < ids.size(); ++r)
    for (std::size_t c = 0; c < kNumFeatures; ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[ids[r]][c];
  return x;
}

std::vector<SimplexWeights> predict_rows(const WeightNet& net, const Tensor2& x) {
  const Tensor2 y = net.forward_batch(x);
  std::vector<SimplexWeights> out(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index r = 0; r < y.rows(); ++r)
    for (std::size_t i = 0; i < kNumModels; ++i) out[static_cast<std::size_t>(r)][i] = y(r, static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace

OwaSummary evaluate_weights(std::span<const SimplexWeights> weights, std::span<const SeriesTarget* const> targets) {
  if (weights.size() != targets.size()) throw ShapeMismatch("one weight vector per target is required");
  std::vector<metrics::SeriesScore> scores;
  scores.reserve(targets.size());
  for (std::size_t r = 0; r < targets.size(); ++r) {
    const auto& t = *targets[r];
    const auto yhat = combine(weights[r], t.forecasts);
    scores.push_back({metrics::smape(t.actual, yhat), metrics::mase_with_scale(t.scale, t.actual, yhat),
                      t.smape_naive2, t.mase_naive2});
  }
  return {metrics::owa(scores, metrics::Aggregation::PerSeries).owa,
          metrics::owa(scores, metrics::Aggregation::Pooled).owa};
}

WeightNetTrainResult train_weight_net(std::span<const FeatureVector> raw_rows, std::span<const SeriesTarget> targets,
                                      const WeightNetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (raw_rows.size() != targets.size()) throw ShapeMismatch("one feature row per target is required");
  if (raw_rows.size() < 2) throw ConfigError("weight net training needs at least two series");

  WeightNetTrainResult result{WeightNet(cfg, seed), {}};
  auto& net = result.net;
  auto& hist = result.history;
  std::tie(hist.train_rows, hist.validation_rows) =
      partition_indices(raw_rows.size(), 1.0 - cfg.validation_fraction, derive_seed(seed, 2));
  if (hist.validation_rows.empty()) {
    hist.validation_rows.push_back(hist.train_rows.back());
    hist.train_rows.pop_back();
  }

  std::vector<FeatureVector> train_raw;
  for (auto r : hist.train_rows) train_raw.push_back(raw_rows[r]);
  net.set_standardizer(Standardizer::fit(train_raw));
  std::vector<FeatureVector> z(raw_rows.size());
  for (std::size_t r = 0; r < raw_rows.size(); ++r) z[r] = net.standardizer().apply(raw_rows[r]);

  std::vector<const SeriesTarget*> val_targets, train_targets;
  for (auto r : hist.validation_rows) val_targets.push_back(&targets[r]);
  for (auto r : hist.train_rows) train_targets.push_back(&targets[r]);
  const Tensor2 x_val = rows_matrix(z, hist.validation_rows);
  const Tensor2 x_train = rows_matrix(z, hist.train_rows);

  SimplexWeights uniform;
  uniform.fill(1.0 / static_cast<double>(kNumModels));
  const auto u = evaluate_weights(std::vector<SimplexWeights>(val_targets.size(), uniform), val_targets);
  hist.uniform_validation_owa = u.per_series;
  hist.uniform_validation_pooled_owa = u.pooled;

  auto record = [&]() {
    const auto v = evaluate_weights(predict_rows(net, x_val), val_targets);
    hist.validation_owa.push_back(v.per_series);
    hist.validation_pooled_owa.push_back(v.pooled);
  };
  hist.train_owa.push_back(evaluate_weights(predict_rows(net, x_train), train_targets).per_series);
  record();

  auto params = net.params();
  nn::AdamW opt(params, {cfg.lr, cfg.weight_decay});
  Rng rng(derive_seed(seed, 1));
  std::vector<std::size_t> order(hist.train_rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double sum = 0.0;
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t e = std::min(order.size(), s + static_cast<std::size_t>(cfg.batch));
      Tensor2 xb(static_cast<Eigen::Index>(e - s), static_cast<Eigen::Index>(kNumFeatures));
      std::vector<const SeriesTarget*> tb;
      for (std::size_t k = s; k < e; ++k) {
        xb.row(static_cast<Eigen::Index>(k - s)) = x_train.row(static_cast<Eigen::Index>(order[k]));
        tb.push_back(train_targets[order[k]]);
      }
      nn::zero_grads(params);
      const double loss = net.batch_loss(xb, tb, true, true, rng);
      if (!std::isfinite(loss))
        throw DivergenceDetected("weight net loss became non-finite at epoch " + std::to_string(epoch));
      opt.step(params);
      sum += loss * static_cast<double>(e - s);
    }
    hist.train_owa.push_back(sum / static_cast<double>(order.size()));
    record();
  }
  return result;
}

EnsembleUsage ensemble_usage_stats(std::span<const SimplexWeights> weights, double threshold) {
  EnsembleUsage u;
  if (weights.empty()) return u;
  for (const auto& w : weights) {
    std::size_t size = 0;
    for (std::size_t i = 0; i < kNumModels; ++i) {
      if (w[i] > threshold) ++size;
      u.mean_weight[i] += w[i];
    }
    ++u.size_histogram[size];
  }
  for (auto& m : u.mean_weight) m /= static_cast<double>(weights.size());
  return u;
}

}  // namespace donut
