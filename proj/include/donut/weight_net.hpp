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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "donut/corpus.hpp"
#include "donut/model_pool.hpp"
#include "donut/neural.hpp"
#include "donut/stat_features.hpp"

namespace donut {

inline constexpr std::size_t kEmbeddingDim = 32;
inline constexpr std::size_t kNumFeatures = kNumStatFeatures + kEmbeddingDim + 2;

/// 42 statistical names, lstm_0..lstm_31, period, type.
const std::vector<std::string>& feature_names();

using FeatureVector = std::array<double, kNumFeatures>;
using SimplexWeights = std::array<double, kNumModels>;

struct WeightNetConfig {
  int hidden_dim = 1024;
  int epochs = 12;
  int batch = 4096;
  double lr = 0.002;
  double dropout = 0.258;
  double weight_decay = 0.003064;
  double validation_fraction = 0.2;

  static WeightNetConfig paper();
  /// Smaller hidden layer and batch, more epochs: sized for a few
  /// thousand series.
  static WeightNetConfig desk();

  void validate() const;
  nlohmann::json to_json() const;
  static WeightNetConfig from_json(const nlohmann::json& j, WeightNetConfig base);
};

/// Unstandardized feature row. `embedding` must hold kEmbeddingDim values.
FeatureVector raw_features(const std::string& id, const StatFeatures* stat, const std::vector<double>* embedding,
                           PeriodKind period, SeriesType type);

/// Column-wise standardization fitted on training rows.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;

  static Standardizer fit(std::span<const FeatureVector> rows);
  /// (x - mean) / std with std floored at 1e-8; NaN becomes 0.
  FeatureVector apply(const FeatureVector& x) const;
  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
};

FeatureVector build_features(const std::string& id, const StatFeatures* stat, const std::vector<double>* embedding,
                             PeriodKind period, SeriesType type, const Standardizer& standardizer);

/// Everything the per-series OWA loss needs.
struct SeriesTarget {
  ForecastMatrix forecasts;
  std::vector<double> actual;
  double smape_naive2 = 0.0;
  double mase_naive2 = 0.0;
  double scale = 1.0;  // MASE denominator
};

/// Builds a target from a series split; uses the seasonal-naive scale with
/// the period's m.
SeriesTarget make_target(const ForecastMatrix& forecasts, std::span<const double> train,
                         std::span<const double> test, int m);

/// y_hat_t = sum_i w_i b_it.
std::vector<double> combine(std::span<const double> w, const ForecastMatrix& b);

/// Per-series OWA of a forecast, floored like metrics::owa_single.
double series_owa(std::span<const double> forecast, const SeriesTarget& target);
/// d series_owa / d forecast.
std::vector<double> series_owa_gradient(std::span<const double> forecast, const SeriesTarget& target);

/// 76 -> relu(hidden) -> dropout -> 14 -> softmax.
class WeightNet {
 public:
  WeightNet() = default;
  WeightNet(const WeightNetConfig& cfg, std::uint64_t seed);

  const WeightNetConfig& config() const { return cfg_; }
  const Standardizer& standardizer() const { return standardizer_; }
  void set_standardizer(Standardizer s) { standardizer_ = std::move(s); }

  /// Weights for an already standardized feature row.
  SimplexWeights forward(const FeatureVector& f) const;
  nn::Tensor2 forward_batch(const nn::Tensor2& x) const;

  /// Mean per-series OWA of the combined forecasts over a batch of
  /// standardized rows; fills gradients when `backward` is set.
  double batch_loss(const nn::Tensor2& x, std::span<const SeriesTarget* const> targets, bool training,
                    bool backward, Rng& rng);

  nn::Dense& hidden_layer() { return hidden_; }
  nn::Dense& output_layer() { return output_; }
  nn::ParamList params();
  nlohmann::json to_json() const;
  static WeightNet from_json(const nlohmann::json& j);

 private:
  WeightNetConfig cfg_;
  std::uint64_t seed_ = 0;
  nn::Dense hidden_;
  nn::Dropout drop_;
  nn::Dense output_;
  Standardizer standardizer_;
};

struct WeightNetHistory {
  // Index 0 is the untrained network; index e is after epoch e.
  std::vector<double> train_owa;
  std::vector<double> validation_owa;         // mean per-series OWA
  std::vector<double> validation_pooled_owa;  // pooled OWA
  double uniform_validation_owa = 0.0;
  double uniform_validation_pooled_owa = 0.0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
};

struct WeightNetTrainResult {
  WeightNet net;
  WeightNetHistory history;
};

/// Splits rows 80/20 (seeded), fits the standardizer on the training part,
/// and trains end to end on per-series OWA.
WeightNetTrainResult train_weight_net(std::span<const FeatureVector> raw_rows, std::span<const SeriesTarget> targets,
                                      const WeightNetConfig& cfg, std::uint64_t seed);

/// Pooled and per-series OWA of weighted combinations.
struct OwaSummary {
  double per_series = 0.0;
  double pooled = 0.0;
};
OwaSummary evaluate_weights(std::span<const SimplexWeights> weights, std::span<const SeriesTarget* const> targets);

struct EnsembleUsage {
  std::array<std::size_t, kNumModels + 1> size_histogram{};  // index = effective size
  std::array<double, kNumModels> mean_weight{};
};

EnsembleUsage ensemble_usage_stats(std::span<const SimplexWeights> weights, double threshold = 0.05);

}  // namespace donut
