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

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "donut/neural.hpp"

namespace donut {

struct AeConfig {
  int embedding_dim = 32;
  int hidden_dim = 128;
  int epochs = 500;
  int batch = 512;
  double lr = 0.002;
  double weight_decay = 0.005;
  double dropout = 0.20;
  int max_length = 500;
  double clip_norm = 5.0;
  double validation_fraction = 0.2;
  int patience = 0;  // 0 disables early stopping

  /// Full-size table values.
  static AeConfig paper();
  /// Laptop-sized defaults: hidden 64, epochs 100, batch 64.
  static AeConfig desk();

  void validate() const;
  nlohmann::json to_json() const;
  static AeConfig from_json(const nlohmann::json& j, AeConfig base);
};

struct Preprocessed {
  std::vector<double> values;
  double mean = 0.0;
  double std = 1.0;
};

inline constexpr double kStdFloor = 1e-8;

/// Keeps the last min(n, max_length) points and standardizes them with
/// the population standard deviation (floored).
Preprocessed preprocess(std::span<const double> series, int max_length);

struct AeHistory {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  int best_epoch = 0;
  bool early_stopped = false;
};

/// Two-layer LSTM encoder, linear bottleneck, two-layer LSTM decoder fed
/// the embedding at every step, linear read-out.
class Autoencoder {
 public:
  Autoencoder() = default;
  Autoencoder(const AeConfig& cfg, std::uint64_t seed);

  const AeConfig& config() const { return cfg_; }
  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  /// Embedding of a raw series (preprocessed internally).
  std::vector<double> encode(std::span<const double> series) const;
  /// Embeddings for many raw series, batched by length.
  std::vector<std::vector<double>> encode_many(const std::vector<std::vector<double>>& series) const;
  /// Reconstruction of the preprocessed series, in standardized units.
  std::vector<double> reconstruct(std::span<const double> series) const;

  /// Masked mean squared reconstruction error of already-preprocessed
  /// sequences; fills parameter gradients when `backward` is set.
  double batch_loss(const std::vector<const std::vector<double>*>& batch, bool training, bool backward, Rng& rng);

  nn::ParamList params();
  nlohmann::json to_json() const;
  static Autoencoder from_json(const nlohmann::json& j);

 private:
  struct Batch;
  static Batch make_batch(const std::vector<const std::vector<double>*>& seqs);
  nn::Tensor2 encode_batch(const Batch& b) const;
  nn::Tensor2 decode_batch(const nn::Tensor2& emb, int steps) const;
  void require_trained() const;

  AeConfig cfg_;
  std::uint64_t seed_ = 0;
  bool trained_ = false;
  nn::Lstm enc1_, enc2_, dec1_, dec2_;
  nn::Dense bottleneck_, readout_;
  nn::Dropout enc_drop_, dec_drop_;
};

struct AeTrainResult {
  Autoencoder model;
  AeHistory history;
};

using EpochCallback = std::function<void(int epoch, double train_loss, double validation_loss)>;

/// Trains on the given raw series (>= 2). Throws DivergenceDetected on a
/// non-finite loss.
AeTrainResult train_autoencoder(const std::vector<std::vector<double>>& series, const AeConfig& cfg,
                                std::uint64_t seed, const EpochCallback& on_epoch = {});

/// Pearson correlation between a reconstruction and a reference signal.
double reconstruction_correlation(std::span<const double> reconstruction, std::span<const double> reference);

std::string embeddings_csv(std::span<const std::string> ids, const std::vector<std::vector<double>>& embeddings);

}  // namespace donut
