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

#include <Eigen/Dense>

#include "donut/rng.hpp"

// Dense/LSTM building blocks with hand-written backward passes.
namespace donut::nn {

using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// A trainable tensor and its accumulated gradient.
struct Param {
  std::string name;
  Tensor2 value;
  Tensor2 grad;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Tensor2::Zero(rows, cols)), grad(Tensor2::Zero(rows, cols)) {}
  void zero_grad() { grad.setZero(); }
};

using ParamList = std::vector<Param*>;

void zero_grads(const ParamList& params);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) fill.
void init_uniform(Tensor2& t, int fan_in, Rng& rng);

enum class Activation { Identity, Relu, Tanh, Softmax };

/// Row-wise activation (softmax normalizes each row).
void apply_activation(Activation g, Tensor2& z);

/// y = g(x W + b) on a batch of row vectors; W is in x out.
class Dense {
 public:
  Dense() = default;
  Dense(std::string name, int in, int out, Activation g);

  void init(Rng& rng);
  int in() const { return static_cast<int>(w_.value.rows()); }
  int out() const { return static_cast<int>(w_.value.cols()); }
  Activation activation() const { return g_; }

  /// Forward pass; keeps what backward needs.
  const Tensor2& forward(const Tensor2& x);
  /// Pure forward for inference.
  Tensor2 apply(const Tensor2& x) const;
  /// Accumulates parameter gradients and returns dL/dx.
  Tensor2 backward(const Tensor2& dy);

  Param& weight() { return w_; }
  Param& bias() { return b_; }
  const Param& weight() const { return w_; }
  const Param& bias() const { return b_; }
  ParamList params() { return {&w_, &b_}; }

 private:
  void check_input(const Tensor2& x) const;

  Param w_;
  Param b_;
  Activation g_ = Activation::Identity;
  Tensor2 x_;
  Tensor2 y_;
};

/// Single LSTM cell evaluation on a batch: gates laid out [i f g o].
struct LstmStep {
  Tensor2 h;
  Tensor2 c;
};

/// LSTM layer over time-major batches. A sequence batch is stored as a
/// (T*B) x D matrix whose row t*B + b holds step t of sequence b.
class Lstm {
 public:
  Lstm() = default;
  Lstm(std::string name, int in, int hidden);

  void init(Rng& rng);
  int in() const { return static_cast<int>(wx_.value.rows()); }
  int hidden() const { return static_cast<int>(wh_.value.rows()); }

  LstmStep cell_step(const Tensor2& x, const Tensor2& h_prev, const Tensor2& c_prev) const;

  /// Runs T steps from zero state; returns the (T*B) x H hidden sequence.
  const Tensor2& forward(const Tensor2& xs, int steps, int batch);
  Tensor2 apply(const Tensor2& xs, int steps, int batch) const;
  /// dL/dh for every step (same layout as the output); returns dL/dx.
  Tensor2 backward(const Tensor2& dhs);

  Param& wx() { return wx_; }
  Param& wh() { return wh_; }
  Param& bias() { return b_; }
  const Param& wx() const { return wx_; }
  const Param& wh() const { return wh_; }
  const Param& bias() const { return b_; }
  ParamList params() { return {&wx_, &wh_, &b_}; }

 private:
  void run(const Tensor2& xs, int steps, int batch, Tensor2& gates, Tensor2& cells, Tensor2& hs) const;

  Param wx_;
  Param wh_;
  Param b_;
  int steps_ = 0;
  int batch_ = 0;
  Tensor2 xs_;
  Tensor2 gates_;  // post-activation gate values, (T*B) x 4H
  Tensor2 cells_;  // (T*B) x H
  Tensor2 hs_;     // (T*B) x H
};

/// Inverted dropout: kept activations are divided by the keep probability.
class Dropout {
 public:
  explicit Dropout(double rate = 0.0) : rate_(rate) {}
  double rate() const { return rate_; }

  Tensor2 forward(const Tensor2& x, bool training, Rng& rng);
  Tensor2 backward(const Tensor2& dy) const;

 private:
  double rate_;
  bool active_ = false;
  Tensor2 mask_;
};

struct AdamWConfig {
  double lr = 0.002;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// AdamW with decoupled multiplicative weight decay.
class AdamW {
 public:
  AdamW() = default;
  AdamW(const ParamList& params, AdamWConfig cfg);

  void step(const ParamList& params);
  std::int64_t steps() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }
  std::vector<Tensor2>& first_moments() { return m_; }
  std::vector<Tensor2>& second_moments() { return v_; }
  const std::vector<Tensor2>& first_moments() const { return m_; }
  const std::vector<Tensor2>& second_moments() const { return v_; }
  void set_steps(std::int64_t t) { t_ = t; }

 private:
  AdamWConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<Tensor2> m_;
  std::vector<Tensor2> v_;
};

/// Rescales gradients so their global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
double clip_global_norm(const ParamList& params, double max_norm);

struct EarlyStop {
  bool stopped = false;
  int stop_epoch = 0;  // 1-based; 0 when not stopped
  int best_epoch = 0;  // 1-based
};

/// Scans losses in order; stops once `patience` consecutive epochs fail to
/// improve on the best so far.
EarlyStop early_stop(std::span<const double> losses, int patience);

/// Maximum relative error between the analytic gradients already stored in
/// `params` and central differences of `loss` (step `step`).
double grad_check(const std::function<double()>& loss, const ParamList& params, double step = 1e-5);

/// Relative error convention used by grad_check.
double relative_error(double analytic, double numeric);

}  // namespace donut::nn
