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

#include "donut/neural.hpp"

#include <algorithm>
#include <cmath>

#include "donut/errors.hpp"

namespace donut::nn {

namespace {

std::string shape_of(const Tensor2& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// tanh through the vectorized logistic: tanh(x) = 2 sigma(2x) - 1.
template <typename Derived>
Tensor2 vtanh(const Eigen::MatrixBase<Derived>& x) {
  return (2.0 * (2.0 * x.derived().array()).logistic() - 1.0).matrix();
}

}  // namespace

void zero_grads(const ParamList& params) {
  for (auto* p : params) p->zero_grad();
}

void init_uniform(Tensor2& t, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-bound, bound);
}

void apply_activation(Activation g, Tensor2& z) {
  switch (g) {
    case Activation::Identity:
      return;
    case Activation::Relu:
      z = z.cwiseMax(0.0);
      return;
    case Activation::Tanh:
      z = z.array().tanh().matrix();
      return;
    case Activation::Softmax:
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        const double top = row.maxCoeff();
        row = (row.array() - top).exp().matrix();
        row /= row.sum();
      }
      return;
  }
}

// ---- Dense --------------------------------------------------------------------

Dense::Dense(std::string name, int in, int out, Activation g)
    : w_(name + ".weight", in, out), b_(name + ".bias", 1, out), g_(g) {}

void Dense::init(Rng& rng) {
  init_uniform(w_.value, in(), rng);
  init_uniform(b_.value, in(), rng);
}

void Dense::check_input(const Tensor2& x) const {
  if (x.cols() != w_.value.rows())
    throw ShapeMismatch("dense layer '" + w_.name + "' expects " + std::to_string(w_.value.rows()) +
                        " inputs, got " + shape_of(x));
}

Tensor2 Dense::apply(const Tensor2& x) const {
  check_input(x);
  Tensor2 z = x * w_.value;
  z.rowwise() += b_.value.row(0);
  apply_activation(g_, z);
  return z;
}

const Tensor2& Dense::forward(const Tensor2& x) {
  x_ = x;
  y_ = apply(x);
  return y_;
}

Tensor2 Dense::backward(const Tensor2& dy) {
  if (dy.rows() != y_.rows() || dy.cols() != y_.cols())
    throw ShapeMismatch("dense backward: gradient " + shape_of(dy) + " vs output " + shape_of(y_));
  Tensor2 dz;
  switch (g_) {
    case Activation::Identity:
      dz = dy;
      break;
    case Activation::Relu:
      dz = (y_.array() > 0.0).select(dy, 0.0);
      break;
    case Activation::Tanh:
      dz = (dy.array() * (1.0 - y_.array().square())).matrix();
      break;
    case Activation::Softmax: {
      const Eigen::VectorXd inner = (dy.array() * y_.array()).rowwise().sum();
      dz = (y_.array() * (dy.array().colwise() - inner.array())).matrix();
      break;
    }
  }
  w_.grad.noalias() += x_.transpose() * dz;
  b_.grad += dz.colwise().sum();
  return dz * w_.value.transpose();
}

// ---- LSTM ---------------------------------------------------------------------

Lstm::Lstm(std::string name, int in, int hidden)
    : wx_(name + ".wx", in, 4 * hidden), wh_(name + ".wh", hidden, 4 * hidden), b_(name + ".bias", 1, 4 * hidden) {}

void Lstm::init(Rng& rng) {
  init_uniform(wx_.value, in(), rng);
  init_uniform(wh_.value, hidden(), rng);
  const int H = hidden();
  b_.value.setZero();
  b_.value.block(0, H, 1, H).setOnes();
}

LstmStep Lstm::cell_step(const Tensor2& x, const Tensor2& h_prev, const Tensor2& c_prev) const {
  const int H = hidden();
  if (x.cols() != in() || h_prev.cols() != H || c_prev.cols() != H || h_prev.rows() != x.rows() ||
      c_prev.rows() != x.rows())
    throw ShapeMismatch("lstm step: x " + shape_of(x) + ", h " + shape_of(h_prev) + ", c " + shape_of(c_prev));
  Tensor2 z = x * wx_.value + h_prev * wh_.value;
  z.rowwise() += b_.value.row(0);
  LstmStep out{Tensor2(x.rows(), H), Tensor2(x.rows(), H)};
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (int j = 0; j < H; ++j) {
      const double i = sigmoid(z(r, j));
      const double f = sigmoid(z(r, H + j));
      const double g = std::tanh(z(r, 2 * H + j));
      const double o = sigmoid(z(r, 3 * H + j));
      const double c = f * c_prev(r, j) + i * g;
      out.c(r, j) = c;
      out.h(r, j) = o * std::tanh(c);
    }
  }
  return out;
}

void Lstm::run(const Tensor2& xs, int steps, int batch, Tensor2& gates, Tensor2& cells, Tensor2& hs) const {
  const int H = hidden();
  if (xs.cols() != in() || xs.rows() != static_cast<Eigen::Index>(steps) * batch)
    throw ShapeMismatch("lstm '" + wx_.name + "': input " + shape_of(xs) + " for " + std::to_string(steps) +
                        " steps of batch " + std::to_string(batch));
  gates.noalias() = xs * wx_.value;
  gates.rowwise() += b_.value.row(0);
  cells.resize(xs.rows(), H);
  hs.resize(xs.rows(), H);
  for (int t = 0; t < steps; ++t) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(t) * batch;
    auto z = gates.middleRows(r0, batch);
    if (t > 0) z.noalias() += hs.middleRows(r0 - batch, batch) * wh_.value;
    z.leftCols(2 * H) = z.leftCols(2 * H).array().logistic().matrix();
    z.middleCols(2 * H, H) = vtanh(z.middleCols(2 * H, H));
    z.rightCols(H) = z.rightCols(H).array().logistic().matrix();
    auto c = cells.middleRows(r0, batch);
    c = z.leftCols(H).cwiseProduct(z.middleCols(2 * H, H));
    if (t > 0) c += z.middleCols(H, H).cwiseProduct(cells.middleRows(r0 - batch, batch));
    hs.middleRows(r0, batch) = z.rightCols(H).cwiseProduct(vtanh(c));
  }
}

const Tensor2& Lstm::forward(const Tensor2& xs, int steps, int batch) {
  steps_ = steps;
  batch_ = batch;
  xs_ = xs;
  run(xs, steps, batch, gates_, cells_, hs_);
  return hs_;
}

Tensor2 Lstm::apply(const Tensor2& xs, int steps, int batch) const {
  Tensor2 gates, cells, hs;
  run(xs, steps, batch, gates, cells, hs);
  return hs;
}

Tensor2 Lstm::backward(const Tensor2& dhs) {
  const int H = hidden();
  const int B = batch_;
  if (dhs.rows() != hs_.rows() || dhs.cols() != H)
    throw ShapeMismatch("lstm backward: gradient " + shape_of(dhs) + " vs output " + shape_of(hs_));
  Tensor2 da(gates_.rows(), 4 * H);
  Tensor2 dh = Tensor2::Zero(B, H);
  Tensor2 dc_next = Tensor2::Zero(B, H);
  Tensor2 tc(B, H), dc(B, H);
  for (int t = steps_ - 1; t >= 0; --t) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(t) * B;
    const auto g4 = gates_.middleRows(r0, B);
    const auto i = g4.leftCols(H).array();
    const auto f = g4.middleCols(H, H).array();
    const auto g = g4.middleCols(2 * H, H).array();
    const auto o = g4.rightCols(H).array();
    auto out = da.middleRows(r0, B);
    dh += dhs.middleRows(r0, B);
    tc = vtanh(cells_.middleRows(r0, B));
    dc.array() = dh.array() * o * (1.0 - tc.array().square()) + dc_next.array();
    out.leftCols(H).array() = dc.array() * g * i * (1.0 - i);
    if (t > 0)
      out.middleCols(H, H).array() = dc.array() * cells_.middleRows(r0 - B, B).array() * f * (1.0 - f);
    else
      out.middleCols(H, H).setZero();
    out.middleCols(2 * H, H).array() = dc.array() * i * (1.0 - g.square());
    out.rightCols(H).array() = dh.array() * tc.array() * o * (1.0 - o);
    dc_next.array() = dc.array() * f;
    if (t > 0) dh.noalias() = out * wh_.value.transpose();
  }
  const Eigen::Index rows = hs_.rows();
  if (steps_ > 1) wh_.grad.noalias() += hs_.topRows(rows - B).transpose() * da.bottomRows(rows - B);
  wx_.grad.noalias() += xs_.transpose() * da;
  b_.grad += da.colwise().sum();
  return da * wx_.value.transpose();
}

// ---- Dropout ------------------------------------------------------------------

Tensor2 Dropout::forward(const Tensor2& x, bool training, Rng& rng) {
  active_ = training && rate_ > 0.0;
  if (!active_) return x;
  const double keep = 1.0 - rate_;
  mask_.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask_.size(); ++i) mask_.data()[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return x.cwiseProduct(mask_);
}

Tensor2 Dropout::backward(const Tensor2& dy) const {
  if (!active_) return dy;
  return dy.cwiseProduct(mask_);
}

// ---- AdamW --------------------------------------------------------------------

AdamW::AdamW(const ParamList& params, AdamWConfig cfg) : cfg_(cfg) {
  for (auto* p : params) {
    m_.push_back(Tensor2::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Tensor2::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamW::step(const ParamList& params) {
  if (params.size() != m_.size()) throw ShapeMismatch("optimizer was built for a different parameter list");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double shrink = 1.0 - cfg_.lr * cfg_.weight_decay;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    auto m = m_[k].array();
    auto v = v_[k].array();
    const auto g = p.grad.array();
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.square();
    if (cfg_.weight_decay != 0.0) p.value *= shrink;
    p.value.array() -= cfg_.lr * (m / c1) / ((v / c2).sqrt() + cfg_.eps);
  }
}

double clip_global_norm(const ParamList& params, double max_norm) {
  double sq = 0.0;
  for (auto* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double k = max_norm / norm;
    for (auto* p : params) p->grad *= k;
  }
  return norm;
}

EarlyStop early_stop(std::span<const double> losses, int patience) {
  EarlyStop r;
  if (losses.empty()) return r;
  double best = losses[0];
  r.best_epoch = 1;
  int since = 0;
  for (std::size_t e = 1; e < losses.size(); ++e) {
    if (losses[e] < best) {
      best = losses[e];
      r.best_epoch = static_cast<int>(e) + 1;
      since = 0;
    } else if (++since >= patience) {
      r.stopped = true;
      r.stop_epoch = static_cast<int>(e) + 1;
      return r;
    }
  }
  return r;
}

double relative_error(double analytic, double numeric) {
  const double den = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / den;
}

double grad_check(const std::function<double()>& loss, const ParamList& params, double step) {
  double worst = 0.0;
  for (auto* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + step;
      const double up = loss();
      w = saved - step;
      const double down = loss();
      w = saved;
      worst = std::max(worst, relative_error(p->grad.data()[i], (up - down) / (2.0 * step)));
    }
  }
  return worst;
}

}  // namespace donut::nn
