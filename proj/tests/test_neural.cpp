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

#include <cmath>

#include "doctest.h"
#include "donut/checkpoint.hpp"
#include "donut/errors.hpp"
#include "donut/neural.hpp"
#include "fd_oracle.hpp"

using namespace donut;
using nn::Tensor2;

namespace {

Tensor2 random_tensor(int rows, int cols, Rng& rng, double scale = 1.0) {
  Tensor2 t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = scale * rng.normal();
  return t;
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Loss = sum(out .* R) makes dL/dout = R.
double weighted_sum(const Tensor2& out, const Tensor2& r) { return out.cwiseProduct(r).sum(); }

}  // namespace

TEST_CASE("dense forward examples") {
  nn::Dense zero("d", 3, 2, nn::Activation::Identity);
  Tensor2 x(1, 3);
  x << 1, 2, 3;
  CHECK(zero.apply(x).isZero());

  nn::Dense soft("s", 3, 14, nn::Activation::Softmax);
  const Tensor2 y = soft.apply(x);
  for (int j = 0; j < 14; ++j) CHECK(y(0, j) == doctest::Approx(1.0 / 14.0).epsilon(1e-15));

  Rng rng(1);
  nn::Dense rand_soft("s", 5, 14, nn::Activation::Softmax);
  rand_soft.init(rng);
  const Tensor2 z = rand_soft.apply(random_tensor(20, 5, rng, 5.0));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    CHECK(std::abs(z.row(r).sum() - 1.0) < 1e-9);
    CHECK(z.row(r).minCoeff() > 0.0);
    CHECK(z.row(r).maxCoeff() < 1.0);
  }
  CHECK_THROWS_AS(soft.apply(Tensor2::Zero(1, 4)), ShapeMismatch);
}

TEST_CASE("dense gradients match finite differences") {
  Rng rng(2);
  for (auto g : {nn::Activation::Identity, nn::Activation::Relu, nn::Activation::Tanh, nn::Activation::Softmax}) {
    nn::Dense layer("d", 4, 6, g);
    layer.init(rng);
    const Tensor2 x = random_tensor(5, 4, rng);
    const Tensor2 r = random_tensor(5, 6, rng);
    nn::zero_grads(layer.params());
    layer.forward(x);
    const Tensor2 dx = layer.backward(r);
    auto loss = [&] { return weighted_sum(layer.apply(x), r); };
    CHECK(test::fd_max_rel_error(loss, layer.params()) < 1e-6);

    // Input gradient by the same oracle.
    Tensor2 xv = x;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < xv.size(); ++i) {
      const double s = xv.data()[i];
      xv.data()[i] = s + 1e-5;
      const double up = weighted_sum(layer.apply(xv), r);
      xv.data()[i] = s - 1e-5;
      const double down = weighted_sum(layer.apply(xv), r);
      xv.data()[i] = s;
      worst = std::max(worst, nn::relative_error(dx.data()[i], (up - down) / 2e-5));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("linear network with squared loss is checked almost exactly") {
  Rng rng(3);
  nn::Dense layer("d", 3, 2, nn::Activation::Identity);
  layer.init(rng);
  const Tensor2 x = random_tensor(4, 3, rng);
  const Tensor2 t = random_tensor(4, 2, rng);
  nn::zero_grads(layer.params());
  const Tensor2 y = layer.forward(x);
  layer.backward(2.0 * (y - t));
  auto loss = [&] { return (layer.apply(x) - t).squaredNorm(); };
  CHECK(nn::grad_check(loss, layer.params()) < 1e-8);
  CHECK(test::fd_max_rel_error(loss, layer.params()) < 1e-8);

  // A corrupted entry is caught.
  layer.weight().grad(1, 0) *= 2.0;
  CHECK(nn::grad_check(loss, layer.params()) > 0.1);
}

TEST_CASE("lstm cell follows the gate equations") {
  nn::Lstm zero("l", 3, 2);
  const Tensor2 x = Tensor2::Ones(1, 3);
  auto s = zero.cell_step(x, Tensor2::Zero(1, 2), Tensor2::Zero(1, 2));
  CHECK(s.h.isZero());
  CHECK(s.c.isZero());

  // Forget gate saturated open, input gate shut: the cell carries over.
  nn::Lstm sat("l", 3, 2);
  sat.bias().value.block(0, 0, 1, 2).setConstant(-60.0);
  sat.bias().value.block(0, 2, 1, 2).setConstant(60.0);
  Tensor2 c_prev(1, 2);
  c_prev << 0.7, -1.3;
  s = sat.cell_step(x, Tensor2::Zero(1, 2), c_prev);
  CHECK(std::abs(s.c(0, 0) - 0.7) < 1e-12);
  CHECK(std::abs(s.c(0, 1) + 1.3) < 1e-12);

  Rng rng(4);
  nn::Lstm cell("l", 3, 4);
  cell.init(rng);
  CHECK(cell.bias().value.block(0, 4, 1, 4).isOnes());
  const Tensor2 xr = random_tensor(2, 3, rng), h0 = random_tensor(2, 4, rng), c0 = random_tensor(2, 4, rng);
  s = cell.cell_step(xr, h0, c0);
  const Tensor2 z = xr * cell.wx().value + h0 * cell.wh().value + cell.bias().value.replicate(2, 1);
  for (int r = 0; r < 2; ++r)
    for (int j = 0; j < 4; ++j) {
      const double i = logistic(z(r, j)), f = logistic(z(r, 4 + j)), g = std::tanh(z(r, 8 + j)),
                   o = logistic(z(r, 12 + j));
      const double c = f * c0(r, j) + i * g;
      CHECK(s.c(r, j) == doctest::Approx(c).epsilon(1e-14));
      CHECK(s.h(r, j) == doctest::Approx(o * std::tanh(c)).epsilon(1e-14));
      CHECK(std::abs(s.h(r, j)) <= 1.0);
    }
  CHECK_THROWS_AS(cell.cell_step(Tensor2::Zero(2, 2), h0, c0), ShapeMismatch);
}

TEST_CASE("lstm layer gradients match finite differences") {
  Rng rng(5);
  for (int steps : {1, 6}) {
    nn::Lstm layer("l", 3, 4);
    layer.init(rng);
    const int batch = 2;
    const Tensor2 xs = random_tensor(steps * batch, 3, rng);
    const Tensor2 r = random_tensor(steps * batch, 4, rng);
    nn::zero_grads(layer.params());
    const Tensor2 hs = layer.forward(xs, steps, batch);
    // The first step of the layer is a cell step from zero state.
    const auto first = layer.cell_step(xs.topRows(batch), Tensor2::Zero(batch, 4), Tensor2::Zero(batch, 4));
    CHECK((hs.topRows(batch) - first.h).cwiseAbs().maxCoeff() < 1e-14);
    layer.backward(r);
    auto loss = [&] { return weighted_sum(layer.apply(xs, steps, batch), r); };
    CHECK(test::fd_max_rel_error(loss, layer.params()) < 1e-4);
  }
}

TEST_CASE("dropout") {
  Rng rng(6);
  const Tensor2 x = Tensor2::Ones(200, 50);
  nn::Dropout d(0.25);
  CHECK(d.forward(x, false, rng) == x);
  const Tensor2 y = d.forward(x, true, rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y.data()[i];
    CHECK((v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-15));
  }
  CHECK(y.mean() == doctest::Approx(1.0).epsilon(0.02));
  // Backward reuses the same mask.
  CHECK(d.backward(x) == y);

  Rng a(9), b(9);
  nn::Dropout d1(0.5), d2(0.5);
  CHECK(d1.forward(x, true, a) == d2.forward(x, true, b));
}

TEST_CASE("adamw") {
  nn::Param w("w", 1, 1);
  w.value(0, 0) = 3.0;
  SUBCASE("zero gradient and no decay leaves parameters alone") {
    nn::AdamW opt({&w}, {0.01, 0.0});
    opt.step({&w});
    CHECK(w.value(0, 0) == 3.0);
  }
  SUBCASE("decay is multiplicative and decoupled") {
    nn::AdamW opt({&w}, {0.01, 0.1});
    opt.step({&w});
    CHECK(w.value(0, 0) == doctest::Approx(3.0 * (1.0 - 0.01 * 0.1)).epsilon(1e-15));
  }
  SUBCASE("first step moves by the learning rate") {
    nn::AdamW opt({&w}, {0.01, 0.0});
    w.grad(0, 0) = 123.0;
    opt.step({&w});
    CHECK(w.value(0, 0) == doctest::Approx(3.0 - 0.01).epsilon(1e-9));
  }
  SUBCASE("quadratic descent") {
    nn::AdamW opt({&w}, {0.01, 0.0});
    double prev = std::abs(w.value(0, 0));
    for (int k = 0; k < 100; ++k) {
      w.grad(0, 0) = 2.0 * w.value(0, 0);
      opt.step({&w});
      const double now = std::abs(w.value(0, 0));
      if (k >= 5) CHECK(now < prev);
      prev = now;
    }
    CHECK(opt.steps() == 100);
  }
}

TEST_CASE("global norm clipping") {
  nn::Param a("a", 1, 2), b("b", 1, 1);
  a.grad << 3.0, 0.0;
  b.grad << 4.0;
  CHECK(nn::clip_global_norm({&a, &b}, 10.0) == doctest::Approx(5.0));
  CHECK(b.grad(0, 0) == 4.0);
  CHECK(nn::clip_global_norm({&a, &b}, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad(0, 0) == doctest::Approx(0.6));
  CHECK(b.grad(0, 0) == doctest::Approx(0.8));
}

TEST_CASE("early stopping") {
  auto s = nn::early_stop(std::vector<double>{3, 2, 1}, 5);
  CHECK(!s.stopped);
  CHECK(s.best_epoch == 3);
  s = nn::early_stop(std::vector<double>{3, 1, 2, 2, 2}, 3);
  CHECK(s.stopped);
  CHECK(s.stop_epoch == 5);
  CHECK(s.best_epoch == 2);
  s = nn::early_stop(std::vector<double>{1, 2, 3, 4}, 1);
  CHECK(s.stopped);
  CHECK(s.stop_epoch == 2);
  CHECK(s.best_epoch == 1);
}

TEST_CASE("checkpoint round-trip") {
  Rng rng(7);
  nn::Dense layer("d", 3, 2, nn::Activation::Tanh);
  layer.init(rng);
  nn::AdamW opt(layer.params(), {0.01, 0.1});
  layer.weight().grad.setConstant(0.5);
  opt.step(layer.params());

  const auto j = nlohmann::json::parse(nn::make_checkpoint(layer.params(), opt, 7, 3).dump());
  nn::Dense copy("d", 3, 2, nn::Activation::Tanh);
  nn::params_from_json(j.at("layers"), copy.params());
  CHECK(copy.weight().value == layer.weight().value);
  CHECK(copy.bias().value == layer.bias().value);

  nn::AdamW opt2(copy.params(), {0.01, 0.1});
  nn::optimizer_from_json(j.at("optimizer"), opt2);
  CHECK(opt2.steps() == 1);
  CHECK(opt2.first_moments()[0] == opt.first_moments()[0]);
  CHECK(opt2.second_moments()[0] == opt.second_moments()[0]);

  nn::Dense wrong("d", 2, 2, nn::Activation::Tanh);
  CHECK_THROWS(nn::params_from_json(j.at("layers"), wrong.params()));
}
