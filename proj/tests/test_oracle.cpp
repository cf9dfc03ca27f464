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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "donut/errors.hpp"
#include "donut/lp.hpp"
#include "donut/oracle.hpp"
#include "donut/rng.hpp"

using namespace donut;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double abs_loss(const MatrixXd& b, const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    double f = 0.0;
    for (Eigen::Index i = 0; i < b.rows(); ++i) f += x[i] * b(i, static_cast<Eigen::Index>(t));
    s += std::abs(y[t] - f);
  }
  return s;
}

MatrixXd random_b(int models, int h, Rng& rng) {
  MatrixXd b(models, h);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(0.0, 10.0);
  return b;
}

std::vector<double> random_y(int h, Rng& rng) {
  std::vector<double> y(static_cast<std::size_t>(h));
  for (auto& v : y) v = rng.uniform(0.0, 10.0);
  return y;
}

}  // namespace

TEST_CASE("simplex solver on textbook problems") {
  // min -x1 - x2 s.t. x1 + 2 x2 <= 4, 3 x1 + x2 <= 6 (slacks x3, x4).
  MatrixXd A(2, 4);
  A << 1, 2, 1, 0, 3, 1, 0, 1;
  VectorXd b(2), c(4);
  b << 4, 6;
  c << -1, -1, 0, 0;
  auto r = lp::solve(A, b, c);
  REQUIRE(r.status == lp::Status::Optimal);
  CHECK(r.x[0] == doctest::Approx(1.6));
  CHECK(r.x[1] == doctest::Approx(1.2));
  CHECK(r.objective == doctest::Approx(-2.8));
  CHECK(r.min_reduced_cost >= -1e-12);
  CHECK(r.max_violation <= 1e-9);

  MatrixXd A2(1, 2);
  A2 << 1, 1;
  VectorXd b2(1), c2(2);
  b2 << -1;
  c2 << 1, 1;
  CHECK(lp::solve(A2, b2, c2).status == lp::Status::Infeasible);

  MatrixXd A3(1, 2);
  A3 << 1, -1;
  VectorXd b3(1), c3(2);
  b3 << 0;
  c3 << -1, 0;
  CHECK(lp::solve(A3, b3, c3).status == lp::Status::Unbounded);

  // A redundant equality row is tolerated.
  MatrixXd A4(2, 2);
  A4 << 1, 1, 2, 2;
  VectorXd b4(2), c4(2);
  b4 << 1, 2;
  c4 << 1, 3;
  r = lp::solve(A4, b4, c4);
  REQUIRE(r.status == lp::Status::Optimal);
  CHECK(r.objective == doctest::Approx(1.0));
}

TEST_CASE("optimal weights examples") {
  const std::vector<double> y{3, 5, 4, 8};
  MatrixXd one(1, 4);
  one << 2, 5, 6, 8;
  auto s = optimal_weights(one, y);
  CHECK(s.x == std::vector<double>{1.0});
  CHECK(s.objective == doctest::Approx(3.0));

  MatrixXd pair(2, 4);
  for (int t = 0; t < 4; ++t) pair(0, t) = y[t] - 1.0, pair(1, t) = y[t] + 1.0;
  s = optimal_weights(pair, y);
  CHECK(s.x[0] == doctest::Approx(0.5));
  CHECK(s.x[1] == doctest::Approx(0.5));
  CHECK(std::abs(s.objective) < 1e-12);
  CHECK(s.active_count == 2);
}

TEST_CASE("lp optimum against a weight grid") {
  Rng rng(1);
  for (int trial = 0; trial < 40; ++trial) {
    const auto b = random_b(3, 4, rng);
    const auto y = random_y(4, rng);
    const auto s = optimal_weights(b, y);
    double grid = 1e300;
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; i + j <= 100; ++j)
        grid = std::min(grid, abs_loss(b, {i / 100.0, j / 100.0, (100 - i - j) / 100.0}, y));
    const double spread = b.maxCoeff() - b.minCoeff();
    CHECK(s.objective <= grid + 1e-9);
    CHECK(s.objective >= grid - 4 * 0.02 * spread);
    CHECK(s.objective == doctest::Approx(abs_loss(b, s.x, y)).epsilon(1e-9));
  }
}

TEST_CASE("oracle invariants on random instances") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 1 + static_cast<int>(rng.index(12));
    const auto b = random_b(14, h, rng);
    const auto y = random_y(h, rng);
    const double scale = rng.uniform(0.5, 2.0);
    const auto s = optimal_weights(b, y, scale);

    double sum = 0.0;
    for (double v : s.x) {
      CHECK(v >= -1e-12);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    CHECK(s.min_reduced_cost >= -1e-9);
    CHECK(s.max_violation <= 1e-9);
    for (int t = 0; t < h; ++t) CHECK(std::min(s.z_plus[t], s.z_minus[t]) == 0.0);

    // MASE of the combined forecast, computed directly.
    CHECK(s.e_loss_mase == doctest::Approx(abs_loss(b, s.x, y) / (h * scale)).epsilon(1e-9));

    const auto sel = optimal_selection(b, y);
    CHECK(s.objective <= sel.loss + 1e-9);
    std::vector<double> vertex(14, 0.0);
    vertex[sel.index] = 1.0;
    CHECK(sel.loss == doctest::Approx(abs_loss(b, vertex, y)).epsilon(1e-12));

    // Dropping a row never helps.
    const auto sub = optimal_weights(MatrixXd(b.topRows(13)), y, scale);
    CHECK(s.objective <= sub.objective);
  }
}

TEST_CASE("pool restriction keeps the order given") {
  Rng rng(3);
  ForecastMatrix fm;
  fm.id = "p";
  fm.h = 5;
  for (std::size_t i = 0; i < kNumModels * 5; ++i) fm.b.push_back(rng.uniform(0, 10));
  const auto y = random_y(5, rng);
  const std::vector<ModelId> fwd{ModelId::Naive, ModelId::Theta, ModelId::Quantile01};
  const std::vector<ModelId> rev{ModelId::Quantile01, ModelId::Theta, ModelId::Naive};
  const auto a = optimal_weights(fm, y, fwd);
  const auto b = optimal_weights(fm, y, rev);
  CHECK(a.objective == b.objective);
  CHECK(a.x[0] == b.x[2]);
  CHECK(a.x[2] == b.x[0]);
}

TEST_CASE("selection ties go to the lowest index") {
  MatrixXd b(3, 2);
  b << 1, 1, 0, 0, 0, 0;
  const auto s = optimal_selection(b, std::vector<double>{0, 0});
  CHECK(s.index == 1);
  CHECK(s.loss == 0.0);
}

TEST_CASE("loss decomposition") {
  Rng rng(4);
  const auto b = random_b(5, 6, rng);
  const auto y = random_y(6, rng);
  const auto s = optimal_weights(b, y, 1.5);
  std::vector<double> best(6, 0.0);
  for (int t = 0; t < 6; ++t)
    for (int i = 0; i < 5; ++i) best[t] += s.x[i] * b(i, t);
  auto d = decompose_loss(best, b, y, 1.5);
  CHECK(d.p_loss == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(d.total_loss == d.p_loss + d.e_loss);

  std::size_t worst = 0;
  double worst_loss = -1.0;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> v(5, 0.0);
    v[i] = 1.0;
    if (abs_loss(b, v, y) > worst_loss) worst_loss = abs_loss(b, v, y), worst = i;
  }
  std::vector<double> wf(6);
  for (int t = 0; t < 6; ++t) wf[t] = b(worst, t);
  d = decompose_loss(wf, b, y, 1.5);
  CHECK(d.p_loss > 0.0);
  CHECK(d.total_loss == d.p_loss + d.e_loss);
  CHECK(d.total_loss == doctest::Approx(worst_loss / (6 * 1.5)));

  // A forecast outside the pool's hull can beat the oracle: flagged.
  CHECK_THROWS_AS(decompose_loss(y, b, y, 1.5), NegativePLoss);
}

TEST_CASE("greedy building") {
  Rng rng(5);
  std::vector<OracleInstance> corpus;
  for (int k = 0; k < 8; ++k) {
    OracleInstance inst;
    inst.id = "g" + std::to_string(k);
    inst.y = random_y(4, rng);
    inst.b = random_b(static_cast<int>(kNumModels), 4, rng);
    // Rows 3 and 7 bracket the actuals.
    for (int t = 0; t < 4; ++t) inst.b(3, t) = inst.y[t] - 1.0, inst.b(7, t) = inst.y[t] + 1.0;
    inst.scale = 1.0;
    corpus.push_back(inst);
  }
  std::vector<std::size_t> all(kNumModels);
  for (std::size_t i = 0; i < kNumModels; ++i) all[i] = i;
  const auto g = greedy_build(corpus, all);
  REQUIRE(g.curve.size() == kNumModels);
  for (std::size_t k = 1; k < g.curve.size(); ++k) CHECK(g.curve[k] <= g.curve[k - 1]);
  const std::vector<std::size_t> pair{3, 7};
  const auto gp = greedy_build(corpus, pair);
  CHECK(gp.order.front() == 3);  // tie between the brackets: lowest index
  CHECK(gp.curve[1] < 1e-12);

  // Identical candidates: flat after the first pick.
  for (auto& inst : corpus)
    for (int t = 0; t < 4; ++t) inst.b(0, t) = inst.b(1, t) = inst.b(2, t) = inst.y[t] + 2.0;
  const std::vector<std::size_t> same{0, 1, 2};
  const auto gs = greedy_build(corpus, same);
  CHECK(gs.curve[0] == gs.curve[1]);
  CHECK(gs.curve[1] == gs.curve[2]);
}

TEST_CASE("size histogram") {
  std::vector<OracleSolution> sols(4);
  for (auto& s : sols) s.active_count = 2;
  auto h = size_histogram(sols);
  CHECK(h.counts.at(2) == 4);
  CHECK(h.single_share == 0.0);
  for (auto& s : sols) s.active_count = 1;
  h = size_histogram(sols);
  CHECK(h.single_share == 1.0);
}
