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

#include "donut/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "donut/errors.hpp"
#include "donut/lp.hpp"
#include "donut/metrics.hpp"

namespace donut {

namespace {

void check_shapes(const Eigen::MatrixXd& b, std::span<const double> y) {
  if (b.rows() < 1) throw ShapeMismatch("oracle needs at least one model");
  if (b.cols() != static_cast<Eigen::Index>(y.size()) || y.empty())
    throw ShapeMismatch("oracle: forecast horizon " + std::to_string(b.cols()) + " vs " + std::to_string(y.size()) +
                        " actuals");
}

double row_loss(const Eigen::MatrixXd& b, Eigen::Index i, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) s += std::abs(b(i, static_cast<Eigen::Index>(t)) - y[t]);
  return s;
}

}  // namespace

Selection optimal_selection(const Eigen::MatrixXd& b, std::span<const double> y) {
  check_shapes(b, y);
  Selection best{0, row_loss(b, 0, y)};
  for (Eigen::Index i = 1; i < b.rows(); ++i) {
    const double l = row_loss(b, i, y);
    if (l < best.loss) best = {static_cast<std::size_t>(i), l};
  }
  return best;
}

OracleSolution optimal_weights(const Eigen::MatrixXd& b, std::span<const double> y, double scale) {
  check_shapes(b, y);
  const Eigen::Index P = b.rows(), h = b.cols();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(h + 1, P + 2 * h);
  Eigen::VectorXd rhs(h + 1);
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(P + 2 * h);
  A.topLeftCorner(h, P) = b.transpose();
  A.block(0, P, h, h).setIdentity();
  A.block(0, P + h, h, h) = -Eigen::MatrixXd::Identity(h, h);
  A.row(h).head(P).setOnes();
  for (Eigen::Index t = 0; t < h; ++t) rhs(t) = y[static_cast<std::size_t>(t)];
  rhs(h) = 1.0;
  cost.tail(2 * h).setOnes();

  const auto res = lp::solve(A, rhs, cost);
  if (res.status != lp::Status::Optimal) throw Error("oracle LP did not reach an optimum");

  OracleSolution s;
  s.x.assign(res.x.begin(), res.x.begin() + P);
  s.z_plus.assign(res.x.begin() + P, res.x.begin() + P + h);
  s.z_minus.assign(res.x.begin() + P + h, res.x.end());
  s.objective = res.objective;
  s.min_reduced_cost = res.min_reduced_cost;
  s.max_violation = res.max_violation;

  // A single-model vertex is always feasible; never report worse than it.
  const auto sel = optimal_selection(b, y);
  if (sel.loss < s.objective) {
    std::fill(s.x.begin(), s.x.end(), 0.0);
    s.x[sel.index] = 1.0;
    for (Eigen::Index t = 0; t < h; ++t) {
      const double r = y[static_cast<std::size_t>(t)] - b(static_cast<Eigen::Index>(sel.index), t);
      s.z_plus[t] = std::max(r, 0.0);
      s.z_minus[t] = std::max(-r, 0.0);
    }
    s.objective = sel.loss;
  }
  s.e_loss_mase = s.objective / (static_cast<double>(h) * scale);
  s.active_count = static_cast<int>(std::count_if(s.x.begin(), s.x.end(), [](double v) { return v > kActiveWeight; }));
  return s;
}

OracleSolution optimal_weights(const ForecastMatrix& f, std::span<const double> y, std::span<const ModelId> pool,
                               double scale) {
  if (pool.empty()) throw ShapeMismatch("oracle pool is empty");
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto c) { return model_index(pool[a]) < model_index(pool[c]); });
  Eigen::MatrixXd b(static_cast<Eigen::Index>(pool.size()), f.h);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto row = f.row(model_index(pool[order[k]]));
    for (int t = 0; t < f.h; ++t) b(static_cast<Eigen::Index>(k), t) = row[t];
  }
  auto s = optimal_weights(b, y, scale);
  std::vector<double> x(pool.size());
  for (std::size_t k = 0; k < order.size(); ++k) x[order[k]] = s.x[k];
  s.x = std::move(x);
  return s;
}

LossDecomposition decompose_loss(std::span<const double> forecast, const Eigen::MatrixXd& b,
                                 std::span<const double> y, double scale) {
  const auto sol = optimal_weights(b, y, scale);
  LossDecomposition d;
  const double total = metrics::mase_with_scale(scale, y, forecast);
  d.e_loss = sol.e_loss_mase;
  double p = total - d.e_loss;
  if (p < -1e-6) throw NegativePLoss(p);
  d.p_loss = std::max(p, 0.0);
  // Report the total as the exact sum of its parts.
  d.total_loss = d.p_loss + d.e_loss;
  return d;
}

OracleInstance make_instance(const ForecastMatrix& f, std::span<const double> y, double scale) {
  if (static_cast<int>(y.size()) != f.h) throw ShapeMismatch("series '" + f.id + "': actuals differ from horizon");
  OracleInstance inst;
  inst.id = f.id;
  inst.b.resize(static_cast<Eigen::Index>(kNumModels), f.h);
  for (std::size_t i = 0; i < kNumModels; ++i)
    for (int t = 0; t < f.h; ++t) inst.b(static_cast<Eigen::Index>(i), t) = f.at(i, static_cast<std::size_t>(t));
  inst.y.assign(y.begin(), y.end());
  inst.scale = scale;
  return inst;
}

Eigen::MatrixXd pool_rows(const OracleInstance& inst, std::span<const std::size_t> rows) {
  Eigen::MatrixXd b(static_cast<Eigen::Index>(rows.size()), inst.b.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) b.row(static_cast<Eigen::Index>(k)) = inst.b.row(static_cast<Eigen::Index>(rows[k]));
  return b;
}

GreedyResult greedy_build(std::span<const OracleInstance> corpus, std::span<const std::size_t> candidates) {
  GreedyResult g;
  if (corpus.empty()) return g;
  std::vector<std::size_t> remaining(candidates.begin(), candidates.end());
  std::sort(remaining.begin(), remaining.end());
  std::vector<std::size_t> chosen;
  while (!remaining.empty()) {
    std::size_t best_k = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      auto pool = chosen;
      pool.push_back(remaining[k]);
      std::sort(pool.begin(), pool.end());
      double sum = 0.0;
      for (const auto& inst : corpus) sum += optimal_weights(pool_rows(inst, pool), inst.y, inst.scale).e_loss_mase;
      const double mean = sum / static_cast<double>(corpus.size());
      if (mean < best) {
        best = mean;
        best_k = k;
      }
    }
    chosen.push_back(remaining[best_k]);
    g.order.push_back(remaining[best_k]);
    g.curve.push_back(best);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_k));
  }
  return g;
}

SizeHistogram size_histogram(std::span<const OracleSolution> solutions) {
  SizeHistogram h;
  for (const auto& s : solutions) ++h.counts[s.active_count];
  if (!solutions.empty()) {
    const auto it = h.counts.find(1);
    h.single_share = it == h.counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(solutions.size());
  }
  return h;
}

}  // namespace donut
