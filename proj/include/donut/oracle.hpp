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

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "donut/model_pool.hpp"

namespace donut {

/// Ex-post optimal simplex weights for one series.
struct OracleSolution {
  std::vector<double> x;  // aligned with the pool
  double objective = 0.0;  // sum_t |y_t - sum_i x_i b_it| in series units
  double e_loss_mase = 0.0;
  int active_count = 0;
  std::vector<double> z_plus;
  std::vector<double> z_minus;
  double min_reduced_cost = 0.0;
  double max_violation = 0.0;
};

inline constexpr double kActiveWeight = 1e-6;

/// Solves the least-absolute-deviation simplex LP for the rows of `b`
/// (pool size x h). `scale` is the MASE denominator D.
OracleSolution optimal_weights(const Eigen::MatrixXd& b, std::span<const double> y, double scale = 1.0);

/// Same, restricted to `pool` (given in any order; solved in canonical order
/// and reported in the order given).
OracleSolution optimal_weights(const ForecastMatrix& b, std::span<const double> y, std::span<const ModelId> pool,
                               double scale = 1.0);

struct Selection {
  std::size_t index = 0;  // row of the pool
  double loss = 0.0;      // sum_t |b_it - y_t|
};

/// Best single row; ties go to the lowest index.
Selection optimal_selection(const Eigen::MatrixXd& b, std::span<const double> y);

struct LossDecomposition {
  double total_loss = 0.0;
  double p_loss = 0.0;
  double e_loss = 0.0;
};

/// total = MASE of `forecast`; e = LP optimum; p = total - e.
LossDecomposition decompose_loss(std::span<const double> forecast, const Eigen::MatrixXd& b,
                                 std::span<const double> y, double scale);

/// One series prepared for repeated oracle solves.
struct OracleInstance {
  std::string id;
  Eigen::MatrixXd b;  // kNumModels x h, canonical model order
  std::vector<double> y;
  double scale = 1.0;
};

OracleInstance make_instance(const ForecastMatrix& f, std::span<const double> y, double scale);

/// Pool rows of an instance, in the order given.
Eigen::MatrixXd pool_rows(const OracleInstance& inst, std::span<const std::size_t> rows);

struct GreedyResult {
  std::vector<std::size_t> order;  // candidate indices in pick order
  std::vector<double> curve;       // corpus-mean optimal MASE after each pick
};

/// Greedy forward selection over `candidates` (row indices into each
/// instance); ties go to the lowest candidate index.
GreedyResult greedy_build(std::span<const OracleInstance> corpus, std::span<const std::size_t> candidates);

struct SizeHistogram {
  std::map<int, std::size_t> counts;
  double single_share = 0.0;
};

SizeHistogram size_histogram(std::span<const OracleSolution> solutions);

}  // namespace donut
