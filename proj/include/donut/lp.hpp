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

#include <vector>

#include <Eigen/Dense>

namespace donut::lp {

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Result {
  Status status = Status::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  // Basic column per row; indices >= n denote an artificial left on a redundant row.
  std::vector<int> basis;
  double min_reduced_cost = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
};

/// min c'x subject to A x = b, x >= 0, by a dense two-phase tableau simplex
/// with Bland's rule. The returned primal values are recomputed from the
/// final basis with the basic columns in index order, so two problems that
/// end on the same basis report identical numbers.
Result solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c, int max_iterations = 100000);

}  // namespace donut::lp
