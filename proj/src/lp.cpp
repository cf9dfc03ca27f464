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

#include "donut/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "donut/errors.hpp"

namespace donut::lp {

namespace {

constexpr double kCostTol = 1e-10;
constexpr double kPivotTol = 1e-11;

class Tableau {
 public:
  Tableau(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) : m_(A.rows()), n_(A.cols()) {
    t_ = Eigen::MatrixXd::Zero(m_ + 1, n_ + m_ + 1);
    t_.topLeftCorner(m_, n_) = A;
    t_.col(rhs()).head(m_) = b;
    for (Eigen::Index i = 0; i < m_; ++i) {
      t_(i, n_ + i) = 1.0;
      basis_.push_back(static_cast<int>(n_ + i));
    }
  }

  Eigen::Index rhs() const { return n_ + m_; }
  std::vector<int>& basis() { return basis_; }
  const Eigen::MatrixXd& table() const { return t_; }

  // Objective row for costs c over all n + m columns.
  void price(const Eigen::VectorXd& c) {
    t_.row(m_).setZero();
    t_.row(m_).head(n_ + m_) = c.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double cb = c(basis_[i]);
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
    }
  }

  void pivot(Eigen::Index r, Eigen::Index col) {
    t_.row(r) /= t_(r, col);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    t_(r, col) = 1.0;
    basis_[r] = static_cast<int>(col);
  }

  // Bland's rule iterations over columns [0, limit). Returns the status.
  Status iterate(Eigen::Index limit, int& iterations, int max_iterations) {
    while (true) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < limit; ++j)
        if (t_(m_, j) < -kCostTol) {
          enter = j;
          break;
        }
      if (enter < 0) return Status::Optimal;
      if (iterations >= max_iterations) return Status::IterationLimit;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i)
        if (t_(i, enter) > kPivotTol) best = std::min(best, t_(i, rhs()) / t_(i, enter));
      // Among (near-)tied ratios, the lowest basic index leaves.
      Eigen::Index leave = -1;
      const double slack = 1e-12 * (1.0 + std::abs(best));
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double a = t_(i, enter);
        if (a <= kPivotTol || t_(i, rhs()) / a > best + slack) continue;
        if (leave < 0 || basis_[i] < basis_[leave]) leave = i;
      }
      if (leave < 0) return Status::Unbounded;
      pivot(leave, enter);
      ++iterations;
    }
  }

 private:
  Eigen::Index m_;
  Eigen::Index n_;
  Eigen::MatrixXd t_;
  std::vector<int> basis_;
};

}  // namespace

Result solve(const Eigen::MatrixXd& A_in, const Eigen::VectorXd& b_in, const Eigen::VectorXd& c, int max_iterations) {
  const Eigen::Index m = A_in.rows(), n = A_in.cols();
  if (b_in.size() != m || c.size() != n) throw ShapeMismatch("lp: inconsistent problem dimensions");
  Eigen::MatrixXd A = A_in;
  Eigen::VectorXd b = b_in;
  for (Eigen::Index i = 0; i < m; ++i)
    if (b(i) < 0.0) {
      A.row(i) *= -1.0;
      b(i) = -b(i);
    }

  Result res;
  Tableau tab(A, b);
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.tail(m).setOnes();
  tab.price(phase1);
  Status st = tab.iterate(n + m, res.iterations, max_iterations);
  if (st == Status::IterationLimit) {
    res.status = st;
    return res;
  }
  const double scale = 1.0 + (b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
  if (-tab.table()(m, n + m) > 1e-9 * scale) {
    res.status = Status::Infeasible;
    return res;
  }
  // Drive artificials out of the basis; rows where that is impossible are redundant.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis()[i] < n) continue;
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(tab.table()(i, j)) > 1e-9) {
        best = j;
        break;
      }
    if (best >= 0) tab.pivot(i, best);
  }

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.head(n) = c;
  tab.price(phase2);
  st = tab.iterate(n, res.iterations, max_iterations);
  res.status = st;
  if (st != Status::Optimal) return res;

  res.basis = tab.basis();
  res.min_reduced_cost = n > 0 ? tab.table().row(m).head(n).minCoeff() : 0.0;

  // Canonical recomputation from the basis set.
  std::vector<int> cols = res.basis;
  std::sort(cols.begin(), cols.end());
  Eigen::MatrixXd AB(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const int j = cols[k];
    if (j < n)
      AB.col(k) = A.col(j);
    else {
      AB.col(k).setZero();
      AB(j - n, k) = 1.0;
    }
  }
  const Eigen::VectorXd xb = AB.fullPivLu().solve(b);
  res.x.assign(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index k = 0; k < m; ++k) {
    const int j = cols[k];
    if (j >= n) continue;
    // Basic values within rounding of zero are degenerate zeros.
    const double v = xb(k);
    res.x[j] = std::abs(v) <= 1e-12 * scale ? 0.0 : std::max(v, 0.0);
  }
  res.objective = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    if (res.x[j] != 0.0) res.objective += c(j) * res.x[j];
  const Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(res.x.data(), n);
  res.max_violation = m > 0 ? (A_in * xv - b_in).cwiseAbs().maxCoeff() : 0.0;
  return res;
}

}  // namespace donut::lp
