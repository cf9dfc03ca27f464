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

#include <span>
#include <vector>

#include <Eigen/Dense>

// Small statistics toolkit shared by the forecasters, features and analysis code.
namespace donut::stats {

using Series = std::vector<double>;

double mean(std::span<const double> x);

/// Population variance (denominator n).
double variance(std::span<const double> x);

/// Sample variance (denominator n - 1); 0 for n < 2.
double sample_variance(std::span<const double> x);

double median(std::span<const double> x);

/// Linear-interpolated sample quantile (R type 7).
double quantile(std::span<const double> x, double p);

/// Autocorrelations at lags 1..max_lag (lags >= n yield 0).
Series acf(std::span<const double> x, int max_lag);

/// Partial autocorrelations at lags 1..max_lag via Durbin-Levinson.
Series pacf(std::span<const double> x, int max_lag);

Series diff(std::span<const double> x, int lag = 1);

double pearson(std::span<const double> x, std::span<const double> y);

/// Centered moving average; 2xm for even orders. Entries where the window
/// does not fit are NaN.
Series centered_moving_average(std::span<const double> x, int order);

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

/// OLS of y on t = 1..n using the closed-form estimators.
LineFit ols_line(std::span<const double> y);

struct RegressionResult {
  Eigen::VectorXd coef;
  Eigen::VectorXd residuals;
  double rss = 0.0;
  double r2 = 0.0;
  bool ok = false;
};

/// Least squares y ~ X (X already carries an intercept column if wanted).
RegressionResult least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Student t distribution function with nu degrees of freedom.
double student_t_cdf(double t, double nu);

/// One-sample t statistic against `mu0` with its two-sided p-value.
struct TTest {
  double mean = 0.0;
  double t = 0.0;
  double p_two_sided = 1.0;
  std::size_t n = 0;
};
TTest one_sample_t(std::span<const double> x, double mu0);

}  // namespace donut::stats
