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

namespace donut::metrics {

inline constexpr double kOwaFloor = 1e-9;

/// (200/h) * sum |y - f| / (|y| + |f|); 0/0 terms count as 0.
double smape(std::span<const double> actual, std::span<const double> forecast);

/// In-sample seasonal-naive MAE: (1/(n-m)) * sum_{t>m} |y_t - y_{t-m}|.
/// Throws NMustExceedM when n <= m.
double mase_scale(std::span<const double> train, int m);

/// mean |y - f| / mase_scale; throws DegenerateScale when the scale is 0.
double mase(std::span<const double> train, int m, std::span<const double> actual, std::span<const double> forecast);

/// MASE against a precomputed scale.
double mase_with_scale(double scale, std::span<const double> actual, std::span<const double> forecast);

/// M4 seasonality test: |acf(m)| against the 90% band built from lower lags.
bool seasonality_test(std::span<const double> train, int m);

/// Multiplicative seasonal indices from classical decomposition (mean 1).
std::vector<double> multiplicative_indices(std::span<const double> train, int m);

/// Naive forecast on the seasonally adjusted series when the series tests
/// seasonal, plain naive otherwise.
std::vector<double> naive2(std::span<const double> train, int m, int h);

/// Per-series scores of a method alongside the Naive2 reference.
struct SeriesScore {
  double smape = 0.0;
  double mase = 0.0;
  double smape_naive2 = 0.0;
  double mase_naive2 = 0.0;
};

struct LossReport {
  double smape = 0.0;
  double mase = 0.0;
  double owa = 0.0;
};

enum class Aggregation { PerSeries, Pooled };

/// 0.5 * (sMAPE/sMAPE_naive2 + MASE/MASE_naive2) for one series, each
/// denominator floored at kOwaFloor.
double owa_single(const SeriesScore& s);

/// Pooled: averages sMAPE and MASE over series before the ratio.
/// PerSeries: mean of the per-series ratios.
LossReport owa(std::span<const SeriesScore> scores, Aggregation aggregation);

}  // namespace donut::metrics
