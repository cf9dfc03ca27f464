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

#include "donut/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "donut/errors.hpp"
#include "donut/numeric.hpp"

namespace donut::metrics {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw LengthMismatch("actual has " + std::to_string(a.size()) + " values, forecast has " +
                         std::to_string(b.size()));
}

}  // namespace

double smape(std::span<const double> actual, std::span<const double> forecast) {
  require_same_length(actual, forecast);
  if (actual.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t t = 0; t < actual.size(); ++t) {
    const double den = std::abs(actual[t]) + std::abs(forecast[t]);
    if (den > 0.0) s += std::abs(actual[t] - forecast[t]) / den;
  }
  return 200.0 * s / static_cast<double>(actual.size());
}

double mase_scale(std::span<const double> train, int m) {
  if (m < 1 || train.size() <= static_cast<std::size_t>(m)) throw NMustExceedM();
  double s = 0.0;
  for (std::size_t t = static_cast<std::size_t>(m); t < train.size(); ++t) s += std::abs(train[t] - train[t - m]);
  return s / static_cast<double>(train.size() - m);
}

double mase_with_scale(double scale, std::span<const double> actual, std::span<const double> forecast) {
  require_same_length(actual, forecast);
  if (!(scale > 0.0)) throw DegenerateScale();
  if (actual.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t t = 0; t < actual.size(); ++t) s += std::abs(actual[t] - forecast[t]);
  return s / static_cast<double>(actual.size()) / scale;
}

double mase(std::span<const double> train, int m, std::span<const double> actual, std::span<const double> forecast) {
  return mase_with_scale(mase_scale(train, m), actual, forecast);
}

bool seasonality_test(std::span<const double> train, int m) {
  if (m <= 1 || train.size() < 3 * static_cast<std::size_t>(m)) return false;
  const auto r = stats::acf(train, m);
  double cum = 1.0;
  for (int k = 1; k < m; ++k) cum += 2.0 * r[k - 1] * r[k - 1];
  const double limit = 1.645 / std::sqrt(static_cast<double>(train.size())) * std::sqrt(cum);
  const double am = std::abs(r[m - 1]);
  return std::isfinite(am) && am > limit;
}

std::vector<double> multiplicative_indices(std::span<const double> train, int m) {
  std::vector<double> idx(static_cast<std::size_t>(m), 1.0);
  const auto trend = stats::centered_moving_average(train, m);
  std::vector<double> sum(m, 0.0);
  std::vector<int> count(m, 0);
  for (std::size_t t = 0; t < train.size(); ++t) {
    if (std::isnan(trend[t]) || trend[t] == 0.0) continue;
    sum[t % m] += train[t] / trend[t];
    count[t % m] += 1;
  }
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    if (count[i] == 0) return std::vector<double>(m, 1.0);
    idx[i] = sum[i] / count[i];
    total += idx[i];
  }
  const double avg = total / m;
  if (!(avg > 0.0) || !std::isfinite(avg)) return std::vector<double>(m, 1.0);
  for (auto& v : idx) v /= avg;
  return idx;
}

std::vector<double> naive2(std::span<const double> train, int m, int h) {
  std::vector<double> out(static_cast<std::size_t>(std::max(h, 0)), train.empty() ? 0.0 : train.back());
  if (train.empty() || !seasonality_test(train, m)) return out;
  const auto idx = multiplicative_indices(train, m);
  const std::size_t n = train.size();
  const double last_phase = idx[(n - 1) % m];
  if (!(std::abs(last_phase) > 0.0)) return out;
  const double level = train[n - 1] / last_phase;
  std::vector<double> seasonal(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) seasonal[k] = level * idx[(n + k) % m];
  if (std::all_of(seasonal.begin(), seasonal.end(), [](double v) { return std::isfinite(v); })) return seasonal;
  return out;
}

double owa_single(const SeriesScore& s) {
  return 0.5 * (s.smape / std::max(s.smape_naive2, kOwaFloor) + s.mase / std::max(s.mase_naive2, kOwaFloor));
}

LossReport owa(std::span<const SeriesScore> scores, Aggregation aggregation) {
  LossReport r;
  if (scores.empty()) return r;
  const double n = static_cast<double>(scores.size());
  double sm = 0.0, ms = 0.0, sm2 = 0.0, ms2 = 0.0, per = 0.0;
  for (const auto& s : scores) {
    sm += s.smape;
    ms += s.mase;
    sm2 += s.smape_naive2;
    ms2 += s.mase_naive2;
    per += owa_single(s);
  }
  r.smape = sm / n;
  r.mase = ms / n;
  if (aggregation == Aggregation::Pooled) {
    r.owa = 0.5 * (r.smape / std::max(sm2 / n, kOwaFloor) + r.mase / std::max(ms2 / n, kOwaFloor));
  } else {
    r.owa = per / n;
  }
  return r;
}

}  // namespace donut::metrics
