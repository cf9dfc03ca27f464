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

#include "donut/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

namespace donut::stats {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double mu = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  return variance(x) * static_cast<double>(x.size()) / static_cast<double>(x.size() - 1);
}

double median(std::span<const double> x) { return quantile(x, 0.5); }

double quantile(std::span<const double> x, double p) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

Series acf(std::span<const double> x, int max_lag) {
  Series out(static_cast<std::size_t>(std::max(max_lag, 0)), 0.0);
  const std::size_t n = x.size();
  if (n < 2) return out;
  const double mu = mean(x);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mu) * (v - mu);
  if (c0 <= 0.0) return out;
  for (int k = 1; k <= max_lag; ++k) {
    if (static_cast<std::size_t>(k) >= n) break;
    double ck = 0.0;
    for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t) ck += (x[t] - mu) * (x[t - k] - mu);
    out[k - 1] = ck / c0;
  }
  return out;
}

Series pacf(std::span<const double> x, int max_lag) {
  Series out(static_cast<std::size_t>(std::max(max_lag, 0)), 0.0);
  const int usable = std::min<int>(max_lag, static_cast<int>(x.size()) - 1);
  if (usable < 1) return out;
  const Series r = acf(x, usable);
  std::vector<double> phi(usable + 1, 0.0), prev(usable + 1, 0.0);
  for (int k = 1; k <= usable; ++k) {
    double num = r[k - 1];
    double den = 1.0;
    for (int j = 1; j < k; ++j) {
      num -= prev[j] * r[k - j - 1];
      den -= prev[j] * r[j - 1];
    }
    if (std::abs(den) < 1e-14) break;
    phi[k] = num / den;
    for (int j = 1; j < k; ++j) phi[j] = prev[j] - phi[k] * prev[k - j];
    out[k - 1] = phi[k];
    prev = phi;
  }
  return out;
}

Series diff(std::span<const double> x, int lag) {
  Series out;
  if (x.size() <= static_cast<std::size_t>(lag)) return out;
  out.reserve(x.size() - lag);
  for (std::size_t t = static_cast<std::size_t>(lag); t < x.size(); ++t) out.push_back(x[t] - x[t - lag]);
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  const double mx = mean(x.first(n)), my = mean(y.first(n));
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

Series centered_moving_average(std::span<const double> x, int order) {
  const std::size_t n = x.size();
  Series out(n, std::numeric_limits<double>::quiet_NaN());
  if (order < 1 || n < static_cast<std::size_t>(order) + (order % 2 == 0 ? 1 : 0)) return out;
  if (order % 2 == 1) {
    const int half = order / 2;
    for (std::size_t t = half; t + half < n; ++t) {
      double s = 0.0;
      for (int k = -half; k <= half; ++k) s += x[t + k];
      out[t] = s / order;
    }
  } else {
    const int half = order / 2;
    for (std::size_t t = half; t + half < n; ++t) {
      double s = 0.5 * (x[t - half] + x[t + half]);
      for (int k = -half + 1; k <= half - 1; ++k) s += x[t + k];
      out[t] = s / order;
    }
  }
  return out;
}

LineFit ols_line(std::span<const double> y) {
  const double n = static_cast<double>(y.size());
  LineFit fit;
  if (y.empty()) return fit;
  if (y.size() == 1) {
    fit.intercept = y[0];
    return fit;
  }
  double st = 0.0, sy = 0.0, sty = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = static_cast<double>(i + 1);
    st += t;
    sy += y[i];
    sty += t * y[i];
    stt += t * t;
  }
  fit.slope = (n * sty - st * sy) / (n * stt - st * st);
  fit.intercept = sy / n - fit.slope * st / n;
  return fit;
}

RegressionResult least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  RegressionResult res;
  if (X.rows() < X.cols() || X.rows() == 0) return res;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) return res;
  res.coef = qr.solve(y);
  res.residuals = y - X * res.coef;
  res.rss = res.residuals.squaredNorm();
  const double ybar = y.mean();
  const double tss = (y.array() - ybar).square().sum();
  res.r2 = tss > 0.0 ? 1.0 - res.rss / tss : 0.0;
  res.ok = res.coef.allFinite();
  return res;
}

double student_t_cdf(double t, double nu) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  boost::math::students_t dist(nu);
  return boost::math::cdf(dist, t);
}

TTest one_sample_t(std::span<const double> x, double mu0) {
  TTest out;
  out.n = x.size();
  out.mean = mean(x);
  if (x.size() < 2) return out;
  const double sd = std::sqrt(sample_variance(x));
  const double diff = out.mean - mu0;
  if (sd <= 0.0) {
    if (diff == 0.0) return out;
    out.t = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    out.p_two_sided = std::numeric_limits<double>::min();
    return out;
  }
  out.t = diff / (sd / std::sqrt(static_cast<double>(x.size())));
  const double tail = 1.0 - student_t_cdf(std::abs(out.t), static_cast<double>(x.size() - 1));
  out.p_two_sided = std::clamp(2.0 * tail, std::numeric_limits<double>::min(), 1.0);
  return out;
}

}  // namespace donut::stats
