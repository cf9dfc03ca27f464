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

#include "donut/model_pool.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "donut/errors.hpp"
#include "donut/io.hpp"
#include "donut/numeric.hpp"

namespace donut {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

constexpr std::array<std::string_view, kNumModels> kNames = {
    "Naive",    "SeasonalNaive", "RWDrift",  "Theta",       "SES",       "Holt",       "HoltWinters",
    "ArAic",    "DecomposeAr",   "OlsTrend", "OrnsteinUhlenbeck", "LgtPoint", "Quantile99", "Quantile01"};

constexpr std::array<double, 11> kSmoothingGrid = {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
constexpr std::array<double, 5> kLgtStructure = {0.0, 0.25, 0.5, 0.75, 1.0};
constexpr std::array<double, 9> kLgtRates = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

}  // namespace

std::string_view model_name(ModelId id) { return kNames[model_index(id)]; }

ModelId parse_model(std::string_view name) {
  for (std::size_t i = 0; i < kNumModels; ++i)
    if (kNames[i] == name) return kAllModels[i];
  throw ParseError("unknown model '" + std::string(name) + "'");
}

std::span<const double> smoothing_grid() { return kSmoothingGrid; }
std::span<const double> lgt_structure_grid() { return kLgtStructure; }
std::span<const double> lgt_rate_grid() { return kLgtRates; }

// ---- simple benchmarks -------------------------------------------------------

std::vector<double> naive_forecast(std::span<const double> train, int h) {
  return std::vector<double>(static_cast<std::size_t>(h), train.empty() ? 0.0 : train.back());
}

std::vector<double> seasonal_naive_forecast(std::span<const double> train, int m, int h) {
  if (m <= 1 || train.size() < static_cast<std::size_t>(m)) return naive_forecast(train, h);
  std::vector<double> out(static_cast<std::size_t>(h));
  const std::size_t n = train.size();
  for (int k = 0; k < h; ++k) out[k] = train[n - m + (k % m)];
  return out;
}

std::vector<double> rw_drift_forecast(std::span<const double> train, int h) {
  const std::size_t n = train.size();
  if (n < 2) return naive_forecast(train, h);
  const double drift = (train[n - 1] - train[0]) / static_cast<double>(n - 1);
  std::vector<double> out(static_cast<std::size_t>(h));
  for (int k = 0; k < h; ++k) out[k] = train[n - 1] + drift * (k + 1);
  return out;
}

// ---- exponential smoothing family ------------------------------------------

namespace {

double ses_run(std::span<const double> y, double alpha, double* level_out) {
  double level = y[0], sse = 0.0;
  for (std::size_t t = 1; t < y.size(); ++t) {
    const double e = y[t] - level;
    sse += e * e;
    level += alpha * e;
  }
  if (level_out) *level_out = level;
  return sse;
}

double holt_run(std::span<const double> y, double alpha, double beta, double* level_out, double* trend_out) {
  double level = y[0], trend = y[1] - y[0], sse = 0.0;
  for (std::size_t t = 1; t < y.size(); ++t) {
    const double pred = level + trend;
    const double e = y[t] - pred;
    sse += e * e;
    const double next_level = pred + alpha * e;
    trend = beta * (next_level - level) + (1.0 - beta) * trend;
    level = next_level;
  }
  if (level_out) *level_out = level;
  if (trend_out) *trend_out = trend;
  return sse;
}

struct SeasonalInit {
  double level;
  double trend;
  std::vector<double> season;
};

// Level at the end of the first season, trend from the first two season
// means; exact for trend + fixed additive pattern.
SeasonalInit seasonal_init(std::span<const double> y, int m) {
  double mean1 = 0.0, mean2 = 0.0;
  for (int i = 0; i < m; ++i) {
    mean1 += y[i];
    mean2 += y[m + i];
  }
  mean1 /= m;
  mean2 /= m;
  SeasonalInit init;
  init.trend = (mean2 - mean1) / m;
  init.level = mean1 + init.trend * (m - 1) / 2.0;
  init.season.resize(m);
  for (int i = 0; i < m; ++i) init.season[i] = y[i] - (init.level - init.trend * (m - 1 - i));
  return init;
}

double hw_run(std::span<const double> y, int m, double alpha, double beta, double gamma, SeasonalInit* state) {
  SeasonalInit s = seasonal_init(y, m);
  double sse = 0.0;
  for (std::size_t t = static_cast<std::size_t>(m); t < y.size(); ++t) {
    double& slot = s.season[t % m];
    const double pred = s.level + s.trend + slot;
    const double e = y[t] - pred;
    sse += e * e;
    const double next_level = alpha * (y[t] - slot) + (1.0 - alpha) * (s.level + s.trend);
    s.trend = beta * (next_level - s.level) + (1.0 - beta) * s.trend;
    slot = gamma * (y[t] - next_level) + (1.0 - gamma) * slot;
    s.level = next_level;
  }
  if (state) *state = std::move(s);
  return sse;
}

}  // namespace

SmoothingFit ses_fit(std::span<const double> train, int h) {
  SmoothingFit fit;
  if (train.empty()) return fit;
  double best = std::numeric_limits<double>::infinity();
  for (double a : kSmoothingGrid) {
    const double sse = ses_run(train, a, nullptr);
    if (sse < best) {
      best = sse;
      fit.alpha = a;
    }
  }
  double level = 0.0;
  fit.sse = ses_run(train, fit.alpha, &level);
  fit.forecast.assign(static_cast<std::size_t>(h), level);
  return fit;
}

SmoothingFit holt_fit(std::span<const double> train, int h) {
  if (train.size() < 2) return ses_fit(train, h);
  SmoothingFit fit;
  double best = std::numeric_limits<double>::infinity();
  for (double a : kSmoothingGrid) {
    for (double b : kSmoothingGrid) {
      const double sse = holt_run(train, a, b, nullptr, nullptr);
      if (sse < best) {
        best = sse;
        fit.alpha = a;
        fit.beta = b;
      }
    }
  }
  double level = 0.0, trend = 0.0;
  fit.sse = holt_run(train, fit.alpha, fit.beta, &level, &trend);
  fit.forecast.resize(static_cast<std::size_t>(h));
  for (int k = 0; k < h; ++k) fit.forecast[k] = level + trend * (k + 1);
  return fit;
}

SmoothingFit holt_winters_fit(std::span<const double> train, int m, int h) {
  if (m <= 1 || train.size() < 2 * static_cast<std::size_t>(m) + 1) return holt_fit(train, h);
  SmoothingFit fit;
  double best = std::numeric_limits<double>::infinity();
  for (double a : kSmoothingGrid)
    for (double b : kSmoothingGrid)
      for (double g : kSmoothingGrid) {
        const double sse = hw_run(train, m, a, b, g, nullptr);
        if (sse < best) {
          best = sse;
          fit.alpha = a;
          fit.beta = b;
          fit.gamma = g;
        }
      }
  SeasonalInit state;
  fit.sse = hw_run(train, m, fit.alpha, fit.beta, fit.gamma, &state);
  const std::size_t n = train.size();
  fit.forecast.resize(static_cast<std::size_t>(h));
  for (int k = 0; k < h; ++k) {
    const std::size_t t = n + static_cast<std::size_t>(k % m);
    fit.forecast[k] = state.level + state.trend * (k + 1) + state.season[t % m];
  }
  return fit;
}

std::vector<double> theta_forecast(std::span<const double> train, int h) {
  const std::size_t n = train.size();
  const auto line = stats::ols_line(train);
  std::vector<double> theta_line(n);
  for (std::size_t i = 0; i < n; ++i) theta_line[i] = 2.0 * train[i] - (line.intercept + line.slope * (i + 1.0));
  const auto ses = ses_fit(theta_line, h);
  std::vector<double> out(static_cast<std::size_t>(h));
  for (int k = 0; k < h; ++k) {
    const double t = static_cast<double>(n + k + 1);
    out[k] = 0.5 * (ses.forecast[k] + line.intercept + line.slope * t);
  }
  return out;
}

// ---- autoregressive family ------------------------------------------------------

namespace {

stats::RegressionResult ar_regression(std::span<const double> x, int p, std::size_t start) {
  const std::size_t rows = x.size() - start;
  Eigen::MatrixXd X(rows, p + 1);
  Eigen::VectorXd y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = start + r;
    y(r) = x[t];
    X(r, 0) = 1.0;
    for (int j = 1; j <= p; ++j) X(r, j) = x[t - j];
  }
  return stats::least_squares(X, y);
}

}  // namespace

ArFit ar_aic_fit(std::span<const double> x, int max_p) {
  const int n = static_cast<int>(x.size());
  const int cap = std::max(0, std::min(max_p, (n - 2) / 3));
  ArFit best;
  best.aic = std::numeric_limits<double>::infinity();
  best.p = -1;
  const auto start = static_cast<std::size_t>(cap);
  const double rows = static_cast<double>(n - cap);
  for (int p = 0; p <= cap; ++p) {
    auto reg = ar_regression(x, p, start);
    if (!reg.ok) continue;
    const double sigma2 = reg.rss / rows;
    const double aic = (sigma2 > 0.0 ? rows * std::log(sigma2) : -std::numeric_limits<double>::infinity()) +
                       2.0 * (p + 1);
    if (best.p < 0 || aic < best.aic) {
      best.aic = aic;
      best.p = p;
    }
  }
  if (best.p < 0) throw Error("AR fit failed for every order");
  auto reg = ar_regression(x, best.p, static_cast<std::size_t>(best.p));
  if (!reg.ok) reg = ar_regression(x, best.p, start);
  if (!reg.ok) throw Error("AR refit failed");
  best.intercept = reg.coef(0);
  best.phi.assign(reg.coef.data() + 1, reg.coef.data() + reg.coef.size());
  best.residuals.assign(reg.residuals.data(), reg.residuals.data() + reg.residuals.size());
  best.sigma2 = reg.rss / static_cast<double>(reg.residuals.size());
  return best;
}

std::vector<double> ar_forecast(const ArFit& fit, std::span<const double> x, int h) {
  std::vector<double> hist(x.begin(), x.end());
  std::vector<double> out(static_cast<std::size_t>(h));
  for (int k = 0; k < h; ++k) {
    double v = fit.intercept;
    for (int j = 1; j <= fit.p; ++j) v += fit.phi[j - 1] * hist[hist.size() - j];
    out[k] = v;
    hist.push_back(v);
  }
  return out;
}

std::vector<double> additive_seasonal_indices(std::span<const double> x, int m) {
  std::vector<double> idx(static_cast<std::size_t>(std::max(m, 1)), 0.0);
  if (m <= 1) return idx;
  const auto trend = stats::centered_moving_average(x, m);
  std::vector<double> sum(m, 0.0);
  std::vector<int> count(m, 0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (std::isnan(trend[t])) continue;
    sum[t % m] += x[t] - trend[t];
    count[t % m] += 1;
  }
  for (int i = 0; i < m; ++i) {
    if (count[i] == 0) return std::vector<double>(m, 0.0);
    idx[i] = sum[i] / count[i];
  }
  const double mu = stats::mean(idx);
  for (auto& v : idx) v -= mu;
  return idx;
}

std::vector<double> decompose_ar_forecast(std::span<const double> train, int m, int h) {
  const std::size_t n = train.size();
  if (m <= 1 || n < 2 * static_cast<std::size_t>(m) + 1) {
    auto fit = ar_aic_fit(train);
    return ar_forecast(fit, train, h);
  }
  const auto idx = additive_seasonal_indices(train, m);
  std::vector<double> adjusted(n);
  for (std::size_t t = 0; t < n; ++t) adjusted[t] = train[t] - idx[t % m];
  auto fit = ar_aic_fit(adjusted);
  auto out = ar_forecast(fit, adjusted, h);
  for (int k = 0; k < h; ++k) out[k] += idx[(n + k) % m];
  return out;
}

std::vector<double> ols_trend_forecast(std::span<const double> train, int h) {
  const auto line = stats::ols_line(train);
  const std::size_t n = train.size();
  std::vector<double> out(static_cast<std::size_t>(h));
  for (int k = 0; k < h; ++k) out[k] = line.intercept + line.slope * static_cast<double>(n + k + 1);
  return out;
}

// ---- Ornstein-Uhlenbeck ---------------------------------------------------------

OuParams ou_fit(std::span<const double> train) {
  OuParams p;
  const std::size_t n = train.size();
  p.m_level = stats::mean(train);
  if (n < 3) return p;
  const std::size_t rows = n - 1;
  std::vector<double> lagged(train.begin(), train.end() - 1);
  if (stats::variance(lagged) <= 0.0) {
    p.m_level = train.back();
    return p;
  }
  Eigen::MatrixXd X(rows, 2);
  Eigen::VectorXd dy(rows);
  for (std::size_t t = 1; t < n; ++t) {
    X(t - 1, 0) = 1.0;
    X(t - 1, 1) = train[t - 1];
    dy(t - 1) = train[t] - train[t - 1];
  }
  auto reg = stats::least_squares(X, dy);
  if (!reg.ok) throw Error("OU regression failed");
  const double gamma_raw = -reg.coef(1);
  if (!std::isfinite(gamma_raw)) throw Error("OU reversion estimate is not finite");
  p.sigma = std::sqrt(reg.rss / static_cast<double>(rows));
  if (gamma_raw > 0.0) {
    p.m_level = reg.coef(0) / gamma_raw;
    p.gamma = std::min(gamma_raw, 1.0);
  } else {
    p.gamma = 0.0;
  }
  return p;
}

std::vector<double> ou_forecast(std::span<const double> train, int h) {
  const auto p = ou_fit(train);
  std::vector<double> out(static_cast<std::size_t>(h));
  double y = train.back();
  for (int k = 0; k < h; ++k) {
    y = y + p.gamma * (p.m_level - y);
    out[k] = y;
  }
  return out;
}

// ---- local and global trend (point estimate) ------------------------------------

namespace {

constexpr double kLgtLevelFloor = 1e-12;

inline double level_power(double level, double lambda) {
  const double l = std::max(level, kLgtLevelFloor);
  if (lambda == 0.0) return 1.0;
  if (lambda == 1.0) return l;
  if (lambda == 0.5) return std::sqrt(l);
  if (lambda == 0.25) return std::sqrt(std::sqrt(l));
  if (lambda == 0.75) return std::sqrt(l) * std::sqrt(std::sqrt(l));
  return std::pow(l, lambda);
}

}  // namespace

bool lgt_seasonal_enabled(std::size_t n, int m) { return m > 1 && n >= 2 * static_cast<std::size_t>(m) + 2; }

double lgt_sse(std::span<const double> y, int m, const LgtParams& p, double abandon_above, LgtState* final_state) {
  const std::size_t n = y.size();
  const bool seasonal = p.seasonal && lgt_seasonal_enabled(n, m);
  double level, trend;
  std::vector<double> ring;
  std::size_t start;
  if (seasonal) {
    auto init = seasonal_init(y, m);
    level = init.level;
    trend = init.trend;
    ring = std::move(init.season);
    start = static_cast<std::size_t>(m);
  } else {
    level = y[0];
    trend = y[1] - y[0];
    start = 1;
  }
  double sse = 0.0;
  for (std::size_t t = start; t < n; ++t) {
    const double s_old = seasonal ? ring[t % m] : 0.0;
    const double mu = level + p.xi1 * trend + p.xi2 * level_power(level, p.lambda);
    const double e = y[t] - (mu + s_old);
    sse += e * e;
    if (!(sse <= abandon_above)) return std::numeric_limits<double>::infinity();
    const double next_level = p.level_rate * (y[t] - s_old) + (1.0 - p.level_rate) * mu;
    trend = p.trend_rate * (next_level - level) + (1.0 - p.trend_rate) * trend;
    level = next_level;
    if (seasonal) ring[t % m] = p.season_rate * (y[t] - level) + (1.0 - p.season_rate) * s_old;
  }
  if (final_state) {
    final_state->level = level;
    final_state->trend = trend;
    final_state->season.clear();
    if (seasonal) {
      final_state->season.resize(m);
      for (int j = 0; j < m; ++j) final_state->season[j] = ring[(n + j) % m];
    }
  }
  return sse;
}

std::vector<double> lgt_forecast_from(const LgtParams& p, const LgtState& state, std::size_t, int m, int h) {
  std::vector<double> out(static_cast<std::size_t>(h));
  double level = state.level;
  for (int k = 0; k < h; ++k) {
    level = level + p.xi1 * state.trend + p.xi2 * level_power(level, p.lambda);
    const double s = state.season.empty() ? 0.0 : state.season[k % m];
    out[k] = level + s;
  }
  return out;
}

LgtFit lgt_fit(std::span<const double> train, int m, int h) {
  const bool seasonal = lgt_seasonal_enabled(train.size(), m);
  const std::array<double, 1> no_season = {0.0};
  const std::span<const double> season_rates = seasonal ? std::span<const double>(kLgtRates) : no_season;

  // Seed the bound with a Holt-like lattice point so early abandoning bites;
  // the scan is exhaustive, so the result is the lattice minimizer.
  LgtParams arg{1.0, 0.0, 0.0, 0.5, 0.1, seasonal ? 0.1 : 0.0, seasonal};
  double arg_sse = lgt_sse(train, m, arg);
  if (!std::isfinite(arg_sse)) arg_sse = std::numeric_limits<double>::max();
  for (double xi1 : kLgtStructure)
    for (double xi2 : kLgtStructure)
      for (double lambda : kLgtStructure) {
        if (xi2 == 0.0 && lambda != 0.0) continue;  // lambda is inert without the global term
        for (double a : kLgtRates)
          for (double b : kLgtRates)
            for (double g : season_rates) {
              const LgtParams p{xi1, xi2, lambda, a, b, g, seasonal};
              const double sse = lgt_sse(train, m, p, arg_sse);
              if (sse < arg_sse) {
                arg = p;
                arg_sse = sse;
              }
            }
      }
  LgtFit fit;
  fit.params = arg;
  LgtState state;
  fit.sse = lgt_sse(train, m, arg, std::numeric_limits<double>::infinity(), &state);
  fit.forecast = lgt_forecast_from(arg, state, train.size(), m, h);
  return fit;
}

// ---- quantile trend ---------------------------------------------------------------

double pinball_loss(std::span<const double> y, double a, double b, double tau) {
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - a - b * static_cast<double>(i + 1);
    loss += r >= 0.0 ? tau * r : (tau - 1.0) * r;
  }
  return loss;
}

namespace {

// Smallest v with cumulative weight >= tau * total: a minimizer of
// sum_i w_i rho_tau(v_i - v).
double weighted_quantile(std::vector<std::pair<double, double>> vw, double tau) {
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (auto& p : vw) total += p.second;
  double cum = 0.0;
  for (auto& p : vw) {
    cum += p.second;
    if (cum >= tau * total) return p.first;
  }
  return vw.back().first;
}

}  // namespace

QuantileFit quantile_trend_fit(std::span<const double> y, double tau) {
  const std::size_t n = y.size();
  QuantileFit fit;
  if (n == 0) return fit;
  const auto ols = stats::ols_line(y);
  fit.a = ols.intercept;
  fit.b = ols.slope;
  if (n == 1) {
    fit.b = 0.0;
    fit.converged = true;
    return fit;
  }
  const double scale = std::max(std::sqrt(stats::variance(y)), 1e-300);
  const double floor = 1e-9 * scale;
  double loss = pinball_loss(y, fit.a, fit.b, tau);

  // IRLS on the majorized absolute loss.
  for (fit.iterations = 1; fit.iterations <= 200; ++fit.iterations) {
    double sw = 0.0, swt = 0.0, swtt = 0.0, swy = 0.0, swty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i + 1);
      const double r = y[i] - fit.a - fit.b * t;
      const double w = (r >= 0.0 ? tau : 1.0 - tau) / std::max(std::abs(r), floor);
      sw += w;
      swt += w * t;
      swtt += w * t * t;
      swy += w * y[i];
      swty += w * t * y[i];
    }
    const double det = sw * swtt - swt * swt;
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) break;
    const double nb = (sw * swty - swt * swy) / det;
    const double na = (swy - nb * swt) / sw;
    const double nl = pinball_loss(y, na, nb, tau);
    if (!std::isfinite(nl)) break;
    const double change = std::abs(loss - nl);
    if (nl <= loss) {
      fit.a = na;
      fit.b = nb;
    }
    const bool done = change <= 1e-10 * (1.0 + std::min(loss, nl));
    loss = std::min(loss, nl);
    if (done) {
      fit.converged = true;
      break;
    }
  }

  // Polish: alternate exact one-dimensional minimizations, then try the
  // lines through pairs of points closest to the current fit.
  std::vector<std::pair<double, double>> buf(n);
  for (int round = 0; round < 10; ++round) {
    const double before = loss;
    for (int sweep = 0; sweep < 20; ++sweep) {
      for (std::size_t i = 0; i < n; ++i) buf[i] = {y[i] - fit.b * static_cast<double>(i + 1), 1.0};
      const double a = weighted_quantile(buf, tau);
      double l = pinball_loss(y, a, fit.b, tau);
      if (l < loss) {
        loss = l;
        fit.a = a;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i + 1);
        buf[i] = {(y[i] - fit.a) / t, t};
      }
      const double b = weighted_quantile(buf, tau);
      l = pinball_loss(y, fit.a, b, tau);
      if (l < loss) {
        loss = l;
        fit.b = b;
      } else {
        break;
      }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto resid = [&](std::size_t i) { return std::abs(y[i] - fit.a - fit.b * static_cast<double>(i + 1)); };
    const std::size_t k = std::min<std::size_t>(n, 12);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t i, std::size_t j) { return resid(i) < resid(j) || (resid(i) == resid(j) && i < j); });
    for (std::size_t u = 0; u < k; ++u)
      for (std::size_t v = u + 1; v < k; ++v) {
        const std::size_t i = order[u], j = order[v];
        const double ti = static_cast<double>(i + 1), tj = static_cast<double>(j + 1);
        const double b = (y[j] - y[i]) / (tj - ti);
        const double a = y[i] - b * ti;
        const double l = pinball_loss(y, a, b, tau);
        if (l < loss) {
          loss = l;
          fit.a = a;
          fit.b = b;
        }
      }
    if (!(loss < before)) {
      // A fixed point of the polish is a stationary vertex, whatever IRLS did.
      fit.converged = true;
      break;
    }
  }
  fit.loss = loss;
  return fit;
}

std::vector<double> quantile_trend_forecast(std::span<const double> train, int h, double tau) {
  const auto fit = quantile_trend_fit(train, tau);
  if (!fit.converged) throw Error("quantile regression did not converge");
  const std::size_t n = train.size();
  std::vector<double> out(static_cast<std::size_t>(h));
  for (int k = 0; k < h; ++k) out[k] = fit.a + fit.b * static_cast<double>(n + k + 1);
  return out;
}

// ---- dispatch ------------------------------------------------------------------------

ModelForecast fit_forecast(ModelId model, std::span<const double> train, int m, int h) {
  ModelForecast out;
  if (train.size() < 3) {
    out.values = naive_forecast(train, h);
    out.fallback = model != ModelId::Naive;
    return out;
  }
  try {
    switch (model) {
      case ModelId::Naive: out.values = naive_forecast(train, h); break;
      case ModelId::SeasonalNaive:
        if (m > 1 && train.size() < static_cast<std::size_t>(m)) throw Error("shorter than one season");
        out.values = seasonal_naive_forecast(train, m, h);
        break;
      case ModelId::RWDrift: out.values = rw_drift_forecast(train, h); break;
      case ModelId::Theta: out.values = theta_forecast(train, h); break;
      case ModelId::SES: out.values = ses_fit(train, h).forecast; break;
      case ModelId::Holt: out.values = holt_fit(train, h).forecast; break;
      case ModelId::HoltWinters: out.values = holt_winters_fit(train, m, h).forecast; break;
      case ModelId::ArAic: {
        auto fit = ar_aic_fit(train);
        out.values = ar_forecast(fit, train, h);
        break;
      }
      case ModelId::DecomposeAr: out.values = decompose_ar_forecast(train, m, h); break;
      case ModelId::OlsTrend: out.values = ols_trend_forecast(train, h); break;
      case ModelId::OrnsteinUhlenbeck: out.values = ou_forecast(train, h); break;
      case ModelId::LgtPoint: out.values = lgt_fit(train, m, h).forecast; break;
      case ModelId::Quantile99: out.values = quantile_trend_forecast(train, h, 0.99); break;
      case ModelId::Quantile01: out.values = quantile_trend_forecast(train, h, 0.01); break;
    }
    if (out.values.size() != static_cast<std::size_t>(h) || !all_finite(out.values))
      throw Error("non-finite forecast");
  } catch (const std::exception&) {
    out.values = naive_forecast(train, h);
    out.fallback = true;
  }
  return out;
}

ForecastMatrix forecast_all(const std::string& id, std::span<const double> train, int m, int h) {
  ForecastMatrix fm;
  fm.id = id;
  fm.h = h;
  fm.b.resize(kNumModels * static_cast<std::size_t>(h));
  for (std::size_t i = 0; i < kNumModels; ++i) {
    auto f = fit_forecast(kAllModels[i], train, m, h);
    std::copy(f.values.begin(), f.values.end(), fm.row(i).begin());
    fm.fallback[i] = f.fallback;
  }
  return fm;
}

std::string forecasts_csv(std::span<const ForecastMatrix> matrices) {
  std::string out;
  for (const auto& fm : matrices) {
    for (std::size_t i = 0; i < kNumModels; ++i) {
      out += fm.id;
      out.push_back(',');
      out += model_name(kAllModels[i]);
      for (double v : fm.row(i)) {
        out.push_back(',');
        out += io::format_double(v);
      }
      out += fm.fallback[i] ? ",1\n" : ",0\n";
    }
  }
  return out;
}

std::vector<ForecastMatrix> parse_forecasts_csv(std::string_view text) {
  std::vector<ForecastMatrix> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto cells = io::split_csv_line(line);
    if (cells.size() < 4) throw ParseError("forecast row too short");
    const auto model = parse_model(cells[1]);
    const int h = static_cast<int>(cells.size()) - 3;
    if (out.empty() || out.back().id != cells[0]) {
      ForecastMatrix fm;
      fm.id = cells[0];
      fm.h = h;
      fm.b.assign(kNumModels * static_cast<std::size_t>(h), std::numeric_limits<double>::quiet_NaN());
      out.push_back(std::move(fm));
    }
    auto& fm = out.back();
    if (fm.h != h) throw ParseError("inconsistent horizon for series '" + fm.id + "'");
    auto row = fm.row(model_index(model));
    for (int k = 0; k < h; ++k) row[k] = io::parse_double(cells[2 + k]);
    fm.fallback[model_index(model)] = cells.back() == "1";
  }
  for (const auto& fm : out)
    if (!all_finite(fm.b)) throw ParseError("series '" + fm.id + "' lacks some model rows");
  return out;
}

}  // namespace donut
