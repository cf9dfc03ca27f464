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

#include <array>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace donut {

/// The 14 forecasters in canonical order.
enum class ModelId {
  Naive,
  SeasonalNaive,
  RWDrift,
  Theta,
  SES,
  Holt,
  HoltWinters,
  ArAic,
  DecomposeAr,
  OlsTrend,
  OrnsteinUhlenbeck,
  LgtPoint,
  Quantile99,
  Quantile01,
};

inline constexpr std::size_t kNumModels = 14;

inline constexpr std::array<ModelId, kNumModels> kAllModels = {
    ModelId::Naive,       ModelId::SeasonalNaive, ModelId::RWDrift,  ModelId::Theta,
    ModelId::SES,         ModelId::Holt,          ModelId::HoltWinters, ModelId::ArAic,
    ModelId::DecomposeAr, ModelId::OlsTrend,      ModelId::OrnsteinUhlenbeck, ModelId::LgtPoint,
    ModelId::Quantile99,  ModelId::Quantile01};

/// The nine-model subset standing in for the FFORMA pool.
inline constexpr std::array<ModelId, 9> kFformaPool = {
    ModelId::Naive, ModelId::SeasonalNaive, ModelId::RWDrift,  ModelId::Theta,      ModelId::SES,
    ModelId::Holt,  ModelId::HoltWinters,   ModelId::ArAic,    ModelId::DecomposeAr};

std::string_view model_name(ModelId id);
ModelId parse_model(std::string_view name);
inline std::size_t model_index(ModelId id) { return static_cast<std::size_t>(id); }

struct ModelForecast {
  std::vector<double> values;
  bool fallback = false;
};

/// Fits `model` on `train` and forecasts h steps. Never throws: any failure
/// or non-finite output yields the naive forecast with `fallback` set.
ModelForecast fit_forecast(ModelId model, std::span<const double> train, int m, int h);

/// Per-series |M| x h matrix of model forecasts, row i = model i.
struct ForecastMatrix {
  std::string id;
  int h = 0;
  std::vector<double> b;  // row-major, kNumModels x h
  std::array<bool, kNumModels> fallback{};

  std::span<const double> row(std::size_t i) const { return {b.data() + i * h, static_cast<std::size_t>(h)}; }
  std::span<double> row(std::size_t i) { return {b.data() + i * h, static_cast<std::size_t>(h)}; }
  double at(std::size_t i, std::size_t t) const { return b[i * h + t]; }
};

ForecastMatrix forecast_all(const std::string& id, std::span<const double> train, int m, int h);

std::string forecasts_csv(std::span<const ForecastMatrix> matrices);
std::vector<ForecastMatrix> parse_forecasts_csv(std::string_view text);

// ---- individual forecasters ------------------------------------------------

std::vector<double> naive_forecast(std::span<const double> train, int h);
std::vector<double> seasonal_naive_forecast(std::span<const double> train, int m, int h);
std::vector<double> rw_drift_forecast(std::span<const double> train, int h);

/// Exponential smoothing fit with grid-searched smoothing rates.
struct SmoothingFit {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double sse = 0.0;
  std::vector<double> forecast;
};

/// Grid used for SES / Holt / Holt-Winters smoothing rates.
std::span<const double> smoothing_grid();

SmoothingFit ses_fit(std::span<const double> train, int h);
SmoothingFit holt_fit(std::span<const double> train, int h);
/// Additive Holt-Winters; reduces to Holt (gamma = 0) when m = 1 or n < 2m.
SmoothingFit holt_winters_fit(std::span<const double> train, int m, int h);

std::vector<double> theta_forecast(std::span<const double> train, int h);

struct ArFit {
  int p = 0;
  double intercept = 0.0;
  std::vector<double> phi;
  double sigma2 = 0.0;
  double aic = 0.0;
  std::vector<double> residuals;
};

/// AR(p) by least squares with AIC order selection over 0..max_p.
ArFit ar_aic_fit(std::span<const double> x, int max_p = 5);
std::vector<double> ar_forecast(const ArFit& fit, std::span<const double> x, int h);

/// Additive seasonal indices (centered moving-average detrending, mean zero).
std::vector<double> additive_seasonal_indices(std::span<const double> x, int m);
std::vector<double> decompose_ar_forecast(std::span<const double> train, int m, int h);

std::vector<double> ols_trend_forecast(std::span<const double> train, int h);

struct OuParams {
  double gamma = 0.0;    // reversion velocity per step, clamped to [0, 1]
  double m_level = 0.0;  // long-run mean
  double sigma = 0.0;    // residual scale
};

/// Least squares on dy_t = gamma * (m - y_{t-1}) + e_t.
OuParams ou_fit(std::span<const double> train);
/// Expectation path (noise switched off) from the last observation.
std::vector<double> ou_forecast(std::span<const double> train, int h);

struct LgtParams {
  double xi1 = 0.0;
  double xi2 = 0.0;
  double lambda = 0.0;
  double level_rate = 0.5;
  double trend_rate = 0.5;
  double season_rate = 0.0;
  bool seasonal = false;
};

struct LgtState {
  double level = 0.0;
  double trend = 0.0;
  std::vector<double> season;  // ring of length m (empty when not seasonal)
};

/// In-sample one-step SSE of the point LGT recursion; `abandon_above`
/// stops early once the partial sum exceeds it.
double lgt_sse(std::span<const double> train, int m, const LgtParams& p,
               double abandon_above = std::numeric_limits<double>::infinity(), LgtState* final_state = nullptr);

std::span<const double> lgt_structure_grid();
std::span<const double> lgt_rate_grid();
bool lgt_seasonal_enabled(std::size_t n, int m);

struct LgtFit {
  LgtParams params;
  double sse = 0.0;
  std::vector<double> forecast;
};
LgtFit lgt_fit(std::span<const double> train, int m, int h);
std::vector<double> lgt_forecast_from(const LgtParams& p, const LgtState& state, std::size_t n, int m, int h);

/// sum_i rho_tau(y_i - a - b * t_i) with t_i = i + 1.
double pinball_loss(std::span<const double> y, double a, double b, double tau);

struct QuantileFit {
  double a = 0.0;
  double b = 0.0;
  double loss = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Linear quantile trend via IRLS refined by coordinate and vertex polishing.
QuantileFit quantile_trend_fit(std::span<const double> y, double tau);
std::vector<double> quantile_trend_forecast(std::span<const double> train, int h, double tau);

}  // namespace donut
