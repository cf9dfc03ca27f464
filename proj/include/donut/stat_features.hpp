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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace donut {

inline constexpr std::size_t kNumStatFeatures = 42;

/// Canonical feature order (the downstream feature-vector contract).
inline constexpr std::array<std::string_view, kNumStatFeatures> kStatFeatureNames = {
    "x_acf1",       "x_acf10",      "diff1_acf1",  "diff1_acf10", "diff2_acf1", "diff2_acf10", "x_pacf5",
    "diff1x_pacf5", "diff2x_pacf5", "seas_acf1",   "seas_pacf",   "entropy",    "lumpiness",   "stability",
    "flat_spots",   "cross_ps",     "hurst",       "unitroot_kpss", "unitroot_pp", "nonlinearity", "arch_acf",
    "garch_acf",    "arch_r2",      "garch_r2",    "ARCH.LM",     "trend",      "spike",       "linearity",
    "curvature",    "e_acf1",       "e_acf10",     "seas_str",    "peak",       "trough",      "hw_alpha",
    "hw_beta",      "hw_gamma",     "alpha",       "beta",        "nperiods",   "seas_per",    "s_len"};

std::size_t stat_feature_index(std::string_view name);

struct StatFeatures {
  std::array<double, kNumStatFeatures> values{};
  // Set where the feature was undefined and imputed as 0.
  std::array<bool, kNumStatFeatures> missing{};

  double operator[](std::string_view name) const { return values[stat_feature_index(name)]; }
  bool is_missing(std::string_view name) const { return missing[stat_feature_index(name)]; }
};

StatFeatures extract_stat_features(std::span<const double> train, int m);

// ---- building blocks -----------------------------------------------------------

/// Normalized Shannon entropy of the periodogram, in [0, 1]. NaN when the
/// series has no variance.
double spectral_entropy(std::span<const double> x);

/// Rescaled-range Hurst exponent; NaN when fewer than two window sizes fit.
double hurst_rs(std::span<const double> x);

/// Bartlett-kernel long-run variance with the given bandwidth.
double newey_west_variance(std::span<const double> e, int bandwidth);

/// floor(4 (n/100)^(1/4)).
int short_bandwidth(std::size_t n);

/// KPSS level-stationarity statistic.
double kpss_level(std::span<const double> x);

/// Phillips-Perron Z-alpha (rho) statistic, constant-only model.
double pp_rho(std::span<const double> x);

struct Garch11 {
  double omega = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double loglik = 0.0;
  std::vector<double> sigma2;
  bool ok = false;
};

/// Gaussian quasi-likelihood GARCH(1,1) by projected gradient ascent.
Garch11 fit_garch11(std::span<const double> r, int iterations = 200);

struct Decomposition {
  std::vector<double> trend;      // defined span only
  std::vector<double> seasonal;   // aligned with trend
  std::vector<double> remainder;  // aligned with trend
  std::vector<double> indices;    // per-phase seasonal indices (length m, or empty)
};

/// Classical additive decomposition; for m = 1 the trend is a short centered
/// moving average and the seasonal part is zero.
Decomposition classical_decomposition(std::span<const double> x, int m);

std::string stat_features_csv(std::span<const std::string> ids, std::span<const StatFeatures> features);

}  // namespace donut
