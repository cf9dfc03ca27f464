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

#include "donut/stat_features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "donut/errors.hpp"
#include "donut/io.hpp"
#include "donut/model_pool.hpp"
#include "donut/numeric.hpp"

namespace donut {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sum_sq(std::span<const double> v, std::size_t count) {
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(count, v.size()); ++i) s += v[i] * v[i];
  return s;
}

std::vector<double> standardized(std::span<const double> x) {
  const double mu = stats::mean(x);
  const double sd = std::sqrt(stats::variance(x));
  std::vector<double> out(x.begin(), x.end());
  for (auto& v : out) v = sd > 0.0 ? (v - mu) / sd : 0.0;
  return out;
}

// R^2 of v_t on an intercept and its own first `lags` lags.
double lag_regression_r2(std::span<const double> v, int lags, std::size_t* rows_out) {
  if (v.size() < static_cast<std::size_t>(2 * lags + 3)) return kNaN;
  const std::size_t rows = v.size() - lags;
  Eigen::MatrixXd X(rows, lags + 1);
  Eigen::VectorXd y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + lags;
    y(r) = v[t];
    X(r, 0) = 1.0;
    for (int j = 1; j <= lags; ++j) X(r, j) = v[t - j];
  }
  auto reg = stats::least_squares(X, y);
  if (!reg.ok) return kNaN;
  if (rows_out) *rows_out = rows;
  return reg.r2;
}

double nonlinearity_stat(std::span<const double> x) {
  if (x.size() < 10) return kNaN;
  const auto z = standardized(x);
  const std::size_t rows = z.size() - 1;
  Eigen::MatrixXd X0(rows, 2), X1(rows, 4);
  Eigen::VectorXd y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double lag = z[r];
    y(r) = z[r + 1];
    X0(r, 0) = X1(r, 0) = 1.0;
    X0(r, 1) = X1(r, 1) = lag;
    X1(r, 2) = lag * lag;
    X1(r, 3) = lag * lag * lag;
  }
  const double tss = (y.array() - y.mean()).square().sum();
  auto r0 = stats::least_squares(X0, y);
  auto r1 = stats::least_squares(X1, y);
  if (!r0.ok || !r1.ok || tss <= 0.0) return kNaN;
  if (r0.rss <= 1e-12 * tss || r1.rss <= 1e-12 * tss) return kNaN;
  return ((r0.rss - r1.rss) / 2.0) / (r1.rss / static_cast<double>(rows - 4));
}

double lumpiness_or_stability(std::span<const double> x, bool variances) {
  constexpr std::size_t width = 10;
  const std::size_t windows = x.size() / width;
  if (windows < 2) return kNaN;
  std::vector<double> stat(windows);
  for (std::size_t w = 0; w < windows; ++w) {
    auto tile = x.subspan(w * width, width);
    stat[w] = variances ? stats::sample_variance(tile) : stats::mean(tile);
  }
  return stats::sample_variance(stat);
}

double flat_spots(std::span<const double> x) {
  std::vector<double> breaks;
  for (int q = 1; q < 10; ++q) breaks.push_back(stats::quantile(x, q / 10.0));
  int best = 0, run = 0;
  long prev = -1;
  for (double v : x) {
    const long bin = std::upper_bound(breaks.begin(), breaks.end(), v) - breaks.begin();
    run = bin == prev ? run + 1 : 1;
    prev = bin;
    best = std::max(best, run);
  }
  return best;
}

double crossing_points(std::span<const double> x) {
  const double med = stats::median(x);
  int count = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if ((x[i - 1] <= med) != (x[i] <= med)) ++count;
  return count;
}

// Coefficients of T on orthonormal linear and quadratic polynomials in time.
std::pair<double, double> orthogonal_poly_coefs(std::span<const double> trend) {
  const std::size_t n = trend.size();
  if (n < 3) return {kNaN, kNaN};
  std::vector<double> p1(n), p2(n);
  const double tbar = (static_cast<double>(n) + 1.0) / 2.0;
  for (std::size_t i = 0; i < n; ++i) p1[i] = static_cast<double>(i + 1) - tbar;
  double n1 = 0.0;
  for (double v : p1) n1 += v * v;
  n1 = std::sqrt(n1);
  for (auto& v : p1) v /= n1;
  for (std::size_t i = 0; i < n; ++i) p2[i] = p1[i] * p1[i];
  const double m2 = stats::mean(p2);
  for (auto& v : p2) v -= m2;
  double proj = 0.0;
  for (std::size_t i = 0; i < n; ++i) proj += p2[i] * p1[i];
  for (std::size_t i = 0; i < n; ++i) p2[i] -= proj * p1[i];
  double n2 = 0.0;
  for (double v : p2) n2 += v * v;
  n2 = std::sqrt(n2);
  if (!(n2 > 0.0)) return {kNaN, kNaN};
  for (auto& v : p2) v /= n2;
  double c1 = 0.0, c2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c1 += trend[i] * p1[i];
    c2 += trend[i] * p2[i];
  }
  return {c1, c2};
}

double spike_stat(std::span<const double> e) {
  const std::size_t n = e.size();
  if (n < 4) return kNaN;
  double s = 0.0, sq = 0.0;
  for (double v : e) {
    s += v;
    sq += v * v;
  }
  std::vector<double> loo(n);
  const double k = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = (s - e[i]) / k;
    const double q = (sq - e[i] * e[i]) - k * mu * mu;
    loo[i] = q / (k - 1.0);
  }
  return stats::sample_variance(loo);
}

}  // namespace

std::size_t stat_feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumStatFeatures; ++i)
    if (kStatFeatureNames[i] == name) return i;
  throw Error("unknown statistical feature '" + std::string(name) + "'");
}

double spectral_entropy(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return kNaN;
  const double mu = stats::mean(x);
  const std::size_t K = n / 2;
  std::vector<double> power(K);
  double total = 0.0;
  for (std::size_t k = 1; k <= K; ++k) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    // Rotate with a recurrence instead of evaluating sin/cos per sample.
    const std::complex<double> step(std::cos(w), -std::sin(w));
    std::complex<double> phase(1.0, 0.0), acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      acc += (x[t] - mu) * phase;
      phase *= step;
      if ((t & 63) == 63) phase /= std::abs(phase);
    }
    power[k - 1] = std::norm(acc);
    total += power[k - 1];
  }
  if (!(total > 0.0)) return kNaN;
  double h = 0.0;
  for (double p : power) {
    const double q = p / total;
    if (q > 0.0) h -= q * std::log(q);
  }
  return K > 1 ? h / std::log(static_cast<double>(K)) : kNaN;
}

double hurst_rs(std::span<const double> x) {
  std::vector<double> lw, lrs;
  for (std::size_t w = 8; w <= x.size() / 2; w *= 2) {
    double acc = 0.0;
    int used = 0;
    for (std::size_t start = 0; start + w <= x.size(); start += w) {
      auto win = x.subspan(start, w);
      const double mu = stats::mean(win);
      double z = 0.0, zmax = -std::numeric_limits<double>::infinity(), zmin = std::numeric_limits<double>::infinity();
      for (double v : win) {
        z += v - mu;
        zmax = std::max(zmax, z);
        zmin = std::min(zmin, z);
      }
      const double sd = std::sqrt(stats::variance(win));
      if (sd > 0.0) {
        acc += (zmax - zmin) / sd;
        ++used;
      }
    }
    if (used > 0 && acc > 0.0) {
      lw.push_back(std::log(static_cast<double>(w)));
      lrs.push_back(std::log(acc / used));
    }
  }
  if (lw.size() < 2) return kNaN;
  const double mx = stats::mean(lw), my = stats::mean(lrs);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lw.size(); ++i) {
    sxy += (lw[i] - mx) * (lrs[i] - my);
    sxx += (lw[i] - mx) * (lw[i] - mx);
  }
  return sxy / sxx;
}

int short_bandwidth(std::size_t n) {
  return static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

double newey_west_variance(std::span<const double> e, int bandwidth) {
  const std::size_t n = e.size();
  if (n == 0) return kNaN;
  double s = 0.0;
  for (double v : e) s += v * v;
  s /= static_cast<double>(n);
  for (int j = 1; j <= bandwidth && static_cast<std::size_t>(j) < n; ++j) {
    double g = 0.0;
    for (std::size_t t = static_cast<std::size_t>(j); t < n; ++t) g += e[t] * e[t - j];
    s += 2.0 * (1.0 - j / (bandwidth + 1.0)) * g / static_cast<double>(n);
  }
  return s;
}

double kpss_level(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return kNaN;
  const double mu = stats::mean(x);
  std::vector<double> e(n);
  for (std::size_t t = 0; t < n; ++t) e[t] = x[t] - mu;
  double cum = 0.0, eta = 0.0;
  for (double v : e) {
    cum += v;
    eta += cum * cum;
  }
  const double lrv = newey_west_variance(e, short_bandwidth(n));
  if (!(lrv > 0.0)) return kNaN;
  return eta / (static_cast<double>(n) * static_cast<double>(n) * lrv);
}

double pp_rho(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 6) return kNaN;
  const std::size_t T = n - 1;
  Eigen::MatrixXd X(T, 2);
  Eigen::VectorXd y(T);
  for (std::size_t t = 1; t < n; ++t) {
    X(t - 1, 0) = 1.0;
    X(t - 1, 1) = x[t - 1];
    y(t - 1) = x[t];
  }
  auto reg = stats::least_squares(X, y);
  if (!reg.ok) return kNaN;
  const double Td = static_cast<double>(T);
  const double ssr = reg.rss;
  const double s2 = ssr / (Td - 2.0);
  if (!(s2 > 0.0)) return kNaN;
  const Eigen::Matrix2d xtx_inv = (X.transpose() * X).inverse();
  const double se2 = s2 * xtx_inv(1, 1);
  std::vector<double> u(reg.residuals.data(), reg.residuals.data() + T);
  const double gamma0 = ssr / Td;
  const double lambda2 = newey_west_variance(u, short_bandwidth(T));
  return Td * (reg.coef(1) - 1.0) - 0.5 * (Td * Td * se2 / s2) * (lambda2 - gamma0);
}

Garch11 fit_garch11(std::span<const double> r, int iterations) {
  Garch11 g;
  const std::size_t n = r.size();
  if (n < 20) return g;
  std::vector<double> r2(n);
  double v = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    r2[t] = r[t] * r[t];
    v += r2[t];
  }
  v /= static_cast<double>(n);
  if (!(v > 0.0)) return g;

  struct Eval {
    double ll;
    std::array<double, 3> grad;
  };
  auto evaluate = [&](const std::array<double, 3>& th, std::vector<double>* sig) -> Eval {
    double s2 = v, d_om = 0.0, d_al = 0.0, d_be = 0.0;
    Eval out{0.0, {0.0, 0.0, 0.0}};
    if (sig) sig->assign(n, v);
    for (std::size_t t = 1; t < n; ++t) {
      const double prev = s2;
      s2 = th[0] + th[1] * r2[t - 1] + th[2] * prev;
      d_om = 1.0 + th[2] * d_om;
      d_al = r2[t - 1] + th[2] * d_al;
      d_be = prev + th[2] * d_be;
      if (!(s2 > 0.0)) return {-std::numeric_limits<double>::infinity(), {0.0, 0.0, 0.0}};
      out.ll -= 0.5 * (std::log(s2) + r2[t] / s2);
      const double w = -0.5 * (1.0 / s2 - r2[t] / (s2 * s2));
      out.grad[0] += w * d_om;
      out.grad[1] += w * d_al;
      out.grad[2] += w * d_be;
      if (sig) (*sig)[t] = s2;
    }
    const double scale = 1.0 / static_cast<double>(n - 1);
    out.ll *= scale;
    for (auto& d : out.grad) d *= scale;
    return out;
  };
  auto project = [&](std::array<double, 3> th) {
    th[0] = std::max(th[0], 1e-6 * v);
    th[1] = std::clamp(th[1], 0.0, 0.999);
    th[2] = std::clamp(th[2], 0.0, 0.999);
    if (th[1] + th[2] > 0.999) {
      const double k = 0.999 / (th[1] + th[2]);
      th[1] *= k;
      th[2] *= k;
    }
    return th;
  };

  std::array<double, 3> th = {0.1 * v, 0.1, 0.8};
  Eval cur = evaluate(th, nullptr);
  if (!std::isfinite(cur.ll)) return g;
  double step = 0.1;
  for (int it = 0; it < iterations; ++it) {
    bool moved = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      std::array<double, 3> cand = {th[0] + step * v * cur.grad[0], th[1] + step * cur.grad[1],
                                    th[2] + step * cur.grad[2]};
      cand = project(cand);
      Eval e = evaluate(cand, nullptr);
      if (std::isfinite(e.ll) && e.ll > cur.ll) {
        th = cand;
        cur = e;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  g.omega = th[0];
  g.alpha = th[1];
  g.beta = th[2];
  Eval fin = evaluate(th, &g.sigma2);
  g.loglik = fin.ll;
  g.ok = std::isfinite(fin.ll);
  return g;
}

Decomposition classical_decomposition(std::span<const double> x, int m) {
  Decomposition d;
  const std::size_t n = x.size();
  const bool seasonal = m > 1 && n >= 2 * static_cast<std::size_t>(m) + 1;
  const int order = seasonal ? m : (n >= 15 ? 7 : 3);
  const auto ma = stats::centered_moving_average(x, order);
  if (seasonal) d.indices = additive_seasonal_indices(x, m);
  for (std::size_t t = 0; t < n; ++t) {
    if (std::isnan(ma[t])) continue;
    const double s = seasonal ? d.indices[t % m] : 0.0;
    d.trend.push_back(ma[t]);
    d.seasonal.push_back(s);
    d.remainder.push_back(x[t] - ma[t] - s);
  }
  return d;
}

StatFeatures extract_stat_features(std::span<const double> x, int m) {
  StatFeatures f;
  f.values.fill(kNaN);
  const std::size_t n = x.size();
  auto set = [&](std::string_view name, double v) { f.values[stat_feature_index(name)] = v; };

  const auto d1 = stats::diff(x, 1);
  const auto d2 = stats::diff(d1, 1);
  auto acf_pair = [&](std::span<const double> v, std::string_view a1, std::string_view a10) {
    if (v.size() < 3) return;
    const auto r = stats::acf(v, 10);
    set(a1, r[0]);
    set(a10, sum_sq(r, 10));
  };
  acf_pair(x, "x_acf1", "x_acf10");
  acf_pair(d1, "diff1_acf1", "diff1_acf10");
  acf_pair(d2, "diff2_acf1", "diff2_acf10");
  if (n >= 3) set("x_pacf5", sum_sq(stats::pacf(x, 5), 5));
  if (d1.size() >= 3) set("diff1x_pacf5", sum_sq(stats::pacf(d1, 5), 5));
  if (d2.size() >= 3) set("diff2x_pacf5", sum_sq(stats::pacf(d2, 5), 5));
  if (m > 1 && n > static_cast<std::size_t>(m)) {
    set("seas_acf1", stats::acf(x, m)[m - 1]);
    set("seas_pacf", stats::pacf(x, m)[m - 1]);
  }

  set("entropy", spectral_entropy(x));
  set("lumpiness", lumpiness_or_stability(x, true));
  set("stability", lumpiness_or_stability(x, false));
  set("flat_spots", flat_spots(x));
  set("cross_ps", crossing_points(x));
  set("hurst", hurst_rs(x));
  set("unitroot_kpss", kpss_level(x));
  set("unitroot_pp", pp_rho(x));
  set("nonlinearity", nonlinearity_stat(x));

  // Heteroskedasticity block on AR-prewhitened, unit-variance residuals.
  try {
    const auto ar = ar_aic_fit(x);
    const auto r = standardized(ar.residuals);
    if (r.size() >= 30 && stats::variance(ar.residuals) > 0.0) {
      std::vector<double> r2(r.size());
      for (std::size_t t = 0; t < r.size(); ++t) r2[t] = r[t] * r[t];
      set("arch_acf", sum_sq(stats::acf(r2, 12), 12));
      std::size_t rows = 0;
      const double ar2 = lag_regression_r2(r2, 12, &rows);
      set("arch_r2", ar2);
      if (std::isfinite(ar2)) set("ARCH.LM", static_cast<double>(rows) * ar2);
      const auto garch = fit_garch11(r);
      if (garch.ok) {
        std::vector<double> z2(r.size());
        for (std::size_t t = 0; t < r.size(); ++t) z2[t] = r2[t] / garch.sigma2[t];
        set("garch_acf", sum_sq(stats::acf(z2, 12), 12));
        set("garch_r2", lag_regression_r2(z2, 12, nullptr));
      }
    }
  } catch (const std::exception&) {
    // block stays undefined
  }

  const auto dec = classical_decomposition(x, m);
  if (dec.trend.size() >= 4) {
    const auto& e = dec.remainder;
    std::vector<double> te(e.size()), se(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
      te[i] = dec.trend[i] + e[i];
      se[i] = dec.seasonal[i] + e[i];
    }
    const double ve = stats::variance(e);
    const double vte = stats::variance(te);
    if (vte > 0.0) set("trend", std::max(0.0, 1.0 - ve / vte));
    if (!dec.indices.empty()) {
      const double vse = stats::variance(se);
      if (vse > 0.0) set("seas_str", std::max(0.0, 1.0 - ve / vse));
      const auto& idx = dec.indices;
      set("peak", static_cast<double>(std::max_element(idx.begin(), idx.end()) - idx.begin() + 1));
      set("trough", static_cast<double>(std::min_element(idx.begin(), idx.end()) - idx.begin() + 1));
    }
    set("spike", spike_stat(e));
    const auto [lin, curv] = orthogonal_poly_coefs(dec.trend);
    set("linearity", lin);
    set("curvature", curv);
    if (e.size() >= 3) {
      const auto re = stats::acf(e, 10);
      // A remainder of exact zeros carries no autocorrelation information.
      if (ve > 0.0) {
        set("e_acf1", re[0]);
        set("e_acf10", sum_sq(re, 10));
      }
    }
  }

  if (n >= 3) {
    const auto hw = holt_winters_fit(x, m, 1);
    set("hw_alpha", hw.alpha);
    set("hw_beta", hw.beta);
    if (hw.gamma > 0.0) set("hw_gamma", hw.gamma);
    const auto holt = holt_fit(x, 1);
    set("alpha", holt.alpha);
    set("beta", holt.beta);
  }
  set("nperiods", m > 1 ? 1.0 : 0.0);
  set("seas_per", static_cast<double>(m));
  set("s_len", static_cast<double>(n));

  for (std::size_t i = 0; i < kNumStatFeatures; ++i) {
    if (!std::isfinite(f.values[i])) {
      f.values[i] = 0.0;
      f.missing[i] = true;
    }
  }
  return f;
}

std::string stat_features_csv(std::span<const std::string> ids, std::span<const StatFeatures> features) {
  std::string out = "id";
  for (auto name : kStatFeatureNames) {
    out.push_back(',');
    out += name;
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < ids.size(); ++r) {
    out += ids[r];
    for (double v : features[r].values) {
      out.push_back(',');
      out += io::format_double(v);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace donut
