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

#include "donut/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "donut/errors.hpp"
#include "donut/io.hpp"
#include "donut/numeric.hpp"

namespace donut {

namespace {

struct LengthRange {
  int lo;
  int hi;
};

LengthRange length_range(PeriodKind p) {
  switch (p) {
    case PeriodKind::Yearly: return {24, 48};
    case PeriodKind::Quarterly: return {40, 96};
    case PeriodKind::Monthly: return {72, 180};
    case PeriodKind::Weekly: return {80, 200};
    case PeriodKind::Daily: return {100, 240};
    case PeriodKind::Hourly: return {150, 300};
  }
  return {48, 96};
}

std::string param(std::string_view key, double v) {
  return ";" + std::string(key) + "=" + io::format_double(std::round(v * 1e4) / 1e4);
}

// Latent signal plus its label.
std::pair<std::vector<double>, std::string> latent(Process proc, int n, int m, Rng& rng) {
  std::vector<double> x(static_cast<std::size_t>(n));
  std::string label(to_string(proc));
  const double level = 100.0 * rng.uniform(0.5, 2.0);
  switch (proc) {
    case Process::Trend: {
      const double slope = level * rng.uniform(-0.004, 0.01);
      for (int t = 0; t < n; ++t) x[t] = level + slope * t;
      label += param("level", level) + param("slope", slope);
      break;
    }
    case Process::Sine: {
      const double period = m > 1 ? m : rng.uniform(5.0, 20.0);
      const double amp = level * rng.uniform(0.05, 0.3);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (int t = 0; t < n; ++t) x[t] = level + amp * std::sin(2.0 * std::numbers::pi * t / period + phase);
      label += param("level", level) + param("amp", amp) + param("period", period);
      break;
    }
    case Process::Ar1: {
      const double phi = rng.uniform(0.3, 0.9);
      const double sigma = level * 0.05;
      double y = 0.0;
      for (int t = 0; t < n; ++t) {
        y = phi * y + sigma * rng.normal();
        x[t] = level + y;
      }
      label += param("phi", phi) + param("mu", level) + param("sigma", sigma);
      break;
    }
    case Process::OrnsteinUhlenbeck: {
      const double gamma = rng.uniform(0.05, 0.5);
      const double sigma = level * 0.03;
      double y = level + level * rng.uniform(-0.2, 0.2);
      for (int t = 0; t < n; ++t) {
        x[t] = y;
        y += gamma * (level - y) + sigma * rng.normal();
      }
      label += param("gamma", gamma) + param("mu", level) + param("sigma", sigma);
      break;
    }
    case Process::RandomWalk: {
      const double drift = level * rng.uniform(-0.002, 0.006);
      const double sigma = level * 0.02;
      double y = level;
      for (int t = 0; t < n; ++t) {
        x[t] = y;
        y += drift + sigma * rng.normal();
      }
      label += param("drift", drift) + param("sigma", sigma);
      break;
    }
  }
  return {x, label};
}

}  // namespace

std::string_view to_string(Process p) {
  switch (p) {
    case Process::Trend: return "trend";
    case Process::Sine: return "sine";
    case Process::Ar1: return "ar1";
    case Process::OrnsteinUhlenbeck: return "ou";
    case Process::RandomWalk: return "random_walk";
  }
  return "unknown";
}

SyntheticSpec SyntheticSpec::spread(int total) {
  if (total < 1) throw ConfigError("synthetic corpus needs at least one series");
  SyntheticSpec s;
  for (auto p : kAllPeriods)
    for (auto t : kAllTypes) s.cells.push_back({p, t, 0});
  for (int i = 0; i < total; ++i) ++s.cells[static_cast<std::size_t>(i) % s.cells.size()].count;
  s.cells.erase(std::remove_if(s.cells.begin(), s.cells.end(), [](const auto& c) { return c.count == 0; }),
                s.cells.end());
  return s;
}

void SyntheticSpec::validate() const {
  if (cells.empty()) throw ConfigError("synthetic spec has no cells");
  for (const auto& c : cells)
    if (c.count < 1) throw ConfigError("synthetic cell counts must be at least 1");
  if (!(min_snr > 0.0) || !(max_snr >= min_snr)) throw ConfigError("synthetic SNR range is invalid");
}

Corpus make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Corpus out;
  std::uint64_t serial = 0;
  for (const auto& cell : spec.cells) {
    const Period period = Period::defaults(cell.period);
    const auto range = length_range(cell.period);
    for (int k = 0; k < cell.count; ++k, ++serial) {
      Rng rng(derive_seed(seed, serial));
      const Process proc = kAllProcesses[serial % kAllProcesses.size()];
      const int n = range.lo + static_cast<int>(rng.index(static_cast<std::size_t>(range.hi - range.lo + 1)));
      auto [x, label] = latent(proc, n, period.m, rng);

      const double signal_sd = std::sqrt(stats::variance(x));
      const double ratio = std::exp(rng.uniform(std::log(spec.min_snr), std::log(spec.max_snr)));
      // Trends and other near-flat signals still get visible noise.
      const double noise_sd = std::max(signal_sd / ratio, 0.01 * stats::mean(x));
      for (auto& v : x) v += noise_sd * rng.normal();
      label += param("noise", noise_sd);

      const double lo = *std::min_element(x.begin(), x.end());
      if (lo < 1.0) {
        const double shift = 1.0 - lo + 0.1 * std::abs(stats::mean(x));
        for (auto& v : x) v += shift;
        label += param("shift", shift);
      }

      TimeSeries ts;
      ts.id = std::string(1, to_string(cell.period)[0]) + std::to_string(serial + 1);
      ts.values = std::move(x);
      ts.period = period;
      ts.type = cell.type;
      ts.process = std::move(label);
      out.push_back(std::move(ts));
    }
  }
  return out;
}

SineSample make_sine(int length, double frequency, double phase, double noise_sd, Rng& rng) {
  SineSample s;
  s.clean.resize(static_cast<std::size_t>(length));
  s.noisy.resize(s.clean.size());
  for (int t = 0; t < length; ++t) {
    s.clean[t] = std::sin(2.0 * std::numbers::pi * frequency * t / length + phase);
    s.noisy[t] = s.clean[t] + noise_sd * rng.normal();
  }
  return s;
}

std::vector<SineSample> make_sines(int count, int length, double noise_sd, std::uint64_t seed, double min_freq,
                                   double max_freq) {
  Rng rng(seed);
  std::vector<SineSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double f = rng.uniform(min_freq, max_freq);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out.push_back(make_sine(length, f, phase, noise_sd, rng));
  }
  return out;
}

double snr(const std::vector<double>& clean, const std::vector<double>& noisy) {
  if (clean.size() != noisy.size()) throw LengthMismatch("signal and noisy series differ in length");
  std::vector<double> noise(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) noise[i] = noisy[i] - clean[i];
  const double ns = std::sqrt(stats::variance(noise));
  return ns > 0.0 ? std::sqrt(stats::variance(clean)) / ns : INFINITY;
}

}  // namespace donut
