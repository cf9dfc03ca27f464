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
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "donut/corpus.hpp"
#include "donut/rng.hpp"

namespace donut {

enum class Process { Trend, Sine, Ar1, OrnsteinUhlenbeck, RandomWalk };
inline constexpr std::array<Process, 5> kAllProcesses = {Process::Trend, Process::Sine, Process::Ar1,
                                                         Process::OrnsteinUhlenbeck, Process::RandomWalk};

std::string_view to_string(Process p);

struct SyntheticCell {
  PeriodKind period = PeriodKind::Monthly;
  SeriesType type = SeriesType::Other;
  int count = 1;
};

/// Series counts per (period, type) cell. Generating processes cycle in
/// kAllProcesses order over the whole corpus; the signal-to-noise ratio of every
/// series is drawn log-uniformly from [min_snr, max_snr].
struct SyntheticSpec {
  std::vector<SyntheticCell> cells;
  double min_snr = 1.0;
  double max_snr = 8.0;

  /// `total` series spread round-robin over all 36 (period, type) cells.
  static SyntheticSpec spread(int total);
  void validate() const;
};

/// Deterministic corpus; each series carries its generating process and
/// parameters in `process` (for example "ou;gamma=0.2;mu=50;sigma=1").
Corpus make_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// One noisy sine: amplitude 1, frequency in cycles per series, phase in
/// radians, plus Gaussian noise of the given standard deviation.
struct SineSample {
  std::vector<double> clean;
  std::vector<double> noisy;
};

SineSample make_sine(int length, double frequency, double phase, double noise_sd, Rng& rng);

/// `count` sines with frequencies uniform in [min_freq, max_freq] cycles per
/// series and uniform phase.
std::vector<SineSample> make_sines(int count, int length, double noise_sd, std::uint64_t seed, double min_freq = 1.0,
                                   double max_freq = 4.0);

/// std(signal) / std(noise) for the population standard deviations.
double snr(const std::vector<double>& clean, const std::vector<double>& noisy);

}  // namespace donut
