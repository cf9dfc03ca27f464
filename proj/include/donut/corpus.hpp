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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace donut {

enum class PeriodKind { Yearly, Quarterly, Monthly, Weekly, Daily, Hourly };
inline constexpr std::array<PeriodKind, 6> kAllPeriods = {PeriodKind::Yearly, PeriodKind::Quarterly,
                                                          PeriodKind::Monthly, PeriodKind::Weekly,
                                                          PeriodKind::Daily, PeriodKind::Hourly};

enum class SeriesType { Demographic, Finance, Industry, Macro, Micro, Other };
inline constexpr std::array<SeriesType, 6> kAllTypes = {SeriesType::Demographic, SeriesType::Finance,
                                                        SeriesType::Industry, SeriesType::Macro,
                                                        SeriesType::Micro, SeriesType::Other};

/// Sampling frequency with its seasonal period m and forecast horizon h.
struct Period {
  PeriodKind kind = PeriodKind::Monthly;
  int m = 12;
  int h = 18;

  /// M4 defaults for (m, h).
  static Period defaults(PeriodKind kind);

  bool operator==(const Period&) const = default;
};

std::string_view to_string(PeriodKind kind);
std::string_view to_string(SeriesType type);
PeriodKind parse_period(std::string_view name);
SeriesType parse_series_type(std::string_view name);

struct TimeSeries {
  std::string id;
  std::vector<double> values;
  Period period;
  SeriesType type = SeriesType::Other;
  // Generating-process label for synthetic corpora; empty for real data.
  std::string process;

  std::size_t size() const { return values.size(); }
};

using Corpus = std::vector<TimeSeries>;

struct SplitSeries {
  std::vector<double> train;
  std::vector<double> test;
};

/// Parses one training-file row into (id, values). Trailing empty cells are
/// padding; an empty cell followed by a value is an error.
std::pair<std::string, std::vector<double>> parse_train_row(std::string_view line);

/// Loads an M4-style training file plus its meta file, preserving file order.
Corpus load_corpus(const std::filesystem::path& train_path, const std::filesystem::path& meta_path);

/// Loads `<dir>/train.csv` + `<dir>/meta.csv`.
Corpus load_corpus_dir(const std::filesystem::path& dir);

/// Writes `<dir>/train.csv` + `<dir>/meta.csv` (atomic per file).
void write_corpus_dir(const std::filesystem::path& dir, const Corpus& corpus);

std::string train_csv(const Corpus& corpus);
std::string meta_csv(const Corpus& corpus);

/// Holds out the last h observations. Throws TooShortForSplit unless n > h + 2.
SplitSeries split(const TimeSeries& ts);

/// True when the series is long enough for evaluation.
bool splittable(const TimeSeries& ts);

/// Seeded disjoint partition; each part keeps the input order.
std::pair<Corpus, Corpus> partition(const Corpus& corpus, double fraction, std::uint64_t seed);

/// Index form of partition, used when parallel tables must be split alike.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_indices(std::size_t n, double fraction,
                                                                                std::uint64_t seed);

}  // namespace donut
