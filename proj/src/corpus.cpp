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

#include "donut/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "donut/errors.hpp"
#include "donut/io.hpp"
#include "donut/rng.hpp"

namespace donut {

Period Period::defaults(PeriodKind kind) {
  switch (kind) {
    case PeriodKind::Yearly: return {kind, 1, 6};
    case PeriodKind::Quarterly: return {kind, 4, 8};
    case PeriodKind::Monthly: return {kind, 12, 18};
    case PeriodKind::Weekly: return {kind, 1, 13};
    case PeriodKind::Daily: return {kind, 1, 14};
    case PeriodKind::Hourly: return {kind, 24, 48};
  }
  return {};
}

std::string_view to_string(PeriodKind kind) {
  switch (kind) {
    case PeriodKind::Yearly: return "Yearly";
    case PeriodKind::Quarterly: return "Quarterly";
    case PeriodKind::Monthly: return "Monthly";
    case PeriodKind::Weekly: return "Weekly";
    case PeriodKind::Daily: return "Daily";
    case PeriodKind::Hourly: return "Hourly";
  }
  return "?";
}

std::string_view to_string(SeriesType type) {
  switch (type) {
    case SeriesType::Demographic: return "Demographic";
    case SeriesType::Finance: return "Finance";
    case SeriesType::Industry: return "Industry";
    case SeriesType::Macro: return "Macro";
    case SeriesType::Micro: return "Micro";
    case SeriesType::Other: return "Other";
  }
  return "?";
}

PeriodKind parse_period(std::string_view name) {
  for (auto k : kAllPeriods)
    if (to_string(k) == name) return k;
  throw ParseError("unknown period '" + std::string(name) + "'");
}

SeriesType parse_series_type(std::string_view name) {
  for (auto t : kAllTypes)
    if (to_string(t) == name) return t;
  throw ParseError("unknown series type '" + std::string(name) + "'");
}

std::pair<std::string, std::vector<double>> parse_train_row(std::string_view line) {
  auto cells = io::split_csv_line(line);
  if (cells.empty() || cells[0].empty()) throw ParseError("row without id");
  std::size_t last = cells.size();
  while (last > 1 && cells[last - 1].empty()) --last;
  std::vector<double> values;
  values.reserve(last - 1);
  for (std::size_t i = 1; i < last; ++i) {
    if (cells[i].empty())
      throw ParseError("interior empty cell in series '" + cells[0] + "' at index " + std::to_string(i - 1));
    values.push_back(io::parse_double(cells[i]));
  }
  return {cells[0], std::move(values)};
}

namespace {

struct MetaRow {
  SeriesType type;
  Period period;
  std::string process;
};

std::unordered_map<std::string, MetaRow> read_meta(const std::filesystem::path& meta_path) {
  const auto table = io::read_table(meta_path);
  const auto c_id = table.column("id");
  const auto c_type = table.column("type");
  const auto c_period = table.column("period");
  auto optional_col = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < table.header.size(); ++i)
      if (table.header[i] == name) return i;
    return std::nullopt;
  };
  const auto c_m = optional_col("m");
  const auto c_h = optional_col("h");
  const auto c_proc = optional_col("process");

  std::unordered_map<std::string, MetaRow> meta;
  for (const auto& row : table.rows) {
    auto cell = [&](std::size_t c) -> const std::string& {
      static const std::string empty;
      return c < row.size() ? row[c] : empty;
    };
    MetaRow r{parse_series_type(cell(c_type)), Period::defaults(parse_period(cell(c_period))), {}};
    if (c_m && !cell(*c_m).empty()) r.period.m = std::stoi(cell(*c_m));
    if (c_h && !cell(*c_h).empty()) r.period.h = std::stoi(cell(*c_h));
    if (c_proc) r.process = cell(*c_proc);
    if (r.period.m < 1 || r.period.h < 1) throw ParseError("meta row for '" + cell(c_id) + "' has m or h < 1");
    meta.emplace(cell(c_id), std::move(r));
  }
  return meta;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& train_path, const std::filesystem::path& meta_path) {
  const auto meta = read_meta(meta_path);
  Corpus corpus;
  bool first = true;
  for (const auto& line : io::read_lines(train_path)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("id", 0) == 0 && (line.size() == 2 || line[2] == ',' )) continue;
    }
    auto [id, values] = parse_train_row(line);
    auto it = meta.find(id);
    if (it == meta.end()) throw MissingMeta(id);
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!std::isfinite(values[i])) throw NonFiniteValue(id, i);
    if (values.size() < 3) throw TooShort(id);
    TimeSeries ts;
    ts.id = id;
    ts.values = std::move(values);
    ts.period = it->second.period;
    ts.type = it->second.type;
    ts.process = it->second.process;
    corpus.push_back(std::move(ts));
  }
  return corpus;
}

Corpus load_corpus_dir(const std::filesystem::path& dir) { return load_corpus(dir / "train.csv", dir / "meta.csv"); }

std::string train_csv(const Corpus& corpus) {
  std::string out;
  for (const auto& ts : corpus) {
    out += ts.id;
    for (double v : ts.values) {
      out.push_back(',');
      out += io::format_double(v);
    }
    out.push_back('\n');
  }
  return out;
}

std::string meta_csv(const Corpus& corpus) {
  const bool with_process =
      std::any_of(corpus.begin(), corpus.end(), [](const TimeSeries& ts) { return !ts.process.empty(); });
  std::string out = with_process ? "id,type,period,m,h,process\n" : "id,type,period,m,h\n";
  for (const auto& ts : corpus) {
    out += ts.id + "," + std::string(to_string(ts.type)) + "," + std::string(to_string(ts.period.kind)) + "," +
           std::to_string(ts.period.m) + "," + std::to_string(ts.period.h);
    if (with_process) out += "," + ts.process;
    out.push_back('\n');
  }
  return out;
}

void write_corpus_dir(const std::filesystem::path& dir, const Corpus& corpus) {
  io::write_file_atomic(dir / "train.csv", train_csv(corpus));
  io::write_file_atomic(dir / "meta.csv", meta_csv(corpus));
}

bool splittable(const TimeSeries& ts) { return ts.values.size() > static_cast<std::size_t>(ts.period.h) + 2; }

SplitSeries split(const TimeSeries& ts) {
  if (!splittable(ts)) throw TooShortForSplit(ts.id);
  const auto cut = ts.values.size() - static_cast<std::size_t>(ts.period.h);
  SplitSeries s;
  s.train.assign(ts.values.begin(), ts.values.begin() + static_cast<std::ptrdiff_t>(cut));
  s.test.assign(ts.values.begin() + static_cast<std::ptrdiff_t>(cut), ts.values.end());
  return s;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_indices(std::size_t n, double fraction,
                                                                                std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("partition fraction must lie in (0, 1)");
  Rng rng(seed);
  auto perm = rng.permutation(n);
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> a(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<std::size_t> b(perm.begin() + static_cast<std::ptrdiff_t>(k), perm.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {std::move(a), std::move(b)};
}

std::pair<Corpus, Corpus> partition(const Corpus& corpus, double fraction, std::uint64_t seed) {
  auto [ia, ib] = partition_indices(corpus.size(), fraction, seed);
  Corpus a, b;
  a.reserve(ia.size());
  b.reserve(ib.size());
  for (auto i : ia) a.push_back(corpus[i]);
  for (auto i : ib) b.push_back(corpus[i]);
  return {std::move(a), std::move(b)};
}

}  // namespace donut
