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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "donut/corpus.hpp"
#include "donut/errors.hpp"
#include "donut/io.hpp"
#include "donut/metrics.hpp"
#include "donut/rng.hpp"
#include "donut/synthetic.hpp"
#include "test_util.hpp"

using namespace donut;
namespace fs = std::filesystem;

TEST_CASE("period defaults follow the M4 convention") {
  CHECK(Period::defaults(PeriodKind::Monthly) == Period{PeriodKind::Monthly, 12, 18});
  CHECK(Period::defaults(PeriodKind::Yearly).h == 6);
  CHECK(Period::defaults(PeriodKind::Quarterly).m == 4);
  CHECK(Period::defaults(PeriodKind::Hourly).m == 24);
  CHECK(Period::defaults(PeriodKind::Weekly).h == 13);
  CHECK(Period::defaults(PeriodKind::Daily).h == 14);
  for (auto p : kAllPeriods) CHECK(parse_period(to_string(p)) == p);
  for (auto t : kAllTypes) CHECK(parse_series_type(to_string(t)) == t);
}

TEST_CASE("train rows: padding and interior gaps") {
  auto [id, v] = parse_train_row("S2,5,6,,");
  CHECK(id == "S2");
  CHECK(v == std::vector<double>{5, 6});
  CHECK_THROWS_AS(parse_train_row("S3,1,,2"), ParseError);
  CHECK_THROWS_AS(parse_train_row("S4,1,abc"), ParseError);
}

TEST_CASE("load_corpus resolves meta and reports bad rows") {
  test::TempDir dir;
  test::write(dir / "train.csv", "id,v1,v2,v3\nS1,1,2,3\n");
  test::write(dir / "meta.csv", "id,type,period\nS1,Micro,Monthly\n");
  const auto c = load_corpus_dir(dir.path());
  REQUIRE(c.size() == 1);
  CHECK(c[0].id == "S1");
  CHECK(c[0].size() == 3);
  CHECK(c[0].period.m == 12);
  CHECK(c[0].period.h == 18);
  CHECK(c[0].type == SeriesType::Micro);

  SUBCASE("length-2 series is too short") {
    test::write(dir / "train.csv", "S2,5,6,,\n");
    test::write(dir / "meta.csv", "id,type,period\nS2,Micro,Monthly\n");
    CHECK_THROWS_AS(load_corpus_dir(dir.path()), TooShort);
  }
  SUBCASE("missing meta row") {
    test::write(dir / "train.csv", "S9,1,2,3\n");
    CHECK_THROWS_AS(load_corpus_dir(dir.path()), MissingMeta);
  }
  SUBCASE("non-finite value") {
    test::write(dir / "train.csv", "S1,1,inf,3\n");
    CHECK_THROWS_AS(load_corpus_dir(dir.path()), NonFiniteValue);
  }
  SUBCASE("meta may override m and h") {
    test::write(dir / "meta.csv", "id,type,period,m,h\nS1,Other,Monthly,6,1\n");
    const auto c2 = load_corpus_dir(dir.path());
    CHECK(c2[0].period.m == 6);
    CHECK(c2[0].period.h == 1);
  }
}

TEST_CASE("corpus files round-trip bit for bit") {
  test::TempDir dir;
  Rng rng(3);
  Corpus c;
  for (int i = 0; i < 20; ++i) {
    TimeSeries ts;
    ts.id = "X" + std::to_string(i);
    for (int t = 0; t < 30; ++t) ts.values.push_back(rng.normal() * std::pow(10.0, rng.uniform(-8, 8)));
    ts.period = Period::defaults(kAllPeriods[i % 6]);
    ts.type = kAllTypes[(i / 6) % 6];
    c.push_back(ts);
  }
  write_corpus_dir(dir.path(), c);
  const auto back = load_corpus_dir(dir.path());
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(back[i].id == c[i].id);
    CHECK(back[i].values == c[i].values);
    CHECK(back[i].period == c[i].period);
    CHECK(back[i].type == c[i].type);
  }
}

TEST_CASE("split holds out the last h values") {
  TimeSeries ts;
  ts.id = "s";
  ts.period = Period::defaults(PeriodKind::Monthly);
  ts.values.resize(30);
  for (int i = 0; i < 30; ++i) ts.values[i] = i;
  auto s = split(ts);
  CHECK(s.train.size() == 12);
  CHECK(s.test.size() == 18);
  std::vector<double> joined = s.train;
  joined.insert(joined.end(), s.test.begin(), s.test.end());
  CHECK(joined == ts.values);

  ts.values.resize(19);
  CHECK_THROWS_AS(split(ts), TooShortForSplit);
  ts.values.resize(20);
  CHECK_THROWS_AS(split(ts), TooShortForSplit);
  ts.values.resize(21);
  CHECK(split(ts).train.size() == 3);

  ts.period = Period::defaults(PeriodKind::Yearly);
  ts.values.assign(100, 1.0);
  s = split(ts);
  CHECK(s.train.size() == 94);
  CHECK(s.test.size() == 6);
}

TEST_CASE("partition is a seeded disjoint cover") {
  Corpus c(10);
  for (int i = 0; i < 10; ++i) c[i].id = "id" + std::to_string(i);
  auto [a, b] = partition(c, 0.8, 7);
  CHECK(a.size() == 8);
  CHECK(b.size() == 2);
  auto [a2, b2] = partition(c, 0.8, 7);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == a2[i].id);
    ids.insert(a[i].id);
  }
  for (const auto& ts : b) ids.insert(ts.id);
  CHECK(ids.size() == 10);

  auto [ia, ib] = partition_indices(100000, 0.8, 11);
  CHECK(ia.size() == 80000);
  CHECK(ib.size() == 20000);
  CHECK_THROWS_AS(partition_indices(10, 1.0, 1), ConfigError);
}

// ---- metrics -------------------------------------------------------------------------

TEST_CASE("smape examples") {
  const std::vector<double> a{10, 10};
  CHECK(metrics::smape(a, a) == 0.0);
  CHECK(metrics::smape(std::vector<double>{100}, std::vector<double>{50}) == doctest::Approx(200.0 * 50.0 / 150.0));
  CHECK(metrics::smape(std::vector<double>{0}, std::vector<double>{0}) == 0.0);
  CHECK_THROWS_AS(metrics::smape(std::vector<double>{1, 2}, std::vector<double>{1}), LengthMismatch);
  // Opposite signs hit the upper bound.
  CHECK(metrics::smape(std::vector<double>{1}, std::vector<double>{-1}) == doctest::Approx(200.0));
}

TEST_CASE("mase examples") {
  const std::vector<double> train{1, 2, 3, 4};
  CHECK(metrics::mase(train, 1, std::vector<double>{5, 6}, std::vector<double>{5, 6}) == 0.0);
  CHECK(metrics::mase(train, 1, std::vector<double>{5, 6}, std::vector<double>{4, 4}) == doctest::Approx(1.5));
  CHECK_THROWS_AS(metrics::mase(train, 4, std::vector<double>{5}, std::vector<double>{5}), NMustExceedM);
  CHECK_THROWS_AS(metrics::mase(std::vector<double>{2, 2, 2}, 1, std::vector<double>{5}, std::vector<double>{5}),
                  DegenerateScale);
  // The seasonal scale uses lag-m differences: |5-1| and |6-2| over n - m = 2.
  CHECK(metrics::mase_scale(std::vector<double>{1, 2, 3, 4, 5, 6}, 4) == doctest::Approx(4.0));
}

TEST_CASE("naive2 examples") {
  const std::vector<double> t{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 7};
  CHECK(metrics::naive2(t, 1, 3) == std::vector<double>{7, 7, 7});
  CHECK(metrics::naive2(std::vector<double>(24, 4.0), 12, 5) == std::vector<double>(5, 4.0));

  // Exactly periodic multiplicative pattern: level 10, indices 0.5/1/1.5/1.
  const double idx[4] = {0.5, 1.0, 1.5, 1.0};
  std::vector<double> p;
  for (int k = 0; k < 24; ++k) p.push_back(10.0 * idx[k % 4]);
  const auto f = metrics::naive2(p, 4, 4);
  REQUIRE(f.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(f[k] == doctest::Approx(10.0 * idx[(24 + k) % 4]).epsilon(1e-12));
}

TEST_CASE("owa self-normalization and aggregation") {
  std::vector<metrics::SeriesScore> s{{12.0, 1.5, 12.0, 1.5}, {3.0, 0.2, 3.0, 0.2}};
  CHECK(metrics::owa(s, metrics::Aggregation::Pooled).owa == 1.0);
  CHECK(metrics::owa(s, metrics::Aggregation::PerSeries).owa == 1.0);
  // Relative sMAPE 0.8 and relative MASE 1.2 average to 1.
  CHECK(metrics::owa_single({8.0, 1.2, 10.0, 1.0}) == doctest::Approx(1.0));

  // Pooled: ratios of means; per series: mean of ratios.
  std::vector<metrics::SeriesScore> u{{10, 1, 20, 2}, {30, 3, 20, 2}};
  const double pooled = 0.5 * ((20.0 / 20.0) + (2.0 / 2.0));
  const double per = 0.5 * (0.5 * (0.5 + 0.5) + 0.5 * (1.5 + 1.5));
  CHECK(metrics::owa(u, metrics::Aggregation::Pooled).owa == doctest::Approx(pooled));
  CHECK(metrics::owa(u, metrics::Aggregation::PerSeries).owa == doctest::Approx(per));

  // Pooled OWA does not depend on series order.
  std::vector<metrics::SeriesScore> r{u[1], u[0]};
  CHECK(metrics::owa(r, metrics::Aggregation::Pooled).owa == metrics::owa(u, metrics::Aggregation::Pooled).owa);
}

// ---- synthetic corpora -----------------------------------------------------------------

TEST_CASE("synthetic corpora are deterministic and labelled") {
  const auto spec = SyntheticSpec::spread(100);
  const auto a = make_synthetic(spec, 1);
  const auto b = make_synthetic(spec, 1);
  REQUIRE(a.size() == 100);
  CHECK(train_csv(a) == train_csv(b));
  CHECK(meta_csv(a) == meta_csv(b));
  CHECK(train_csv(a) != train_csv(make_synthetic(spec, 2)));
  std::set<std::string> processes;
  for (const auto& ts : a) {
    CHECK(splittable(ts));
    CHECK(!ts.process.empty());
    CHECK(ts.process.find(',') == std::string::npos);
    processes.insert(ts.process.substr(0, ts.process.find(';')));
    for (double v : ts.values) CHECK(v > 0.0);
  }
  CHECK(processes == std::set<std::string>{"trend", "sine", "ar1", "ou", "random_walk"});
  CHECK_THROWS_AS(SyntheticSpec::spread(0), ConfigError);
}

TEST_CASE("sine samples carry the requested noise level") {
  const auto s = make_sines(50, 100, 0.5, 9);
  REQUIRE(s.size() == 50);
  double mean_snr = 0.0;
  for (const auto& x : s) mean_snr += snr(x.clean, x.noisy) / 50.0;
  // std of a sine over whole-ish cycles is about 1/sqrt(2).
  CHECK(mean_snr == doctest::Approx(std::sqrt(0.5) / 0.5).epsilon(0.1));
}

TEST_CASE("io helpers") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.0})
    CHECK(io::parse_double(io::format_double(v)) == v);
  CHECK_THROWS_AS(io::parse_double("1.0x"), ParseError);
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
