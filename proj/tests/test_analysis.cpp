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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "donut/analysis.hpp"
#include "donut/errors.hpp"
#include "donut/rng.hpp"

using namespace donut;
using namespace donut::analysis;

namespace {

FeatureTable random_table(int rows, int cols, Rng& rng) {
  FeatureTable t(static_cast<std::size_t>(rows), std::vector<double>(static_cast<std::size_t>(cols)));
  for (auto& r : t)
    for (auto& v : r) v = rng.normal();
  return t;
}

// Upper tail of Student's t by Simpson integration of the density.
double t_upper_tail(double t, int dof) {
  const double nu = dof;
  const double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * M_PI);
  auto pdf = [&](double x) { return c * std::pow(1.0 + x * x / nu, -(nu + 1) / 2); };
  // Integrate the symmetric bulk [0, |t|] and subtract from one half.
  const int n = 20000;
  const double a = std::abs(t), hstep = a / n;
  double s = pdf(0) + pdf(a);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(i * hstep);
  const double bulk = s * hstep / 3.0;
  return t >= 0 ? 0.5 - bulk : 0.5 + bulk;
}

// Ward merge heights from raw points, recomputing centroids each step.
std::vector<double> ward_by_centroids(std::vector<std::vector<double>> pts) {
  struct C {
    std::vector<double> centroid;
    double size;
  };
  std::vector<C> cs;
  for (auto& p : pts) cs.push_back({p, 1.0});
  std::vector<double> heights;
  while (cs.size() > 1) {
    double best = 1e300;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < cs.size(); ++i)
      for (std::size_t j = i + 1; j < cs.size(); ++j) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < cs[i].centroid.size(); ++k) {
          const double d = cs[i].centroid[k] - cs[j].centroid[k];
          d2 += d * d;
        }
        const double cost = std::sqrt(2.0 * cs[i].size * cs[j].size / (cs[i].size + cs[j].size) * d2);
        if (cost < best) best = cost, bi = i, bj = j;
      }
    C merged{cs[bi].centroid, cs[bi].size + cs[bj].size};
    for (std::size_t k = 0; k < merged.centroid.size(); ++k)
      merged.centroid[k] = (cs[bi].size * cs[bi].centroid[k] + cs[bj].size * cs[bj].centroid[k]) / merged.size;
    cs.erase(cs.begin() + static_cast<std::ptrdiff_t>(bj));
    cs[bi] = merged;
    heights.push_back(best);
  }
  return heights;
}

}  // namespace

TEST_CASE("t ratio against a numerical t distribution") {
  ImportanceRecord r;
  r.deltas = {0.3, 0.1, 0.25, 0.05, 0.2};
  r.repeats = 5;
  t_ratio(r);
  const double mean = 0.18;
  double ss = 0.0;
  for (double d : r.deltas) ss += (d - mean) * (d - mean);
  const double t = mean / (std::sqrt(ss / 4.0) / std::sqrt(5.0));
  CHECK(r.t_stat == doctest::Approx(t).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(t_upper_tail(t, 4)).epsilon(1e-8));

  r.deltas = {-0.1, 0.05, -0.2};
  r.repeats = 3;
  t_ratio(r);
  CHECK(r.p_value > 0.5);
  CHECK(r.p_value == doctest::Approx(t_upper_tail(r.t_stat, 2)).epsilon(1e-8));

  r.deltas = {0.0, 0.0, 0.0};
  t_ratio(r);
  CHECK(r.t_stat == 0.0);
  CHECK(r.p_value == 1.0);
}

TEST_CASE("permutation importance") {
  Rng rng(1);
  auto table = random_table(200, 5, rng);
  for (auto& r : table) r[3] = 2.0;  // constant column
  std::vector<double> target;
  for (const auto& r : table) target.push_back(3.0 * r[0]);
  // A "net" that reads only feature 0.
  LossFunction loss = [&](const FeatureTable& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += std::pow(target[i] - 3.0 * t[i][0], 2);
    return s / static_cast<double>(t.size());
  };
  std::vector<std::string> names{"a", "b", "c", "d", "e"};

  ImportanceOptions opt;
  opt.repeats = 5;
  opt.seed = 7;
  opt.identity = true;
  for (const auto& rec : feature_importance(table, names, loss, opt)) CHECK(rec.importance == 0.0);

  opt.identity = false;
  const auto recs = feature_importance(table, names, loss, opt);
  REQUIRE(recs.size() == 5);
  CHECK(recs[0].importance > 0.0);
  CHECK(recs[0].p_value < 0.01);
  for (std::size_t k = 1; k < 5; ++k) CHECK(std::abs(recs[k].importance) < recs[0].importance / 10.0);
  CHECK(recs[3].importance == 0.0);

  // Same seed, same numbers; row keys make the draw order-free.
  CHECK(feature_importance(table, names, loss, opt)[0].deltas == recs[0].deltas);

  const FeatureTable one_row{table[0]};
  const std::vector<std::size_t> cols{0};
  CHECK_THROWS_AS(permutation_importance(one_row, cols, "a", loss, opt), SingleSeriesCorpus);
}

TEST_CASE("row keys make importance independent of table order") {
  Rng rng(2);
  auto table = random_table(50, 2, rng);
  std::vector<std::string> keys;
  for (int i = 0; i < 50; ++i) keys.push_back("k" + std::to_string(1000 + i));
  // Loss depends on pairing rows with their own key-indexed targets.
  auto make_loss = [](const FeatureTable& base) {
    return [base](const FeatureTable& t) {
      double s = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i) s += std::abs(t[i][0] - base[i][0]);
      return s;
    };
  };
  ImportanceOptions opt;
  opt.seed = 3;
  opt.row_keys = keys;
  const std::vector<std::size_t> cols{0};
  const auto a = permutation_importance(table, cols, "x", make_loss(table), opt);

  FeatureTable rev(table.rbegin(), table.rend());
  std::vector<std::string> rev_keys(keys.rbegin(), keys.rend());
  opt.row_keys = rev_keys;
  const auto b = permutation_importance(rev, cols, "x", make_loss(rev), opt);
  for (std::size_t r = 0; r < a.deltas.size(); ++r) CHECK(a.deltas[r] == doctest::Approx(b.deltas[r]).epsilon(1e-12));
}

TEST_CASE("correlation distances") {
  CHECK(correlation_distance(1.0) == 0.0);
  CHECK(correlation_distance(-1.0) == 2.0);
  CHECK(correlation_distance(0.0) == doctest::Approx(std::sqrt(2.0)));

  FeatureTable t{{1, 2, 5}, {2, 4, 5}, {3, 6, 5}, {4, 7, 5}};
  const auto rho = column_correlations(t);
  CHECK(rho[0][0] == doctest::Approx(1.0));
  CHECK(rho[0][1] > 0.98);
  CHECK(rho[0][2] == 0.0);
}

TEST_CASE("ward linkage") {
  SUBCASE("hand trace on three features") {
    // d01 = 1, d02 = 4, d12 = 3.
    const std::vector<std::vector<double>> d{{0, 1, 4}, {1, 0, 3}, {4, 3, 0}};
    const auto den = ward_linkage(d);
    REQUIRE(den.merges.size() == 2);
    CHECK(den.merges[0].a == 0);
    CHECK(den.merges[0].b == 1);
    CHECK(den.merges[0].height == 1.0);
    CHECK(den.merges[1].a == 2);
    CHECK(den.merges[1].b == 3);
    CHECK(den.merges[1].height == doctest::Approx(std::sqrt((2 * 16.0 + 2 * 9.0 - 1.0) / 3.0)));
    CHECK(den.merges[1].size == 3);
    CHECK(den.leaf_order == std::vector<std::size_t>{0, 1, 2});
  }
  SUBCASE("leaf order starts from the lowest leaf of each branch") {
    const std::vector<std::vector<double>> d{{0, 9, 1, 9}, {9, 0, 9, 1}, {1, 9, 0, 9}, {9, 1, 9, 0}};
    CHECK(ward_linkage(d).leaf_order == std::vector<std::size_t>{0, 2, 1, 3});
  }
  SUBCASE("agrees with the centroid definition on Euclidean points") {
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<std::vector<double>> pts(9, std::vector<double>(3));
      for (auto& p : pts)
        for (auto& v : p) v = rng.normal();
      std::vector<std::vector<double>> d(9, std::vector<double>(9));
      for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
          double s = 0.0;
          for (int k = 0; k < 3; ++k) s += std::pow(pts[i][k] - pts[j][k], 2);
          d[i][j] = std::sqrt(s);
        }
      const auto den = ward_linkage(d);
      const auto ref = ward_by_centroids(pts);
      for (std::size_t k = 0; k < ref.size(); ++k) CHECK(den.merges[k].height == doctest::Approx(ref[k]).epsilon(1e-10));
      for (std::size_t k = 1; k < den.merges.size(); ++k) CHECK(den.merges[k].height >= den.merges[k - 1].height);
    }
  }
  SUBCASE("duplicated feature merges first at height zero") {
    Rng rng(5);
    auto table = random_table(40, 6, rng);
    for (auto& r : table) r[4] = r[1];
    const auto den = cluster_features(table);
    CHECK(den.merges[0].a == 1);
    CHECK(den.merges[0].b == 4);
    CHECK(den.merges[0].height == 0.0);
    for (std::size_t k = 1; k < den.merges.size(); ++k) CHECK(den.merges[k].height >= den.merges[k - 1].height);
  }
}

TEST_CASE("cutting the tree") {
  const std::vector<std::vector<double>> d{{0, 1, 9, 9}, {1, 0, 9, 9}, {9, 9, 0, 2}, {9, 9, 2, 0}};
  const auto den = ward_linkage(d);
  CHECK(cut_tree(den, 2) == std::vector<int>{0, 0, 1, 1});
  CHECK(cut_tree(den, 4) == std::vector<int>{0, 1, 2, 3});
  CHECK(cut_tree(den, 1) == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("cluster importance follows the signal") {
  Rng rng(6);
  auto table = random_table(120, 4, rng);
  std::vector<double> target;
  for (const auto& r : table) target.push_back(r[2]);
  LossFunction loss = [&](const FeatureTable& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += std::pow(target[i] - t[i][2], 2);
    return s;
  };
  const std::vector<std::string> names{"w", "x", "y", "z"};
  const std::vector<int> labels{0, 0, 1, 0};
  ImportanceOptions opt;
  opt.seed = 1;
  const auto ci = cluster_importance(table, names, labels, loss, opt);
  REQUIRE(ci.size() == 2);
  CHECK(ci[0].record.importance == 0.0);
  CHECK(ci[1].members == std::vector<std::size_t>{2});
  CHECK(ci[1].record.importance > 0.0);
}

TEST_CASE("owa breakdown") {
  const std::vector<double> owa{0.8, 1.0, 1.2, 0.6};
  const std::vector<PeriodKind> p{PeriodKind::Monthly, PeriodKind::Monthly, PeriodKind::Yearly, PeriodKind::Yearly};
  const std::vector<SeriesType> t{SeriesType::Micro, SeriesType::Micro, SeriesType::Micro, SeriesType::Finance};
  const auto b = owa_breakdown(owa, p, t);
  CHECK(b.global_mean == doctest::Approx(0.9));
  CHECK(b.n == 4);
  const auto& mm = b.cells[static_cast<int>(PeriodKind::Monthly)][static_cast<int>(SeriesType::Micro)];
  REQUIRE(mm.has_value());
  CHECK(mm->mean == doctest::Approx(0.9));
  CHECK(mm->n == 2);
  CHECK(!b.cells[static_cast<int>(PeriodKind::Hourly)][0].has_value());
  CHECK(*b.period_means[static_cast<int>(PeriodKind::Yearly)] == doctest::Approx(0.9));
  CHECK(*b.type_means[static_cast<int>(SeriesType::Micro)] == doctest::Approx(1.0));

  const std::vector<double> single{0.7, 0.9};
  const std::vector<PeriodKind> sp(2, PeriodKind::Daily);
  const std::vector<SeriesType> st(2, SeriesType::Other);
  const auto one = owa_breakdown(single, sp, st);
  const auto& cell = one.cells[static_cast<int>(PeriodKind::Daily)][static_cast<int>(SeriesType::Other)];
  CHECK(cell->mean == one.global_mean);
  CHECK(cell->p_value == 1.0);

  CHECK(breakdown_csv(b).find("Monthly") != std::string::npos);
  CHECK(breakdown_svg(b).rfind("<svg", 0) == 0);
}

TEST_CASE("bucket comparison") {
  Rng rng(7);
  std::vector<double> a, b;
  std::vector<std::string> buckets;
  for (int i = 0; i < 60; ++i) {
    a.push_back(rng.uniform(0.5, 1.5));
    b.push_back(a.back() + (i < 30 ? 0.1 + 0.01 * rng.normal() : 0.0));
    buckets.push_back(i < 30 ? "shifted" : "same");
  }
  const auto cells = compare_buckets(a, b, buckets);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].bucket == "same");
  CHECK(!cells[0].significant);
  CHECK(cells[0].mean_difference == 0.0);
  CHECK(cells[1].bucket == "shifted");
  CHECK(cells[1].significant);
  CHECK(cells[1].p_value < 0.01);
  CHECK(cells[1].mean_difference == doctest::Approx(-0.1).epsilon(0.05));

  CHECK_THROWS_AS(compare_buckets(a, std::vector<double>(3, 0.0), buckets), UnpairedSeries);
  CHECK(type_period_bucket(PeriodKind::Monthly, SeriesType::Micro).find("Monthly") != std::string::npos);
}

TEST_CASE("quantile bins") {
  std::vector<double> v;
  for (int i = 0; i < 100; ++i) v.push_back(std::sin(i * 1.7) * 10.0);
  const auto bins = quantile_bins(v, 5);
  std::vector<int> counts(5, 0);
  for (int b : bins) ++counts[b];
  for (int c : counts) CHECK(c == 20);
  // Bins are monotone in the value.
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j)
      if (v[i] < v[j]) CHECK(bins[i] <= bins[j]);

  // A monotone relationship gives monotone bin means.
  std::vector<double> loss(100), sum(5, 0.0);
  for (int i = 0; i < 100; ++i) loss[i] = 0.5 + 0.02 * v[i];
  for (int i = 0; i < 100; ++i) sum[bins[i]] += loss[i] / 20.0;
  for (int k = 1; k < 5; ++k) CHECK(sum[k] > sum[k - 1]);
}

TEST_CASE("importance renderings") {
  std::vector<ImportanceRecord> recs(3);
  recs[0] = {"a", 0.5, 4.0, 0.001, 5, {}};
  recs[1] = {"b", 0.01, 0.2, 0.4, 5, {}};
  recs[2] = {"c", -0.02, -1.0, 0.8, 5, {}};
  const auto csv = importance_csv(recs);
  CHECK(csv.rfind("feature,", 0) == 0);
  CHECK(csv.find("\na,") != std::string::npos);
  CHECK(importance_svg(recs).find("</svg>") != std::string::npos);
}
