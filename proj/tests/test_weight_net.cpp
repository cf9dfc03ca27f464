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
#include <numeric>

#include "doctest.h"
#include "donut/errors.hpp"
#include "donut/metrics.hpp"
#include "donut/weight_net.hpp"
#include "fd_oracle.hpp"

using namespace donut;

namespace {

ForecastMatrix random_matrix(const std::string& id, int h, Rng& rng) {
  ForecastMatrix fm;
  fm.id = id;
  fm.h = h;
  for (std::size_t i = 0; i < kNumModels * static_cast<std::size_t>(h); ++i) fm.b.push_back(rng.uniform(5.0, 15.0));
  return fm;
}

SeriesTarget random_target(const std::string& id, int h, Rng& rng) {
  SeriesTarget t;
  t.forecasts = random_matrix(id, h, rng);
  for (int k = 0; k < h; ++k) t.actual.push_back(rng.uniform(5.0, 15.0));
  t.smape_naive2 = rng.uniform(5.0, 20.0);
  t.mase_naive2 = rng.uniform(0.5, 2.0);
  t.scale = rng.uniform(0.5, 3.0);
  return t;
}

// Direct sMAPE/MASE arithmetic for one series.
double owa_by_hand(const std::vector<double>& f, const SeriesTarget& t) {
  double sm = 0.0, ma = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    sm += 2.0 * std::abs(t.actual[k] - f[k]) / (std::abs(t.actual[k]) + std::abs(f[k]));
    ma += std::abs(t.actual[k] - f[k]) / t.scale;
  }
  sm *= 100.0 / f.size();
  ma /= f.size();
  return 0.5 * (sm / t.smape_naive2 + ma / t.mase_naive2);
}

WeightNetConfig small_config() {
  WeightNetConfig c;
  c.hidden_dim = 8;
  c.epochs = 5;
  c.batch = 16;
  c.dropout = 0.0;
  c.lr = 0.01;
  return c;
}

nn::Tensor2 random_rows(int n, Rng& rng) {
  nn::Tensor2 x(n, static_cast<Eigen::Index>(kNumFeatures));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("feature names and assembly") {
  const auto& names = feature_names();
  REQUIRE(names.size() == 76);
  CHECK(names[0] == "x_acf1");
  CHECK(names[42] == "lstm_0");
  CHECK(names[73] == "lstm_31");
  CHECK(names[74] == "period");
  CHECK(names[75] == "type");

  StatFeatures stat;
  for (std::size_t i = 0; i < kNumStatFeatures; ++i) stat.values[i] = static_cast<double>(i);
  const std::vector<double> emb(32, -1.0);
  const auto f = raw_features("s", &stat, &emb, PeriodKind::Monthly, SeriesType::Micro);
  CHECK(f[41] == 41.0);
  CHECK(f[42] == -1.0);
  CHECK(f[74] == static_cast<double>(static_cast<int>(PeriodKind::Monthly)));
  CHECK(f[75] == static_cast<double>(static_cast<int>(SeriesType::Micro)));
  CHECK_THROWS_AS(raw_features("s", nullptr, &emb, PeriodKind::Monthly, SeriesType::Micro), MissingPart);
  const std::vector<double> short_emb(5, 0.0);
  CHECK_THROWS_AS(raw_features("s", &stat, &short_emb, PeriodKind::Monthly, SeriesType::Micro), MissingPart);
}

TEST_CASE("standardizer") {
  Rng rng(1);
  std::vector<FeatureVector> rows(50);
  for (auto& r : rows)
    for (auto& v : r) v = rng.normal(3.0, 2.0);
  for (auto& r : rows) r[10] = 7.0;  // constant column
  const auto s = Standardizer::fit(rows);
  FeatureVector mean_row;
  for (std::size_t c = 0; c < kNumFeatures; ++c) mean_row[c] = s.mean[c];
  const auto z = s.apply(mean_row);
  for (double v : z) CHECK(v == 0.0);
  CHECK(s.std[10] == doctest::Approx(1e-8));

  FeatureVector with_nan = rows[0];
  with_nan[3] = std::nan("");
  CHECK(s.apply(with_nan)[3] == 0.0);

  const auto back = Standardizer::from_json(nlohmann::json::parse(s.to_json().dump()));
  CHECK(back.apply(rows[4]) == s.apply(rows[4]));
}

TEST_CASE("forward pass stays on the simplex") {
  WeightNet net(small_config(), 2);
  FeatureVector zero{};
  const auto u = net.forward(zero);
  for (double w : u) CHECK(w == doctest::Approx(1.0 / 14.0).epsilon(1e-15));

  Rng rng(3);
  net.output_layer().weight().value = nn::Tensor2::Random(8, 14);
  for (int trial = 0; trial < 200; ++trial) {
    FeatureVector f;
    for (auto& v : f) v = 10.0 * rng.normal();
    const auto w = net.forward(f);
    double sum = 0.0;
    for (double v : w) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }

  WeightNet spike(small_config(), 2);
  spike.output_layer().bias().value(0, 5) = 20.0;
  CHECK(spike.forward(zero)[5] > 0.999);
}

TEST_CASE("combine") {
  Rng rng(4);
  const auto b = random_matrix("x", 6, rng);
  std::vector<double> one_hot(14, 0.0);
  one_hot[9] = 1.0;
  const auto row9 = b.row(9);
  CHECK(combine(one_hot, b) == std::vector<double>(row9.begin(), row9.end()));

  ForecastMatrix pair = b;
  for (int t = 0; t < 6; ++t) {
    pair.b[0 * 6 + t] = 4.0 - 1.0;
    pair.b[1 * 6 + t] = 4.0 + 1.0;
  }
  std::vector<double> half(14, 0.0);
  half[0] = half[1] = 0.5;
  CHECK(combine(half, pair) == std::vector<double>(6, 4.0));

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w(14);
    for (auto& v : w) v = rng.uniform();
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) v /= s;
    const auto y = combine(w, b);
    for (int t = 0; t < 6; ++t) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t i = 0; i < kNumModels; ++i) lo = std::min(lo, b.at(i, t)), hi = std::max(hi, b.at(i, t));
      CHECK(y[t] >= lo - 1e-12);
      CHECK(y[t] <= hi + 1e-12);
    }
  }
  CHECK_THROWS_AS(combine(std::vector<double>(3, 0.3), b), ShapeMismatch);
}

TEST_CASE("series owa and its gradient") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_target("s", 7, rng);
    std::vector<double> f(7);
    for (auto& v : f) v = rng.uniform(5.0, 15.0);
    CHECK(series_owa(f, t) == doctest::Approx(owa_by_hand(f, t)).epsilon(1e-12));
    const auto g = series_owa_gradient(f, t);
    for (int k = 0; k < 7; ++k) {
      auto up = f, down = f;
      up[k] += 1e-6;
      down[k] -= 1e-6;
      const double numeric = (owa_by_hand(up, t) - owa_by_hand(down, t)) / 2e-6;
      CHECK(g[k] == doctest::Approx(numeric).epsilon(1e-5));
    }
  }
}

TEST_CASE("make_target matches the metrics module") {
  std::vector<double> train, test;
  for (int t = 0; t < 40; ++t) train.push_back(20.0 + 3.0 * std::sin(t * 0.5) + 0.1 * t);
  for (int t = 40; t < 44; ++t) test.push_back(20.0 + 3.0 * std::sin(t * 0.5) + 0.1 * t);
  ForecastMatrix fm;
  fm.id = "q";
  fm.h = 4;
  fm.b.assign(kNumModels * 4, 21.0);
  const auto t = make_target(fm, train, test, 4);
  const auto n2 = metrics::naive2(train, 4, 4);
  CHECK(t.scale == metrics::mase_scale(train, 4));
  CHECK(t.smape_naive2 == metrics::smape(test, n2));
  CHECK(t.mase_naive2 == doctest::Approx(metrics::mase(train, 4, test, n2)).epsilon(1e-14));
  // Naive2 itself scores an OWA of exactly one.
  CHECK(series_owa(n2, t) == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(make_target(fm, train, std::vector<double>(3, 1.0), 4), LengthMismatch);
  CHECK_THROWS_AS(make_target(fm, std::vector<double>(10, 2.0), test, 4), DegenerateScale);
}

TEST_CASE("batch loss gradient through the owa") {
  Rng rng(6);
  std::vector<SeriesTarget> targets;
  for (int i = 0; i < 6; ++i) targets.push_back(random_target("t" + std::to_string(i), 5, rng));
  std::vector<const SeriesTarget*> ptrs;
  for (const auto& t : targets) ptrs.push_back(&t);
  const auto x = random_rows(6, rng);

  WeightNet net(small_config(), 7);
  // Leave the zero output init so every parameter carries signal.
  net.output_layer().weight().value = 0.3 * nn::Tensor2::Random(8, 14);
  nn::zero_grads(net.params());
  Rng r0(0);
  const double loss0 = net.batch_loss(x, ptrs, false, true, r0);

  // The loss is the mean per-series OWA of the combined forecasts.
  const auto w = net.forward_batch(x);
  double mean = 0.0;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> wi(w.row(i).data(), w.row(i).data() + 14);
    mean += owa_by_hand(combine(wi, targets[i].forecasts), targets[i]) / 6.0;
  }
  CHECK(loss0 == doctest::Approx(mean).epsilon(1e-12));

  auto loss = [&] {
    Rng r(0);
    return net.batch_loss(x, ptrs, false, false, r);
  };
  CHECK(test::fd_max_rel_error(loss, net.params()) < 1e-4);
}

TEST_CASE("training is seeded and reports history") {
  Rng rng(8);
  std::vector<FeatureVector> rows(60);
  std::vector<SeriesTarget> targets;
  for (int i = 0; i < 60; ++i) {
    for (auto& v : rows[i]) v = rng.normal();
    targets.push_back(random_target("s" + std::to_string(i), 4, rng));
  }
  const auto a = train_weight_net(rows, targets, small_config(), 11);
  const auto b = train_weight_net(rows, targets, small_config(), 11);
  const auto& h = a.history;
  CHECK(h.train_owa.size() == 6);
  CHECK(h.validation_owa.size() == 6);
  CHECK(h.validation_pooled_owa.size() == 6);
  CHECK(h.train_rows.size() == 48);
  CHECK(h.validation_rows.size() == 12);
  CHECK(h.train_owa == b.history.train_owa);
  CHECK(a.net.to_json().dump() == b.net.to_json().dump());
  // Epoch 0 is the untrained net: uniform weights.
  CHECK(h.validation_owa[0] == doctest::Approx(h.uniform_validation_owa).epsilon(1e-12));

  const auto back = WeightNet::from_json(nlohmann::json::parse(a.net.to_json().dump()));
  const auto f = a.net.standardizer().apply(rows[3]);
  CHECK(back.forward(f) == a.net.forward(f));
}

TEST_CASE("ensemble usage and weight evaluation") {
  std::vector<SimplexWeights> one_hot(10), uniform(10);
  for (auto& w : one_hot) w.fill(0.0), w[2] = 1.0;
  for (auto& w : uniform) w.fill(1.0 / 14.0);
  auto u = ensemble_usage_stats(one_hot);
  CHECK(u.size_histogram[1] == 10);
  CHECK(u.mean_weight[2] == 1.0);
  u = ensemble_usage_stats(uniform);
  CHECK(u.size_histogram[14] == 10);

  Rng rng(9);
  std::vector<SeriesTarget> targets;
  for (int i = 0; i < 10; ++i) targets.push_back(random_target("e", 3, rng));
  std::vector<const SeriesTarget*> ptrs;
  for (const auto& t : targets) ptrs.push_back(&t);
  const auto s = evaluate_weights(one_hot, ptrs);
  double per = 0.0;
  for (const auto& t : targets) {
    const auto r = t.forecasts.row(2);
    per += owa_by_hand(std::vector<double>(r.begin(), r.end()), t) / 10.0;
  }
  CHECK(s.per_series == doctest::Approx(per).epsilon(1e-12));
}

TEST_CASE("config presets") {
  const auto p = WeightNetConfig::paper();
  CHECK(p.hidden_dim == 1024);
  CHECK(p.epochs == 12);
  CHECK(p.batch == 4096);
  CHECK(p.dropout == 0.258);
  CHECK(p.weight_decay == 0.003064);
  auto bad = p;
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
