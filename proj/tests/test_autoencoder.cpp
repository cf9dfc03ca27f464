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
#include "donut/autoencoder.hpp"
#include "donut/errors.hpp"
#include "fd_oracle.hpp"

using namespace donut;

namespace {

AeConfig tiny_config() {
  AeConfig c;
  c.embedding_dim = 3;
  c.hidden_dim = 4;
  c.max_length = 20;
  c.epochs = 25;
  c.batch = 4;
  c.dropout = 0.0;
  c.weight_decay = 0.0;
  c.lr = 0.01;
  return c;
}

std::vector<double> wave(int n, double freq, double phase) {
  std::vector<double> x;
  for (int t = 0; t < n; ++t) x.push_back(10.0 + std::sin(2.0 * M_PI * freq * t / n + phase));
  return x;
}

}  // namespace

TEST_CASE("preprocessing") {
  const auto c = preprocess(std::vector<double>(7, 4.0), 500);
  CHECK(c.values == std::vector<double>(7, 0.0));
  CHECK(c.std == kStdFloor);

  const auto p = preprocess(std::vector<double>{1, 2, 3}, 500);
  CHECK(p.mean == 2.0);
  CHECK(p.std == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(std::abs(std::accumulate(p.values.begin(), p.values.end(), 0.0)) < 1e-15);

  std::vector<double> long_series(1200);
  std::iota(long_series.begin(), long_series.end(), 0.0);
  const auto l = preprocess(long_series, 500);
  REQUIRE(l.values.size() == 500);
  CHECK(l.mean == doctest::Approx(949.5));
}

TEST_CASE("config validation") {
  auto c = AeConfig::paper();
  CHECK(c.embedding_dim == 32);
  CHECK(c.hidden_dim == 128);
  CHECK(c.epochs == 500);
  CHECK(c.batch == 512);
  CHECK(c.max_length == 500);
  CHECK_NOTHROW(c.validate());
  c.embedding_dim = 500;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  const auto d = AeConfig::desk();
  CHECK(d.hidden_dim == 64);
  CHECK(d.epochs == 100);
  CHECK(d.batch == 64);
  CHECK(AeConfig::from_json(d.to_json(), AeConfig::paper()).to_json() == d.to_json());
}

TEST_CASE("untrained models refuse to encode") {
  Autoencoder ae(tiny_config(), 1);
  CHECK_THROWS_AS(ae.encode(wave(10, 1, 0)), UntrainedModel);
  CHECK_THROWS_AS(ae.reconstruct(wave(10, 1, 0)), UntrainedModel);
}

TEST_CASE("encoder-decoder gradients match finite differences") {
  Autoencoder ae(tiny_config(), 3);
  // Mixed lengths exercise the padding mask.
  std::vector<std::vector<double>> seqs;
  for (int n : {8, 8, 5}) seqs.push_back(preprocess(wave(n, 1.5, n * 0.3), 20).values);
  std::vector<const std::vector<double>*> batch;
  for (const auto& s : seqs) batch.push_back(&s);

  Rng rng(0);
  nn::zero_grads(ae.params());
  ae.batch_loss(batch, false, true, rng);
  auto loss = [&] {
    Rng r(0);
    return ae.batch_loss(batch, false, false, r);
  };
  CHECK(test::fd_max_rel_error(loss, ae.params()) < 1e-4);
}

TEST_CASE("training, inference and persistence") {
  std::vector<std::vector<double>> corpus;
  for (int i = 0; i < 24; ++i) corpus.push_back(wave(12 + i % 6, 1.0 + (i % 3), 0.4 * i));
  std::vector<double> epoch_losses;
  auto result = train_autoencoder(corpus, tiny_config(), 5,
                                  [&](int, double train, double) { epoch_losses.push_back(train); });
  const auto& h = result.history;
  REQUIRE(h.train_loss.size() == 25);
  CHECK(h.validation_loss.size() == 25);
  CHECK(epoch_losses == h.train_loss);
  CHECK(h.train_loss.back() < h.train_loss.front());
  for (double v : h.train_loss) CHECK(std::isfinite(v));

  const auto& ae = result.model;
  CHECK(ae.trained());
  const auto e1 = ae.encode(corpus[0]);
  CHECK(e1.size() == 3);
  CHECK(ae.encode(corpus[0]) == e1);
  // Standardizing first changes nothing.
  const auto e2 = ae.encode(preprocess(corpus[0], 20).values);
  for (std::size_t k = 0; k < e1.size(); ++k) CHECK(e2[k] == doctest::Approx(e1[k]).epsilon(1e-12));
  CHECK(ae.encode(wave(40, 2, 0)).size() == 3);
  CHECK(ae.reconstruct(corpus[3]).size() == corpus[3].size());

  const auto many = ae.encode_many(corpus);
  REQUIRE(many.size() == corpus.size());
  // Batched and single-row products may round differently.
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto one = ae.encode(corpus[i]);
    for (std::size_t k = 0; k < one.size(); ++k) CHECK(many[i][k] == doctest::Approx(one[k]).epsilon(1e-12));
  }

  const auto back = Autoencoder::from_json(nlohmann::json::parse(ae.to_json().dump()));
  CHECK(back.encode(corpus[7]) == ae.encode(corpus[7]));

  // Same seed, same model.
  auto again = train_autoencoder(corpus, tiny_config(), 5);
  CHECK(again.history.train_loss == h.train_loss);
  CHECK(again.model.encode(corpus[1]) == ae.encode(corpus[1]));
  CHECK_THROWS_AS(train_autoencoder({corpus[0]}, tiny_config(), 5), Error);
}

TEST_CASE("correlation and embedding csv") {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1};
  CHECK(reconstruction_correlation(a, b) == doctest::Approx(1.0));
  CHECK(reconstruction_correlation(a, c) == doctest::Approx(-1.0));
  const std::vector<std::string> ids{"x"};
  const auto csv = embeddings_csv(ids, {std::vector<double>(32, 0.5)});
  CHECK(csv.rfind("id,lstm_0,lstm_1,", 0) == 0);
  CHECK(csv.find("lstm_31\n") != std::string::npos);
}
