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

// Command-line front end for the forecasting pipeline.
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "donut/errors.hpp"
#include "donut/io.hpp"
#include "donut/log.hpp"
#include "donut/pipeline.hpp"

namespace fs = std::filesystem;
namespace pl = donut::pipeline;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr int kExitVerify = 4;

struct Globals {
  std::string config;
  std::uint64_t seed = 42;
  bool seed_set = false;
  int threads = 1;
  std::string out;
  bool desk_scale = false;
  bool timings = false;
  bool verbose = false;
};

// Splits "a,b" into exactly `n` paths.
std::vector<fs::path> out_list(const std::string& text, std::size_t n, const char* what) {
  std::vector<fs::path> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) out.emplace_back(part);
  if (out.size() != n)
    throw donut::ConfigError(std::string(what) + " needs " + std::to_string(n) + " comma-separated output paths");
  return out;
}

std::vector<donut::ModelId> parse_pool(const std::string& text) {
  std::vector<donut::ModelId> pool;
  if (text.empty()) return {donut::kAllModels.begin(), donut::kAllModels.end()};
  std::stringstream ss(text);
  try {
    for (std::string part; std::getline(ss, part, ',');) pool.push_back(donut::parse_model(part));
  } catch (const donut::ParseError& e) {
    throw donut::ConfigError(e.what());
  }
  return pool;
}

pl::PipelineConfig load_config(const Globals& g) {
  auto cfg = pl::PipelineConfig::defaults(g.desk_scale);
  if (!g.config.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(donut::io::read_file(g.config));
    } catch (const nlohmann::json::exception& e) {
      throw donut::ConfigError(g.config + ": " + e.what());
    } catch (const donut::Error& e) {
      throw donut::ConfigError(e.what());
    }
    cfg = pl::PipelineConfig::from_json(j, cfg);
  }
  if (g.seed_set) cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.record_timings = g.timings;
  if (const char* env = std::getenv("DONUT_WORKDIR"); env && *env) cfg.work_dir = env;
  if (!g.out.empty()) cfg.work_dir = g.out;
  return cfg;
}

fs::path required_out(const Globals& g) {
  if (g.out.empty()) throw donut::ConfigError("--out is required");
  return g.out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-weighted forecast combination pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& s) { g.seed = s, g.seed_set = true; }, "Base random seed");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output path (file, list or directory)");
  app.add_flag("--desk-scale", g.desk_scale, "Use the laptop-sized hyperparameters");
  app.add_flag("--timings", g.timings, "Record stage timings in the manifest");
  app.add_flag("-v,--verbose", g.verbose, "Log progress to stderr");

  std::string corpus, forecasts, stat_features, lstm_features, model, net, history, clusters, pool, evaluation,
      importance_csv, model_forecasts;
  int series = 240, repeats = 5, k = 6;

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and copy it into canonical form");
  std::string train_file, meta_file;
  ingest->add_option("--train", train_file, "Training-value CSV")->required();
  ingest->add_option("--meta", meta_file, "Meta CSV (id,type,period[,m,h])")->required();

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus");
  synth->add_option("--series", series, "Number of series")->check(CLI::PositiveNumber);

  auto* forecast = app.add_subcommand("forecast", "Run the 14 forecasters on every series");
  forecast->add_option("--corpus", corpus)->required();

  auto* features = app.add_subcommand("features", "Extract the 42 statistical features");
  features->add_option("--corpus", corpus)->required();

  auto* train_ae = app.add_subcommand("train-ae", "Train the sequence autoencoder");
  train_ae->add_option("--corpus", corpus)->required();
  train_ae->add_option("--history", history, "Per-epoch loss CSV");

  auto* encode = app.add_subcommand("encode", "Embed every series with a trained autoencoder");
  encode->add_option("--model", model)->required();
  encode->add_option("--corpus", corpus)->required();

  auto add_feature_inputs = [&](CLI::App* sub) {
    sub->add_option("--features", stat_features, "Statistical feature CSV")->required();
    sub->add_option("--lstm", lstm_features, "Embedding CSV")->required();
    sub->add_option("--forecasts", forecasts, "Model forecast CSV")->required();
    sub->add_option("--corpus", corpus)->required();
  };

  auto* train_wn = app.add_subcommand("train-weightnet", "Train the weighting network");
  add_feature_inputs(train_wn);
  train_wn->add_option("--history", history, "Training history JSON");

  auto* predict = app.add_subcommand("predict", "Predict combination weights and forecasts");
  predict->add_option("--net", net)->required();
  add_feature_inputs(predict);

  auto* evaluate = app.add_subcommand("evaluate", "Score point forecasts with sMAPE, MASE and OWA");
  evaluate->add_option("--forecasts", forecasts, "Point forecast CSV (id,v1..vh)")->required();
  evaluate->add_option("--model-forecasts", model_forecasts, "Model forecast CSV")->required();
  evaluate->add_option("--corpus", corpus)->required();
  evaluate->add_option("--history", history, "Weight-net history JSON (adds validation figures)");

  auto* oracle = app.add_subcommand("oracle", "Solve the ex-post optimal weights per series");
  oracle->add_option("--forecasts", forecasts)->required();
  oracle->add_option("--corpus", corpus)->required();
  oracle->add_option("--pool", pool, "Comma-separated model names (default: all 14)");

  auto* greedy = app.add_subcommand("greedy", "Greedy ensemble-building curve");
  greedy->add_option("--forecasts", forecasts)->required();
  greedy->add_option("--corpus", corpus)->required();
  greedy->add_option("--pool", pool);

  auto* imp = app.add_subcommand("importance", "Permutation feature importance");
  imp->add_option("--net", net)->required();
  add_feature_inputs(imp);
  imp->add_option("--history", history, "Weight-net history JSON (validation rows)")->required();
  imp->add_option("--clusters", clusters, "clusters.csv from the cluster command")->required();
  imp->add_option("--repeats", repeats)->check(CLI::PositiveNumber);

  auto* cluster = app.add_subcommand("cluster", "Ward clustering of the feature correlations");
  add_feature_inputs(cluster);
  cluster->add_option("--k", k, "Number of clusters")->check(CLI::Range(2, 76));

  auto* report = app.add_subcommand("report", "Breakdown tables and SVG charts");
  report->add_option("--evaluation", evaluation)->required();
  report->add_option("--importance", importance_csv)->required();

  auto* verify = app.add_subcommand("verify", "Check a work directory against its manifest");
  auto* run_all = app.add_subcommand("run-all", "Run every stage in a work directory");
  run_all->add_option("--corpus", corpus, "Corpus directory (default: synthesize one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  donut::log::threshold() = g.verbose ? donut::log::Level::Info : donut::log::Level::Warn;

  // Settings problems are reported before any work starts.
  pl::PipelineConfig cfg;
  try {
    cfg = load_config(g);
    if (!corpus.empty()) cfg.corpus = corpus;
    if (!pool.empty()) cfg.pool = parse_pool(pool);
    if (!*verify) cfg.validate();
  } catch (const donut::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const pl::FeatureInputs fin{stat_features, lstm_features, forecasts, corpus};
  try {
    if (*ingest) {
      donut::write_corpus_dir(required_out(g), donut::load_corpus(train_file, meta_file));
    } else if (*synth) {
      pl::synth(series, cfg.seed, required_out(g));
    } else if (*forecast) {
      pl::forecast(corpus, required_out(g), cfg.threads);
    } else if (*features) {
      pl::features(corpus, required_out(g), cfg.threads);
    } else if (*train_ae) {
      const auto out = required_out(g);
      fs::path hist = history.empty() ? fs::path(out).replace_extension(".history.csv") : fs::path(history);
      pl::train_ae(corpus, cfg.ae, cfg.seed, out, hist);
    } else if (*encode) {
      pl::encode(model, corpus, required_out(g));
    } else if (*train_wn) {
      const auto out = required_out(g);
      fs::path hist = history.empty() ? fs::path(out).replace_extension(".history.json") : fs::path(history);
      pl::train_weightnet(fin, cfg.weightnet, cfg.seed, out, hist);
    } else if (*predict) {
      const auto outs = out_list(required_out(g).string(), 2, "predict");
      pl::predict(net, fin, outs[0], outs[1]);
    } else if (*evaluate) {
      const auto out = required_out(g);
      const auto outs = out.string().find(',') == std::string::npos
                            ? std::vector<fs::path>{out, fs::path(out).replace_extension(".summary.json")}
                            : out_list(out.string(), 2, "evaluate");
      pl::evaluate(forecasts, model_forecasts, corpus, history, outs[0], outs[1]);
    } else if (*oracle) {
      pl::oracle(forecasts, corpus, cfg.pool, required_out(g), cfg.threads);
    } else if (*greedy) {
      pl::greedy(forecasts, corpus, cfg.pool, required_out(g));
    } else if (*imp) {
      const auto outs = out_list(required_out(g).string(), 2, "importance");
      pl::importance(net, fin, history, clusters, repeats, cfg.seed, outs[0], outs[1]);
    } else if (*cluster) {
      const auto outs = out_list(required_out(g).string(), 2, "cluster");
      pl::cluster(fin, k, outs[0], outs[1]);
    } else if (*report) {
      pl::report(evaluation, importance_csv, required_out(g));
    } else if (*verify) {
      const auto result = pl::verify(cfg.work_dir);
      for (const auto& p : result.problems) std::cerr << "verify: " << p << '\n';
      if (!result.ok) return kExitVerify;
      std::cout << "verify: " << cfg.work_dir.string() << " is consistent\n";
    } else if (*run_all) {
      const auto m = pl::run_all(cfg);
      std::size_t ran = 0;
      for (const auto& s : m.stages) ran += s.skipped ? 0 : 1;
      std::cout << "run-all: " << ran << " of " << m.stages.size() << " stages ran in " << cfg.work_dir.string()
                << '\n';
    }
  } catch (const donut::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
