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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "donut/autoencoder.hpp"
#include "donut/corpus.hpp"
#include "donut/model_pool.hpp"
#include "donut/stat_features.hpp"
#include "donut/weight_net.hpp"

namespace donut::pipeline {

namespace fs = std::filesystem;

struct PipelineConfig {
  fs::path corpus;  // empty: synthesize `synthetic_series` series
  fs::path work_dir = "donut_work";
  int synthetic_series = 240;
  AeConfig ae = AeConfig::paper();
  WeightNetConfig weightnet = WeightNetConfig::paper();
  std::vector<ModelId> pool{kAllModels.begin(), kAllModels.end()};
  std::uint64_t seed = 42;
  int threads = 1;
  int importance_repeats = 5;
  int clusters = 6;
  bool desk_scale = false;
  bool record_timings = false;

  /// Paper hyperparameter tables, or the desk defaults.
  static PipelineConfig defaults(bool desk_scale);
  void validate() const;
  /// Settings that influence outputs (no paths, threads or timing switch).
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j, PipelineConfig base);
  std::string hash() const;
};

inline constexpr int kManifestSchema = 1;

struct StageRecord {
  std::string name;
  std::string config_hash;
  std::map<std::string, std::string> inputs;   // work-dir relative path -> sha256
  std::map<std::string, std::string> outputs;  // work-dir relative path -> sha256
  bool skipped = false;
  double seconds = 0.0;
};

struct RunManifest {
  int schema_version = kManifestSchema;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<StageRecord> stages;

  const StageRecord* find(const std::string& stage) const;
  nlohmann::json to_json(bool with_timings) const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written by index so the outcome is independent of scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// ---- stage bodies (file in, file out) ----------------------------------------------

/// Loads (or synthesizes) the corpus and writes it to `out_dir`.
void ingest(const PipelineConfig& cfg, const fs::path& out_dir);
/// Synthesizes a corpus spread over all period/type cells.
void synth(int series, std::uint64_t seed, const fs::path& out_dir);

/// Series long enough for a holdout, in corpus order.
Corpus evaluable(const Corpus& corpus);

void forecast(const fs::path& corpus_dir, const fs::path& out_csv, int threads);
void features(const fs::path& corpus_dir, const fs::path& out_csv, int threads);
void train_ae(const fs::path& corpus_dir, const AeConfig& cfg, std::uint64_t seed, const fs::path& out_model,
              const fs::path& out_history);
void encode(const fs::path& model, const fs::path& corpus_dir, const fs::path& out_csv);

struct FeatureInputs {
  fs::path stat_features;
  fs::path lstm_features;
  fs::path forecasts;
  fs::path corpus_dir;
};

void train_weightnet(const FeatureInputs& in, const WeightNetConfig& cfg, std::uint64_t seed,
                     const fs::path& out_model, const fs::path& out_history);
void predict(const fs::path& net, const FeatureInputs& in, const fs::path& out_weights,
             const fs::path& out_forecasts);
/// Scores point forecasts (rows "id,v1..vh") against the holdout; the
/// summary adds the uniform average of `model_forecasts` and, when a
/// history file is given, validation-only figures.
void evaluate(const fs::path& point_forecasts, const fs::path& model_forecasts, const fs::path& corpus_dir,
              const fs::path& history, const fs::path& out_csv, const fs::path& out_summary);
void oracle(const fs::path& forecasts, const fs::path& corpus_dir, const std::vector<ModelId>& pool,
            const fs::path& out_csv, int threads);
void greedy(const fs::path& forecasts, const fs::path& corpus_dir, const std::vector<ModelId>& pool,
            const fs::path& out_csv);
void cluster(const FeatureInputs& in, int k, const fs::path& out_dendrogram, const fs::path& out_clusters);
void importance(const fs::path& net, const FeatureInputs& in, const fs::path& history, const fs::path& clusters,
                int repeats, std::uint64_t seed, const fs::path& out_csv, const fs::path& out_cluster_csv);
void report(const fs::path& evaluation_csv, const fs::path& importance_csv, const fs::path& out_dir);

// ---- orchestration -------------------------------------------------------------------

/// Runs every stage in order inside cfg.work_dir, skipping stages whose
/// inputs, outputs and settings match the stored manifest. Any stage that
/// runs forces every later stage to run as well.
RunManifest run_all(const PipelineConfig& cfg);

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Re-hashes every artifact listed in the work dir's manifest and checks
/// that each file in the work dir is produced by exactly one stage.
VerifyResult verify(const fs::path& work_dir);

}  // namespace donut::pipeline
