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

#include "donut/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "donut/analysis.hpp"
#include "donut/errors.hpp"
#include "donut/io.hpp"
#include "donut/log.hpp"
#include "donut/metrics.hpp"
#include "donut/numeric.hpp"
#include "donut/oracle.hpp"
#include "donut/rng.hpp"
#include "donut/synthetic.hpp"

namespace donut::pipeline {

using nlohmann::json;

namespace {

// Seed tags for the stages that draw random numbers.
constexpr std::uint64_t kSynthTag = 0;
constexpr std::uint64_t kAeTag = 1;
constexpr std::uint64_t kWeightNetTag = 2;
constexpr std::uint64_t kImportanceTag = 3;

std::string stage_hash(const std::string& stage, const json& settings) {
  return io::sha256_hex(stage + "\n" + settings.dump());
}

std::vector<std::string> pool_names(const std::vector<ModelId>& pool) {
  std::vector<std::string> out;
  for (auto m : pool) out.emplace_back(model_name(m));
  return out;
}

std::vector<double> parse_row_values(const std::vector<std::string>& cells, std::size_t from, std::size_t to) {
  std::vector<double> out;
  for (std::size_t c = from; c < to; ++c) out.push_back(io::parse_double(cells[c]));
  return out;
}

std::map<std::string, StatFeatures> read_stat_features(const fs::path& path) {
  const auto table = io::read_table(path);
  if (table.header.size() != kNumStatFeatures + 1) throw ParseError(path.string() + ": expected 42 feature columns");
  for (std::size_t k = 0; k < kNumStatFeatures; ++k)
    if (table.header[k + 1] != kStatFeatureNames[k])
      throw ParseError(path.string() + ": column " + std::to_string(k + 1) + " is '" + table.header[k + 1] +
                       "', expected '" + std::string(kStatFeatureNames[k]) + "'");
  std::map<std::string, StatFeatures> out;
  for (const auto& row : table.rows) {
    StatFeatures f;
    for (std::size_t k = 0; k < kNumStatFeatures; ++k) f.values[k] = io::parse_double(row[k + 1]);
    out[row[0]] = f;
  }
  return out;
}

std::map<std::string, std::vector<double>> read_embeddings(const fs::path& path) {
  const auto table = io::read_table(path);
  std::map<std::string, std::vector<double>> out;
  for (const auto& row : table.rows) out[row[0]] = parse_row_values(row, 1, row.size());
  return out;
}

std::map<std::string, ForecastMatrix> read_forecasts(const fs::path& path) {
  std::map<std::string, ForecastMatrix> out;
  for (auto& f : parse_forecasts_csv(io::read_file(path))) out[f.id] = std::move(f);
  return out;
}

// Header-less "id,v1,...,vh" rows.
std::map<std::string, std::vector<double>> read_point_forecasts(const fs::path& path) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& line : io::read_lines(path)) {
    if (line.empty()) continue;
    const auto cells = io::split_csv_line(line);
    out[cells[0]] = parse_row_values(cells, 1, cells.size());
  }
  return out;
}

std::string point_forecasts_csv(const std::vector<std::string>& ids, const std::vector<std::vector<double>>& f) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i];
    for (double v : f[i]) out += "," + io::format_double(v);
    out += "\n";
  }
  return out;
}

// Every evaluable series joined with its forecasts and features.
struct Assembled {
  Corpus series;
  std::vector<SeriesTarget> targets;
  std::vector<FeatureVector> raw;
};

Assembled assemble(const FeatureInputs& in, bool with_features) {
  const Corpus corpus = evaluable(load_corpus_dir(in.corpus_dir));
  const auto forecasts = read_forecasts(in.forecasts);
  std::map<std::string, StatFeatures> stat;
  std::map<std::string, std::vector<double>> emb;
  if (with_features) {
    stat = read_stat_features(in.stat_features);
    emb = read_embeddings(in.lstm_features);
  }
  Assembled a;
  for (const auto& ts : corpus) {
    const auto f = forecasts.find(ts.id);
    if (f == forecasts.end()) throw MissingPart(ts.id, "forecast");
    const auto sp = split(ts);
    SeriesTarget target;
    try {
      target = make_target(f->second, sp.train, sp.test, ts.period.m);
    } catch (const DegenerateScale&) {
      log::warn("series '" + ts.id + "' has a zero MASE scale and is left out");
      continue;
    }
    if (with_features) {
      const auto s = stat.find(ts.id);
      const auto e = emb.find(ts.id);
      a.raw.push_back(raw_features(ts.id, s == stat.end() ? nullptr : &s->second,
                                   e == emb.end() ? nullptr : &e->second, ts.period.kind, ts.type));
    }
    a.series.push_back(ts);
    a.targets.push_back(std::move(target));
  }
  if (a.series.empty()) throw Error("no evaluable series in " + in.corpus_dir.string());
  return a;
}

std::vector<double> uniform_forecast(const ForecastMatrix& f) {
  std::vector<double> w(kNumModels, 1.0 / static_cast<double>(kNumModels));
  return combine(w, f);
}

json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

std::set<std::string> validation_ids(const fs::path& history) {
  std::set<std::string> out;
  if (history.empty()) return out;
  for (const auto& id : read_json(history).at("validation_ids")) out.insert(id.get<std::string>());
  return out;
}

}  // namespace

// ---- configuration --------------------------------------------------------------------

PipelineConfig PipelineConfig::defaults(bool desk_scale) {
  PipelineConfig c;
  c.desk_scale = desk_scale;
  if (desk_scale) {
    c.ae = AeConfig::desk();
    c.weightnet = WeightNetConfig::desk();
  }
  return c;
}

void PipelineConfig::validate() const {
  if (!corpus.empty()) {
    if (!fs::exists(corpus / "train.csv") || !fs::exists(corpus / "meta.csv"))
      throw ConfigError("corpus directory '" + corpus.string() + "' needs train.csv and meta.csv");
  } else if (synthetic_series < 2) {
    throw ConfigError("a synthetic corpus needs at least two series");
  }
  if (work_dir.empty()) throw ConfigError("work directory is empty");
  if (pool.empty()) throw ConfigError("model pool is empty");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (importance_repeats < 1) throw ConfigError("importance repeats must be at least 1");
  if (clusters < 2) throw ConfigError("need at least two feature clusters");
  if (ae.embedding_dim != static_cast<int>(kEmbeddingDim))
    throw ConfigError("the weight net expects " + std::to_string(kEmbeddingDim) + "-dimensional embeddings");
  ae.validate();
  weightnet.validate();
}

json PipelineConfig::to_json() const {
  return {{"corpus", corpus.string()},
          {"synthetic_series", synthetic_series},
          {"ae", ae.to_json()},
          {"weightnet", weightnet.to_json()},
          {"pool", pool_names(pool)},
          {"seed", seed},
          {"importance_repeats", importance_repeats},
          {"clusters", clusters},
          {"desk_scale", desk_scale}};
}

PipelineConfig PipelineConfig::from_json(const json& j, PipelineConfig c) {
  static const std::set<std::string> known = {"corpus", "work_dir", "synthetic_series", "ae", "weightnet", "pool",
                                              "seed", "threads", "importance_repeats", "clusters", "desk_scale"};
  try {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    for (const auto& [key, _] : j.items())
      if (!known.contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
    if (j.contains("corpus")) c.corpus = j["corpus"].get<std::string>();
    if (j.contains("work_dir")) c.work_dir = j["work_dir"].get<std::string>();
    c.synthetic_series = j.value("synthetic_series", c.synthetic_series);
    c.desk_scale = j.value("desk_scale", c.desk_scale);
    if (j.contains("ae")) c.ae = AeConfig::from_json(j["ae"], c.ae);
    if (j.contains("weightnet")) c.weightnet = WeightNetConfig::from_json(j["weightnet"], c.weightnet);
    if (j.contains("pool")) {
      c.pool.clear();
      for (const auto& name : j["pool"]) c.pool.push_back(parse_model(name.get<std::string>()));
    }
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.importance_repeats = j.value("importance_repeats", c.importance_repeats);
    c.clusters = j.value("clusters", c.clusters);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::string PipelineConfig::hash() const { return io::sha256_hex(to_json().dump()); }

// ---- manifest -----------------------------------------------------------------------

const StageRecord* RunManifest::find(const std::string& stage) const {
  for (const auto& s : stages)
    if (s.name == stage) return &s;
  return nullptr;
}

json RunManifest::to_json(bool with_timings) const {
  json stages_json = json::array();
  for (const auto& s : stages) {
    json e = {{"name", s.name}, {"config_hash", s.config_hash}, {"inputs", s.inputs}, {"outputs", s.outputs}};
    if (with_timings) e["seconds"] = s.seconds;
    stages_json.push_back(std::move(e));
  }
  return {{"schema_version", schema_version}, {"config_hash", config_hash}, {"seed", seed}, {"stages", stages_json}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != kManifestSchema)
    throw ParseError("manifest schema " + std::to_string(m.schema_version) + " is not supported");
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& e : j.at("stages")) {
    StageRecord s;
    s.name = e.at("name").get<std::string>();
    s.config_hash = e.at("config_hash").get<std::string>();
    s.inputs = e.at("inputs").get<std::map<std::string, std::string>>();
    s.outputs = e.at("outputs").get<std::map<std::string, std::string>>();
    s.seconds = e.value("seconds", 0.0);
    m.stages.push_back(std::move(s));
  }
  return m;
}

// ---- parallel map --------------------------------------------------------------------

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        // Report the failure a sequential run would have hit first.
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---- stages ---------------------------------------------------------------------------

Corpus evaluable(const Corpus& corpus) {
  Corpus out;
  for (const auto& ts : corpus)
    if (splittable(ts)) out.push_back(ts);
  return out;
}

void synth(int series, std::uint64_t seed, const fs::path& out_dir) {
  write_corpus_dir(out_dir, make_synthetic(SyntheticSpec::spread(series), seed));
}

void ingest(const PipelineConfig& cfg, const fs::path& out_dir) {
  if (cfg.corpus.empty()) {
    synth(cfg.synthetic_series, derive_seed(cfg.seed, kSynthTag), out_dir);
    return;
  }
  write_corpus_dir(out_dir, load_corpus_dir(cfg.corpus));
}

void forecast(const fs::path& corpus_dir, const fs::path& out_csv, int threads) {
  const Corpus corpus = evaluable(load_corpus_dir(corpus_dir));
  std::vector<ForecastMatrix> out(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    const auto sp = split(corpus[i]);
    out[i] = forecast_all(corpus[i].id, sp.train, corpus[i].period.m, corpus[i].period.h);
  });
  io::write_file_atomic(out_csv, forecasts_csv(out));
}

void features(const fs::path& corpus_dir, const fs::path& out_csv, int threads) {
  const Corpus corpus = evaluable(load_corpus_dir(corpus_dir));
  std::vector<StatFeatures> out(corpus.size());
  std::vector<std::string> ids(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    ids[i] = corpus[i].id;
    out[i] = extract_stat_features(split(corpus[i]).train, corpus[i].period.m);
  });
  io::write_file_atomic(out_csv, stat_features_csv(ids, out));
}

void train_ae(const fs::path& corpus_dir, const AeConfig& cfg, std::uint64_t seed, const fs::path& out_model,
              const fs::path& out_history) {
  const Corpus corpus = evaluable(load_corpus_dir(corpus_dir));
  std::vector<std::vector<double>> series;
  for (const auto& ts : corpus) series.push_back(split(ts).train);
  const auto result = train_autoencoder(series, cfg, seed, [](int epoch, double train, double val) {
    log::info("autoencoder epoch " + std::to_string(epoch) + ": train " + io::format_double(train) +
              ", validation " + io::format_double(val));
  });
  std::string hist = "epoch,train_loss,validation_loss\n";
  for (std::size_t e = 0; e < result.history.train_loss.size(); ++e)
    hist += std::to_string(e + 1) + "," + io::format_double(result.history.train_loss[e]) + "," +
            io::format_double(result.history.validation_loss[e]) + "\n";
  write_json(out_model, result.model.to_json());
  io::write_file_atomic(out_history, hist);
}

void encode(const fs::path& model, const fs::path& corpus_dir, const fs::path& out_csv) {
  const auto ae = Autoencoder::from_json(read_json(model));
  const Corpus corpus = evaluable(load_corpus_dir(corpus_dir));
  std::vector<std::vector<double>> series;
  std::vector<std::string> ids;
  for (const auto& ts : corpus) {
    series.push_back(split(ts).train);
    ids.push_back(ts.id);
  }
  io::write_file_atomic(out_csv, embeddings_csv(ids, ae.encode_many(series)));
}

void train_weightnet(const FeatureInputs& in, const WeightNetConfig& cfg, std::uint64_t seed,
                     const fs::path& out_model, const fs::path& out_history) {
  const auto a = assemble(in, true);
  const auto result = train_weight_net(a.raw, a.targets, cfg, seed);
  const auto& h = result.history;
  json hist = {{"train_owa", h.train_owa},
               {"validation_owa", h.validation_owa},
               {"validation_pooled_owa", h.validation_pooled_owa},
               {"uniform_validation_owa", h.uniform_validation_owa},
               {"uniform_validation_pooled_owa", h.uniform_validation_pooled_owa}};
  json train_ids = json::array(), val_ids = json::array();
  for (auto r : h.train_rows) train_ids.push_back(a.series[r].id);
  for (auto r : h.validation_rows) val_ids.push_back(a.series[r].id);
  hist["train_ids"] = train_ids;
  hist["validation_ids"] = val_ids;
  write_json(out_model, result.net.to_json());
  write_json(out_history, hist);
}

void predict(const fs::path& net_path, const FeatureInputs& in, const fs::path& out_weights,
             const fs::path& out_forecasts) {
  const auto net = WeightNet::from_json(read_json(net_path));
  const auto a = assemble(in, true);
  std::string weights = "id";
  for (auto m : kAllModels) weights += "," + std::string(model_name(m));
  weights += "\n";
  std::vector<std::string> ids;
  std::vector<std::vector<double>> finals;
  for (std::size_t i = 0; i < a.series.size(); ++i) {
    const auto w = net.forward(net.standardizer().apply(a.raw[i]));
    weights += a.series[i].id;
    for (double v : w) weights += "," + io::format_double(v);
    weights += "\n";
    ids.push_back(a.series[i].id);
    finals.push_back(combine(w, a.targets[i].forecasts));
  }
  io::write_file_atomic(out_weights, weights);
  io::write_file_atomic(out_forecasts, point_forecasts_csv(ids, finals));
}

void evaluate(const fs::path& point_forecasts, const fs::path& model_forecasts, const fs::path& corpus_dir,
              const fs::path& history, const fs::path& out_csv, const fs::path& out_summary) {
  const auto points = read_point_forecasts(point_forecasts);
  const auto a = assemble({{}, {}, model_forecasts, corpus_dir}, false);
  const auto val = validation_ids(history);

  std::vector<metrics::SeriesScore> all, all_uniform, v, v_uniform;
  std::string csv = "id,period,type,smape,mase,owa,smape_naive2,mase_naive2,owa_uniform\n";
  for (std::size_t i = 0; i < a.series.size(); ++i) {
    const auto& ts = a.series[i];
    const auto& t = a.targets[i];
    const auto p = points.find(ts.id);
    if (p == points.end()) throw MissingPart(ts.id, "point forecast");
    if (p->second.size() != t.actual.size()) throw LengthMismatch("series '" + ts.id + "': forecast length");
    const auto u = uniform_forecast(t.forecasts);
    const metrics::SeriesScore s{metrics::smape(t.actual, p->second),
                                 metrics::mase_with_scale(t.scale, t.actual, p->second), t.smape_naive2,
                                 t.mase_naive2};
    const metrics::SeriesScore su{metrics::smape(t.actual, u), metrics::mase_with_scale(t.scale, t.actual, u),
                                  t.smape_naive2, t.mase_naive2};
    all.push_back(s);
    all_uniform.push_back(su);
    if (val.contains(ts.id)) {
      v.push_back(s);
      v_uniform.push_back(su);
    }
    csv += ts.id + "," + std::string(to_string(ts.period.kind)) + "," + std::string(to_string(ts.type)) + "," +
           io::format_double(s.smape) + "," + io::format_double(s.mase) + "," +
           io::format_double(metrics::owa_single(s)) + "," + io::format_double(s.smape_naive2) + "," +
           io::format_double(s.mase_naive2) + "," + io::format_double(metrics::owa_single(su)) + "\n";
  }
  auto block = [](const std::vector<metrics::SeriesScore>& scores) {
    const auto pooled = metrics::owa(scores, metrics::Aggregation::Pooled);
    const auto per = metrics::owa(scores, metrics::Aggregation::PerSeries);
    return json{{"series", scores.size()},
                {"smape", pooled.smape},
                {"mase", pooled.mase},
                {"pooled_owa", pooled.owa},
                {"per_series_owa", per.owa}};
  };
  json summary = {{"all", {{"weighted", block(all)}, {"uniform", block(all_uniform)}}}};
  if (!v.empty()) summary["validation"] = {{"weighted", block(v)}, {"uniform", block(v_uniform)}};
  io::write_file_atomic(out_csv, csv);
  write_json(out_summary, summary);
}

void oracle(const fs::path& forecasts, const fs::path& corpus_dir, const std::vector<ModelId>& pool,
            const fs::path& out_csv, int threads) {
  const auto a = assemble({{}, {}, forecasts, corpus_dir}, false);
  std::vector<std::size_t> rows;
  for (auto m : pool) rows.push_back(model_index(m));
  std::vector<OracleSolution> sols(a.series.size());
  std::vector<double> selection(a.series.size());
  parallel_for(a.series.size(), threads, [&](std::size_t i) {
    const auto& t = a.targets[i];
    sols[i] = optimal_weights(t.forecasts, t.actual, pool, t.scale);
    const auto inst = make_instance(t.forecasts, t.actual, t.scale);
    selection[i] = optimal_selection(pool_rows(inst, rows), t.actual).loss /
                   (static_cast<double>(t.actual.size()) * t.scale);
  });
  std::string csv = "id";
  for (const auto& name : pool_names(pool)) csv += "," + name;
  csv += ",objective,e_loss_mase,selection_mase,active_count\n";
  for (std::size_t i = 0; i < sols.size(); ++i) {
    csv += a.series[i].id;
    for (double x : sols[i].x) csv += "," + io::format_double(x);
    csv += "," + io::format_double(sols[i].objective) + "," + io::format_double(sols[i].e_loss_mase) + "," +
           io::format_double(selection[i]) + "," + std::to_string(sols[i].active_count) + "\n";
  }
  io::write_file_atomic(out_csv, csv);
}

void greedy(const fs::path& forecasts, const fs::path& corpus_dir, const std::vector<ModelId>& pool,
            const fs::path& out_csv) {
  const auto a = assemble({{}, {}, forecasts, corpus_dir}, false);
  std::vector<OracleInstance> corpus;
  for (const auto& t : a.targets) corpus.push_back(make_instance(t.forecasts, t.actual, t.scale));
  std::vector<std::size_t> candidates;
  for (auto m : pool) candidates.push_back(model_index(m));
  const auto g = greedy_build(corpus, candidates);
  std::string csv = "size,model,mean_e_loss_mase\n";
  for (std::size_t k = 0; k < g.order.size(); ++k)
    csv += std::to_string(k + 1) + "," + std::string(model_name(kAllModels[g.order[k]])) + "," +
           io::format_double(g.curve[k]) + "\n";
  io::write_file_atomic(out_csv, csv);
}

void cluster(const FeatureInputs& in, int k, const fs::path& out_dendrogram, const fs::path& out_clusters) {
  const auto a = assemble(in, true);
  analysis::FeatureTable table;
  for (const auto& r : a.raw) table.emplace_back(r.begin(), r.end());
  const auto d = analysis::cluster_features(table);
  const auto labels = analysis::cut_tree(d, static_cast<std::size_t>(k));
  const auto& names = feature_names();
  json merges = json::array();
  for (const auto& m : d.merges) merges.push_back({{"a", m.a}, {"b", m.b}, {"height", m.height}, {"size", m.size}});
  json order = json::array();
  for (auto leaf : d.leaf_order) order.push_back(names[leaf]);
  write_json(out_dendrogram, {{"leaves", names}, {"merges", merges}, {"leaf_order", order}});
  std::string csv = "feature,cluster\n";
  for (std::size_t f = 0; f < names.size(); ++f) csv += names[f] + "," + std::to_string(labels[f]) + "\n";
  io::write_file_atomic(out_clusters, csv);
}

void importance(const fs::path& net_path, const FeatureInputs& in, const fs::path& history, const fs::path& clusters,
                int repeats, std::uint64_t seed, const fs::path& out_csv, const fs::path& out_cluster_csv) {
  const auto net = WeightNet::from_json(read_json(net_path));
  const auto a = assemble(in, true);
  const auto val = validation_ids(history);
  analysis::FeatureTable table;
  std::vector<const SeriesTarget*> targets;
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < a.series.size(); ++i) {
    if (!val.empty() && !val.contains(a.series[i].id)) continue;
    const auto z = net.standardizer().apply(a.raw[i]);
    table.emplace_back(z.begin(), z.end());
    targets.push_back(&a.targets[i]);
    keys.push_back(a.series[i].id);
  }
  const analysis::LossFunction loss = [&](const analysis::FeatureTable& t) {
    double sum = 0.0;
    for (std::size_t r = 0; r < t.size(); ++r) {
      FeatureVector f;
      std::copy(t[r].begin(), t[r].end(), f.begin());
      sum += series_owa(combine(net.forward(f), targets[r]->forecasts), *targets[r]);
    }
    return sum / static_cast<double>(t.size());
  };
  analysis::ImportanceOptions opts;
  opts.repeats = repeats;
  opts.seed = seed;
  opts.row_keys = keys;
  const auto& names = feature_names();
  const auto records = analysis::feature_importance(table, names, loss, opts);
  io::write_file_atomic(out_csv, analysis::importance_csv(records));

  std::vector<int> labels(names.size(), -1);
  const auto ct = io::read_table(clusters);
  for (const auto& row : ct.rows) {
    const auto it = std::find(names.begin(), names.end(), row[0]);
    if (it == names.end()) throw ParseError(clusters.string() + ": unknown feature '" + row[0] + "'");
    labels[static_cast<std::size_t>(it - names.begin())] = std::stoi(row[1]);
  }
  const auto groups = analysis::cluster_importance(table, names, labels, loss, opts);
  std::string csv = "cluster,members,importance,t_stat,p_value,repeats\n";
  for (const auto& g : groups) {
    std::string members;
    for (auto f : g.members) members += (members.empty() ? "" : ";") + names[f];
    csv += std::to_string(g.cluster) + "," + members + "," + io::format_double(g.record.importance) + "," +
           io::format_double(g.record.t_stat) + "," + io::format_double(g.record.p_value) + "," +
           std::to_string(g.record.repeats) + "\n";
  }
  io::write_file_atomic(out_cluster_csv, csv);
}

void report(const fs::path& evaluation_csv, const fs::path& importance_csv, const fs::path& out_dir) {
  const auto ev = io::read_table(evaluation_csv);
  const auto c_owa = ev.column("owa"), c_uni = ev.column("owa_uniform");
  const auto c_period = ev.column("period"), c_type = ev.column("type");
  const auto c_smape = ev.column("smape"), c_mase = ev.column("mase");
  const auto c_sn = ev.column("smape_naive2"), c_mn = ev.column("mase_naive2");
  std::vector<double> owa, uni;
  std::vector<PeriodKind> periods;
  std::vector<SeriesType> types;
  std::vector<std::string> buckets;
  std::vector<metrics::SeriesScore> scores;
  for (const auto& row : ev.rows) {
    owa.push_back(io::parse_double(row[c_owa]));
    uni.push_back(io::parse_double(row[c_uni]));
    periods.push_back(parse_period(row[c_period]));
    types.push_back(parse_series_type(row[c_type]));
    buckets.push_back(analysis::type_period_bucket(periods.back(), types.back()));
    scores.push_back({io::parse_double(row[c_smape]), io::parse_double(row[c_mase]), io::parse_double(row[c_sn]),
                      io::parse_double(row[c_mn])});
  }
  const auto b = analysis::owa_breakdown(owa, periods, types);
  io::write_file_atomic(out_dir / "breakdown.csv", analysis::breakdown_csv(b));
  io::write_file_atomic(out_dir / "breakdown.svg", analysis::breakdown_svg(b));

  std::string cmp = "bucket,n,mean_owa_difference,t_stat,p_value,significant\n";
  for (const auto& c : analysis::compare_buckets(owa, uni, buckets))
    cmp += c.bucket + "," + std::to_string(c.n) + "," + io::format_double(c.mean_difference) + "," +
           io::format_double(c.t_stat) + "," + io::format_double(c.p_value) + "," + (c.significant ? "1" : "0") + "\n";
  io::write_file_atomic(out_dir / "buckets.csv", cmp);

  const auto imp = io::read_table(importance_csv);
  std::vector<analysis::ImportanceRecord> records;
  for (const auto& row : imp.rows) {
    analysis::ImportanceRecord r;
    r.feature = row[imp.column("feature")];
    r.importance = io::parse_double(row[imp.column("importance")]);
    r.t_stat = io::parse_double(row[imp.column("t_stat")]);
    r.p_value = io::parse_double(row[imp.column("p_value")]);
    r.repeats = std::stoi(row[imp.column("repeats")]);
    records.push_back(std::move(r));
  }
  io::write_file_atomic(out_dir / "importance.svg", analysis::importance_svg(records));

  const auto pooled = metrics::owa(scores, metrics::Aggregation::Pooled);
  std::string summary = "metric,value\n";
  summary += "series," + std::to_string(scores.size()) + "\n";
  summary += "smape," + io::format_double(pooled.smape) + "\n";
  summary += "mase," + io::format_double(pooled.mase) + "\n";
  summary += "pooled_owa," + io::format_double(pooled.owa) + "\n";
  summary += "mean_owa," + io::format_double(owa.empty() ? 0.0 : stats::mean(owa)) + "\n";
  summary += "mean_owa_uniform," + io::format_double(uni.empty() ? 0.0 : stats::mean(uni)) + "\n";
  io::write_file_atomic(out_dir / "summary.csv", summary);
}

// ---- orchestration --------------------------------------------------------------------

namespace {

std::string file_digest(const fs::path& p) {
  if (!fs::is_regular_file(p)) return {};
  return io::file_sha256(p);
}

}  // namespace

RunManifest run_all(const PipelineConfig& cfg) {
  cfg.validate();
  const fs::path root = cfg.work_dir;
  fs::create_directories(root);
  const fs::path manifest_path = root / "manifest.json";

  RunManifest previous;
  if (fs::exists(manifest_path)) {
    try {
      previous = RunManifest::from_json(read_json(manifest_path));
    } catch (const std::exception& e) {
      log::warn(std::string("ignoring unreadable manifest: ") + e.what());
      previous = {};
    }
  }

  RunManifest m;
  m.config_hash = cfg.hash();
  m.seed = cfg.seed;
  bool dirty = false;

  auto run_stage = [&](const std::string& name, const json& settings, const std::map<std::string, fs::path>& inputs,
                       const std::vector<std::string>& outputs, const std::function<void()>& body) {
    StageRecord rec;
    rec.name = name;
    rec.config_hash = stage_hash(name, settings);
    for (const auto& [key, path] : inputs) {
      rec.inputs[key] = file_digest(path);
      if (rec.inputs[key].empty()) throw StageFailed(name, "missing input " + path.string());
    }
    const StageRecord* prev = previous.find(name);
    bool fresh = !dirty && prev && prev->config_hash == rec.config_hash && prev->inputs == rec.inputs &&
                 prev->outputs.size() == outputs.size();
    for (std::size_t i = 0; fresh && i < outputs.size(); ++i) {
      const auto it = prev->outputs.find(outputs[i]);
      fresh = it != prev->outputs.end() && file_digest(root / outputs[i]) == it->second;
    }
    if (fresh) {
      rec.outputs = prev->outputs;
      rec.seconds = prev->seconds;
      rec.skipped = true;
      log::info("stage " + name + ": up to date");
    } else {
      log::info("stage " + name + ": running");
      const auto t0 = std::chrono::steady_clock::now();
      try {
        body();
      } catch (const StageFailed&) {
        throw;
      } catch (const std::exception& e) {
        throw StageFailed(name, e.what());
      }
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      for (const auto& out : outputs) {
        rec.outputs[out] = file_digest(root / out);
        if (rec.outputs[out].empty()) throw StageFailed(name, "did not produce " + out);
      }
      dirty = true;
    }
    m.stages.push_back(std::move(rec));
    write_json(manifest_path, m.to_json(cfg.record_timings));
  };

  const fs::path corpus_dir = root / "corpus";
  const std::map<std::string, fs::path> corpus_files = {{"corpus/train.csv", corpus_dir / "train.csv"},
                                                        {"corpus/meta.csv", corpus_dir / "meta.csv"}};
  auto with_corpus = [&](std::map<std::string, fs::path> extra) {
    extra.insert(corpus_files.begin(), corpus_files.end());
    return extra;
  };
  const FeatureInputs fin{root / "stat_features.csv", root / "lstm_features.csv", root / "forecasts.csv", corpus_dir};
  const std::map<std::string, fs::path> feature_files = {{"stat_features.csv", fin.stat_features},
                                                         {"lstm_features.csv", fin.lstm_features},
                                                         {"forecasts.csv", fin.forecasts}};

  std::map<std::string, fs::path> source;
  if (!cfg.corpus.empty())
    source = {{"source/train.csv", cfg.corpus / "train.csv"}, {"source/meta.csv", cfg.corpus / "meta.csv"}};
  const json ingest_settings = cfg.corpus.empty() ? json{{"synthetic_series", cfg.synthetic_series}, {"seed", cfg.seed}}
                                                  : json{{"corpus", "external"}};
  run_stage("ingest", ingest_settings, source, {"corpus/train.csv", "corpus/meta.csv"},
            [&] { ingest(cfg, corpus_dir); });
  run_stage("forecast", json::object(), corpus_files, {"forecasts.csv"},
            [&] { forecast(corpus_dir, fin.forecasts, cfg.threads); });
  run_stage("features", json::object(), corpus_files, {"stat_features.csv"},
            [&] { features(corpus_dir, fin.stat_features, cfg.threads); });
  const std::uint64_t ae_seed = derive_seed(cfg.seed, kAeTag);
  run_stage("train-ae", {{"ae", cfg.ae.to_json()}, {"seed", ae_seed}}, corpus_files, {"ae.json", "ae_history.csv"},
            [&] { train_ae(corpus_dir, cfg.ae, ae_seed, root / "ae.json", root / "ae_history.csv"); });
  run_stage("encode", json::object(), with_corpus({{"ae.json", root / "ae.json"}}), {"lstm_features.csv"},
            [&] { encode(root / "ae.json", corpus_dir, fin.lstm_features); });
  const std::uint64_t wn_seed = derive_seed(cfg.seed, kWeightNetTag);
  run_stage("train-weightnet", {{"weightnet", cfg.weightnet.to_json()}, {"seed", wn_seed}}, with_corpus(feature_files),
            {"wn.json", "wn_history.json"},
            [&] { train_weightnet(fin, cfg.weightnet, wn_seed, root / "wn.json", root / "wn_history.json"); });
  auto net_inputs = with_corpus(feature_files);
  net_inputs["wn.json"] = root / "wn.json";
  run_stage("predict", json::object(), net_inputs, {"weights.csv", "final_forecasts.csv"},
            [&] { predict(root / "wn.json", fin, root / "weights.csv", root / "final_forecasts.csv"); });
  run_stage("evaluate", json::object(),
            with_corpus({{"final_forecasts.csv", root / "final_forecasts.csv"},
                         {"forecasts.csv", fin.forecasts},
                         {"wn_history.json", root / "wn_history.json"}}),
            {"evaluation.csv", "evaluation_summary.json"}, [&] {
              evaluate(root / "final_forecasts.csv", fin.forecasts, corpus_dir, root / "wn_history.json",
                       root / "evaluation.csv", root / "evaluation_summary.json");
            });
  const json pool_settings = {{"pool", pool_names(cfg.pool)}};
  run_stage("oracle", pool_settings, with_corpus({{"forecasts.csv", fin.forecasts}}), {"oracle.csv"},
            [&] { oracle(fin.forecasts, corpus_dir, cfg.pool, root / "oracle.csv", cfg.threads); });
  run_stage("greedy", pool_settings, with_corpus({{"forecasts.csv", fin.forecasts}}), {"greedy.csv"},
            [&] { greedy(fin.forecasts, corpus_dir, cfg.pool, root / "greedy.csv"); });
  run_stage("cluster", {{"clusters", cfg.clusters}}, with_corpus(feature_files), {"dendrogram.json", "clusters.csv"},
            [&] { cluster(fin, cfg.clusters, root / "dendrogram.json", root / "clusters.csv"); });
  const std::uint64_t imp_seed = derive_seed(cfg.seed, kImportanceTag);
  auto imp_inputs = net_inputs;
  imp_inputs["wn_history.json"] = root / "wn_history.json";
  imp_inputs["clusters.csv"] = root / "clusters.csv";
  run_stage("importance", {{"repeats", cfg.importance_repeats}, {"seed", imp_seed}}, imp_inputs,
            {"importance.csv", "cluster_importance.csv"}, [&] {
              importance(root / "wn.json", fin, root / "wn_history.json", root / "clusters.csv",
                         cfg.importance_repeats, imp_seed, root / "importance.csv", root / "cluster_importance.csv");
            });
  run_stage("report", json::object(),
            {{"evaluation.csv", root / "evaluation.csv"}, {"importance.csv", root / "importance.csv"}},
            {"report/breakdown.csv", "report/breakdown.svg", "report/buckets.csv", "report/importance.svg",
             "report/summary.csv"},
            [&] { report(root / "evaluation.csv", root / "importance.csv", root / "report"); });
  return m;
}

VerifyResult verify(const fs::path& work_dir) {
  VerifyResult r;
  auto fail = [&](std::string msg) {
    r.ok = false;
    r.problems.push_back(std::move(msg));
  };
  const fs::path manifest_path = work_dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    fail("no manifest in " + work_dir.string());
    return r;
  }
  RunManifest m;
  try {
    m = RunManifest::from_json(read_json(manifest_path));
  } catch (const std::exception& e) {
    fail(std::string("unreadable manifest: ") + e.what());
    return r;
  }

  std::map<std::string, std::string> produced;  // path -> stage
  for (const auto& s : m.stages)
    for (const auto& [path, digest] : s.outputs) {
      if (produced.contains(path)) fail(path + " is produced by both " + produced[path] + " and " + s.name);
      produced[path] = s.name;
      const auto actual = file_digest(work_dir / path);
      if (actual.empty())
        fail(path + " is missing");
      else if (actual != digest)
        fail(path + " does not match its recorded digest");
    }
  for (const auto& s : m.stages)
    for (const auto& [path, digest] : s.inputs) {
      if (path.starts_with("source/")) continue;
      const auto* producer = m.find(produced.contains(path) ? produced[path] : "");
      if (!producer)
        fail(s.name + " reads " + path + ", which no stage produced");
      else if (producer->outputs.at(path) != digest)
        fail(s.name + " read a different version of " + path);
    }
  for (const auto& entry : fs::recursive_directory_iterator(work_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), work_dir).generic_string();
    if (rel == "manifest.json") continue;
    if (!produced.contains(rel)) fail(rel + " is not recorded in the manifest");
  }

  // Combination weights must lie on the simplex.
  if (produced.contains("weights.csv") && fs::exists(work_dir / "weights.csv")) {
    const auto t = io::read_table(work_dir / "weights.csv");
    for (const auto& row : t.rows) {
      double sum = 0.0;
      bool negative = false;
      for (std::size_t c = 1; c < row.size(); ++c) {
        const double w = io::parse_double(row[c]);
        sum += w;
        negative = negative || w < 0.0;
      }
      if (negative || std::abs(sum - 1.0) > 1e-9) fail("weights for '" + row[0] + "' are off the simplex");
    }
  }
  // The combination optimum can never lose to the best single model.
  if (produced.contains("oracle.csv") && fs::exists(work_dir / "oracle.csv")) {
    const auto t = io::read_table(work_dir / "oracle.csv");
    const auto ce = t.column("e_loss_mase"), cs = t.column("selection_mase");
    for (const auto& row : t.rows)
      if (io::parse_double(row[ce]) > io::parse_double(row[cs]))
        fail("oracle for '" + row[0] + "' is worse than selection");
  }
  return r;
}

}  // namespace donut::pipeline
