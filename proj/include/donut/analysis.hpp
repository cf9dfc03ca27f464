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
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "donut/corpus.hpp"

namespace donut::analysis {

/// Row-major feature table: rows are series, columns are features.
using FeatureTable = std::vector<std::vector<double>>;

/// Maps a (possibly perturbed) feature table to a corpus loss.
using LossFunction = std::function<double(const FeatureTable&)>;

struct ImportanceRecord {
  std::string feature;
  double importance = 0.0;  // mean loss increase over repeats
  double t_stat = 0.0;
  double p_value = 1.0;  // one-sided, H1: importance > 0
  int repeats = 0;
  std::vector<double> deltas;
};

/// t = mean / (sd / sqrt(R)) and its upper-tail p-value with R - 1 degrees
/// of freedom. With zero spread: t = 0, p = 1 for a zero mean; t = +-inf otherwise.
void t_ratio(ImportanceRecord& r);

struct ImportanceOptions {
  int repeats = 5;
  std::uint64_t seed = 0;
  // Forces the identity permutation (a self-check: deltas must be 0).
  bool identity = false;
  // Optional stable row keys; permutations are drawn over rows sorted by key
  // so the result does not depend on table order.
  std::span<const std::string> row_keys;
};

/// Shuffles the listed columns jointly (one row permutation per repeat,
/// shared by the columns) and measures the loss increase.
ImportanceRecord permutation_importance(const FeatureTable& table, std::span<const std::size_t> columns,
                                        const std::string& name, const LossFunction& loss,
                                        const ImportanceOptions& options);

/// Per-feature importance for every column.
std::vector<ImportanceRecord> feature_importance(const FeatureTable& table, std::span<const std::string> names,
                                                 const LossFunction& loss, const ImportanceOptions& options);

// ---- clustering ---------------------------------------------------------------

struct Merge {
  std::size_t a = 0;  // cluster ids: leaves 0..n-1, merge k creates n + k
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t leaves = 0;
  std::vector<Merge> merges;
  std::vector<std::size_t> leaf_order;
};

/// Pearson correlations between columns; zero-variance columns get rho = 0
/// against everything else.
std::vector<std::vector<double>> column_correlations(const FeatureTable& table);

/// d = sqrt(2 (1 - rho)).
double correlation_distance(double rho);

/// Ward linkage (Lance-Williams on distances) over correlation distances of
/// the table's columns. Ties merge the lowest pair first.
Dendrogram cluster_features(const FeatureTable& table);
Dendrogram ward_linkage(const std::vector<std::vector<double>>& distances);

/// Cuts into k clusters; labels are numbered by their lowest leaf.
std::vector<int> cut_tree(const Dendrogram& d, std::size_t k);

struct ClusterImportance {
  int cluster = 0;
  std::vector<std::size_t> members;
  ImportanceRecord record;
};

std::vector<ClusterImportance> cluster_importance(const FeatureTable& table, std::span<const std::string> names,
                                                  const std::vector<int>& labels, const LossFunction& loss,
                                                  const ImportanceOptions& options);

// ---- breakdown reports ----------------------------------------------------------

struct Cell {
  double mean = 0.0;
  std::size_t n = 0;
  double p_value = 1.0;
};

struct Breakdown {
  // [period][type]; absent cells are empty.
  std::array<std::array<std::optional<Cell>, 6>, 6> cells;
  std::array<std::optional<double>, 6> period_means;
  std::array<std::optional<double>, 6> type_means;
  double global_mean = 0.0;
  std::size_t n = 0;
};

/// Mean OWA per (period, type) with two-sided t-tests against the global mean.
Breakdown owa_breakdown(std::span<const double> owa, std::span<const PeriodKind> periods,
                        std::span<const SeriesType> types);

struct BucketCell {
  std::string bucket;
  std::size_t n = 0;
  double mean_difference = 0.0;  // mean(A - B)
  double t_stat = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

/// Paired comparison of two per-series losses inside each bucket.
std::vector<BucketCell> compare_buckets(std::span<const double> a, std::span<const double> b,
                                        std::span<const std::string> buckets, double alpha = 0.05);

std::string type_period_bucket(PeriodKind p, SeriesType t);
/// Equal-count bins (0..k-1) by the empirical quantiles of `values`.
std::vector<int> quantile_bins(std::span<const double> values, int k);

// ---- renderings -----------------------------------------------------------------

std::string breakdown_csv(const Breakdown& b);
std::string importance_csv(std::span<const ImportanceRecord> records);
std::string importance_svg(std::span<const ImportanceRecord> records, std::size_t top = 20);
std::string breakdown_svg(const Breakdown& b);

}  // namespace donut::analysis
