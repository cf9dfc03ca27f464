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

#include "donut/analysis.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <sstream>

#include "donut/errors.hpp"
#include "donut/io.hpp"
#include "donut/numeric.hpp"
#include "donut/rng.hpp"

namespace donut::analysis {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> column(const FeatureTable& t, std::size_t c) {
  std::vector<double> out(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) out[r] = t[r][c];
  return out;
}

}  // namespace

void t_ratio(ImportanceRecord& r) {
  const auto R = r.deltas.size();
  r.repeats = static_cast<int>(R);
  r.importance = R ? stats::mean(r.deltas) : 0.0;
  if (R < 2) {
    r.t_stat = 0.0;
    r.p_value = 1.0;
    return;
  }
  const double sd = std::sqrt(stats::sample_variance(r.deltas));
  if (sd == 0.0) {
    if (r.importance == 0.0) {
      r.t_stat = 0.0;
      r.p_value = 1.0;
    } else {
      r.t_stat = r.importance > 0.0 ? INFINITY : -INFINITY;
      r.p_value = r.importance > 0.0 ? DBL_MIN : 1.0;
    }
    return;
  }
  r.t_stat = r.importance / (sd / std::sqrt(static_cast<double>(R)));
  const double p = 1.0 - stats::student_t_cdf(r.t_stat, static_cast<double>(R - 1));
  r.p_value = std::clamp(p, DBL_MIN, 1.0);
}

ImportanceRecord permutation_importance(const FeatureTable& table, std::span<const std::size_t> columns,
                                        const std::string& name, const LossFunction& loss,
                                        const ImportanceOptions& options) {
  const std::size_t n = table.size();
  if (n < 2) throw SingleSeriesCorpus();
  if (options.repeats < 1) throw ConfigError("importance needs at least one repeat");
  for (auto c : columns)
    if (c >= table.front().size()) throw ShapeMismatch("importance column " + std::to_string(c) + " out of range");

  std::vector<std::size_t> canon(n);
  std::iota(canon.begin(), canon.end(), std::size_t{0});
  if (!options.row_keys.empty()) {
    if (options.row_keys.size() != n) throw ShapeMismatch("one row key per table row is required");
    std::stable_sort(canon.begin(), canon.end(),
                     [&](auto a, auto b) { return options.row_keys[a] < options.row_keys[b]; });
  }

  const double baseline = loss(table);
  ImportanceRecord rec;
  rec.feature = name;
  const std::uint64_t tag = fnv1a(name);
  for (int r = 0; r < options.repeats; ++r) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (!options.identity) {
      Rng rng(derive_seed(derive_seed(options.seed, tag), static_cast<std::uint64_t>(r)));
      perm = rng.permutation(n);
    }
    FeatureTable shuffled = table;
    for (std::size_t k = 0; k < n; ++k)
      for (auto c : columns) shuffled[canon[k]][c] = table[canon[perm[k]]][c];
    rec.deltas.push_back(loss(shuffled) - baseline);
  }
  t_ratio(rec);
  return rec;
}

std::vector<ImportanceRecord> feature_importance(const FeatureTable& table, std::span<const std::string> names,
                                                 const LossFunction& loss, const ImportanceOptions& options) {
  std::vector<ImportanceRecord> out;
  for (std::size_t c = 0; c < names.size(); ++c) {
    const std::size_t cols[] = {c};
    out.push_back(permutation_importance(table, cols, names[c], loss, options));
  }
  return out;
}

// ---- clustering -----------------------------------------------------------------

std::vector<std::vector<double>> column_correlations(const FeatureTable& table) {
  if (table.empty()) return {};
  const std::size_t p = table.front().size();
  std::vector<std::vector<double>> cols(p);
  std::vector<bool> flat(p);
  for (std::size_t c = 0; c < p; ++c) {
    cols[c] = column(table, c);
    flat[c] = !(stats::variance(cols[c]) > 0.0);
  }
  std::vector<std::vector<double>> rho(p, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    rho[i][i] = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      double r = (flat[i] || flat[j]) ? 0.0 : cols[i] == cols[j] ? 1.0 : stats::pearson(cols[i], cols[j]);
      if (!std::isfinite(r)) r = 0.0;
      rho[i][j] = rho[j][i] = std::clamp(r, -1.0, 1.0);
    }
  }
  return rho;
}

double correlation_distance(double rho) { return std::sqrt(std::max(0.0, 2.0 * (1.0 - rho))); }

Dendrogram ward_linkage(const std::vector<std::vector<double>>& distances) {
  const std::size_t n = distances.size();
  Dendrogram d;
  d.leaves = n;
  if (n == 0) return d;
  std::vector<std::vector<double>> D = distances;
  std::vector<std::size_t> id(n), size(n, 1);
  std::iota(id.begin(), id.end(), std::size_t{0});
  std::vector<bool> alive(n, true);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = 0, bj = 0;
    double best = INFINITY;
    std::pair<std::size_t, std::size_t> best_ids{SIZE_MAX, SIZE_MAX};
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!alive[j]) continue;
        const auto ids = std::minmax(id[i], id[j]);
        const std::pair<std::size_t, std::size_t> key{ids.first, ids.second};
        if (D[i][j] < best || (D[i][j] == best && key < best_ids)) {
          best = D[i][j];
          best_ids = key;
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = static_cast<double>(size[bi]), nj = static_cast<double>(size[bj]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == bi || k == bj) continue;
      const double nk = static_cast<double>(size[k]);
      const double v = ((nk + ni) * D[k][bi] * D[k][bi] + (nk + nj) * D[k][bj] * D[k][bj] - nk * best * best) /
                       (ni + nj + nk);
      D[k][bi] = D[bi][k] = std::sqrt(std::max(v, 0.0));
    }
    d.merges.push_back({best_ids.first, best_ids.second, best, size[bi] + size[bj]});
    id[bi] = n + step;
    size[bi] += size[bj];
    alive[bj] = false;
  }
  // Leaf order: depth-first, the child holding the lowest leaf first.
  std::vector<std::size_t> min_leaf(2 * n);
  std::iota(min_leaf.begin(), min_leaf.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});
  for (std::size_t s = 0; s + 1 < n; ++s)
    min_leaf[n + s] = std::min(min_leaf[d.merges[s].a], min_leaf[d.merges[s].b]);
  std::vector<std::size_t> stack{n == 1 ? 0 : 2 * n - 2};
  while (!stack.empty()) {
    const std::size_t c = stack.back();
    stack.pop_back();
    if (c < n) {
      d.leaf_order.push_back(c);
      continue;
    }
    const auto& m = d.merges[c - n];
    const bool a_first = min_leaf[m.a] < min_leaf[m.b];
    stack.push_back(a_first ? m.b : m.a);
    stack.push_back(a_first ? m.a : m.b);
  }
  return d;
}

Dendrogram cluster_features(const FeatureTable& table) {
  if (table.size() < 3) throw ConfigError("clustering needs at least three series");
  if (table.front().size() < 2) throw ConfigError("clustering needs at least two features");
  const auto rho = column_correlations(table);
  std::vector<std::vector<double>> dist(rho.size(), std::vector<double>(rho.size(), 0.0));
  for (std::size_t i = 0; i < rho.size(); ++i)
    for (std::size_t j = 0; j < rho.size(); ++j) dist[i][j] = i == j ? 0.0 : correlation_distance(rho[i][j]);
  return ward_linkage(dist);
}

std::vector<int> cut_tree(const Dendrogram& d, std::size_t k) {
  const std::size_t n = d.leaves;
  if (k < 1 || k > n) throw ConfigError("cannot cut " + std::to_string(n) + " leaves into " + std::to_string(k));
  std::vector<std::size_t> parent(2 * n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t s = 0; s < n - k; ++s) {
    const auto& m = d.merges[s];
    parent[find(m.a)] = n + s;
    parent[find(m.b)] = n + s;
  }
  std::vector<int> labels(n, -1);
  std::map<std::size_t, int> numbering;
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    const auto root = find(leaf);
    auto it = numbering.find(root);
    if (it == numbering.end()) it = numbering.emplace(root, static_cast<int>(numbering.size())).first;
    labels[leaf] = it->second;
  }
  return labels;
}

std::vector<ClusterImportance> cluster_importance(const FeatureTable& table, std::span<const std::string> names,
                                                  const std::vector<int>& labels, const LossFunction& loss,
                                                  const ImportanceOptions& options) {
  if (labels.size() != names.size()) throw ShapeMismatch("one cluster label per feature is required");
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (k < 2) throw ConfigError("cluster importance needs at least two clusters");
  std::vector<ClusterImportance> out;
  for (int c = 0; c < k; ++c) {
    ClusterImportance ci;
    ci.cluster = c;
    std::string name = "cluster_" + std::to_string(c);
    for (std::size_t f = 0; f < labels.size(); ++f)
      if (labels[f] == c) ci.members.push_back(f);
    ci.record = permutation_importance(table, ci.members, name, loss, options);
    out.push_back(std::move(ci));
  }
  return out;
}

// ---- breakdowns -----------------------------------------------------------------

Breakdown owa_breakdown(std::span<const double> owa, std::span<const PeriodKind> periods,
                        std::span<const SeriesType> types) {
  if (owa.size() != periods.size() || owa.size() != types.size())
    throw UnpairedSeries("breakdown inputs differ in length");
  Breakdown b;
  b.n = owa.size();
  if (owa.empty()) return b;
  b.global_mean = stats::mean(owa);
  std::array<std::array<std::vector<double>, 6>, 6> bins;
  std::array<std::vector<double>, 6> by_period, by_type;
  for (std::size_t i = 0; i < owa.size(); ++i) {
    const auto p = static_cast<std::size_t>(periods[i]);
    const auto t = static_cast<std::size_t>(types[i]);
    bins[p][t].push_back(owa[i]);
    by_period[p].push_back(owa[i]);
    by_type[t].push_back(owa[i]);
  }
  for (std::size_t p = 0; p < 6; ++p) {
    if (!by_period[p].empty()) b.period_means[p] = stats::mean(by_period[p]);
    if (!by_type[p].empty()) b.type_means[p] = stats::mean(by_type[p]);
    for (std::size_t t = 0; t < 6; ++t) {
      const auto& v = bins[p][t];
      if (v.empty()) continue;
      const auto test = stats::one_sample_t(v, b.global_mean);
      b.cells[p][t] = Cell{test.mean, v.size(), test.p_two_sided};
    }
  }
  return b;
}

std::vector<BucketCell> compare_buckets(std::span<const double> a, std::span<const double> b,
                                        std::span<const std::string> buckets, double alpha) {
  if (a.size() != b.size() || a.size() != buckets.size())
    throw UnpairedSeries("paired comparison needs equally long loss and bucket lists");
  std::map<std::string, std::vector<double>> groups;
  for (std::size_t i = 0; i < a.size(); ++i) groups[buckets[i]].push_back(a[i] - b[i]);
  std::vector<BucketCell> out;
  for (const auto& [name, diffs] : groups) {
    const auto test = stats::one_sample_t(diffs, 0.0);
    out.push_back({name, diffs.size(), test.mean, test.t, test.p_two_sided, test.p_two_sided < alpha});
  }
  return out;
}

std::string type_period_bucket(PeriodKind p, SeriesType t) {
  return std::string(to_string(p)) + "/" + std::string(to_string(t));
}

std::vector<int> quantile_bins(std::span<const double> values, int k) {
  if (k < 1) throw ConfigError("need at least one bin");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return values[x] < values[y]; });
  std::vector<int> bins(n, 0);
  for (std::size_t r = 0; r < n; ++r)
    bins[order[r]] = static_cast<int>(r * static_cast<std::size_t>(k) / std::max<std::size_t>(n, 1));
  return bins;
}

// ---- renderings -----------------------------------------------------------------

std::string breakdown_csv(const Breakdown& b) {
  std::string out = "period,type,n,mean_owa,p_value\n";
  for (std::size_t p = 0; p < 6; ++p)
    for (std::size_t t = 0; t < 6; ++t) {
      const auto& c = b.cells[p][t];
      if (!c) continue;
      out += std::string(to_string(kAllPeriods[p])) + "," + std::string(to_string(kAllTypes[t])) + "," +
             std::to_string(c->n) + "," + io::format_double(c->mean) + "," + io::format_double(c->p_value) + "\n";
    }
  for (std::size_t p = 0; p < 6; ++p)
    if (b.period_means[p])
      out += std::string(to_string(kAllPeriods[p])) + ",all,,"+ io::format_double(*b.period_means[p]) + ",\n";
  for (std::size_t t = 0; t < 6; ++t)
    if (b.type_means[t]) out += "all," + std::string(to_string(kAllTypes[t])) + ",," + io::format_double(*b.type_means[t]) + ",\n";
  out += "all,all," + std::to_string(b.n) + "," + io::format_double(b.global_mean) + ",\n";
  return out;
}

std::string importance_csv(std::span<const ImportanceRecord> records) {
  std::string out = "feature,importance,t_stat,p_value,repeats\n";
  for (const auto& r : records)
    out += r.feature + "," + io::format_double(r.importance) + "," + io::format_double(r.t_stat) + "," +
           io::format_double(r.p_value) + "," + std::to_string(r.repeats) + "\n";
  return out;
}

std::string importance_svg(std::span<const ImportanceRecord> records, std::size_t top) {
  std::vector<const ImportanceRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* x, auto* y) { return x->importance > y->importance; });
  if (sorted.size() > top) sorted.resize(top);
  double hi = 0.0;
  for (auto* r : sorted) hi = std::max(hi, std::abs(r->importance));
  if (!(hi > 0.0)) hi = 1.0;
  const int row = 18, left = 140, width = 360;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + width + 80 << "\" height=\""
    << row * static_cast<int>(sorted.size()) + 20 << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto* r = sorted[i];
    const int y = 10 + row * static_cast<int>(i);
    const double w = std::abs(r->importance) / hi * width;
    s << "<text x=\"" << left - 6 << "\" y=\"" << y + 12 << "\" text-anchor=\"end\">" << r->feature << "</text>";
    s << "<rect x=\"" << left << "\" y=\"" << y + 2 << "\" width=\"" << io::format_double(w) << "\" height=\""
      << row - 4 << "\" fill=\"" << (r->p_value < 0.05 ? "#3b6ea5" : "#a0a0a0") << "\"/>";
    s << "<text x=\"" << left + static_cast<int>(w) + 4 << "\" y=\"" << y + 12 << "\">"
      << io::format_double(std::round(r->importance * 1e4) / 1e4) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string breakdown_svg(const Breakdown& b) {
  const int cell = 70, left = 90, top = 30;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& row : b.cells)
    for (const auto& c : row)
      if (c) {
        lo = std::min(lo, c->mean);
        hi = std::max(hi, c->mean);
      }
  if (!(hi > lo)) hi = lo + 1.0;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + 6 * cell + 10 << "\" height=\""
    << top + 6 * cell + 10 << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  for (std::size_t t = 0; t < 6; ++t)
    s << "<text x=\"" << left + static_cast<int>(t) * cell + cell / 2 << "\" y=\"" << top - 8
      << "\" text-anchor=\"middle\">" << to_string(kAllTypes[t]) << "</text>\n";
  for (std::size_t p = 0; p < 6; ++p) {
    const int y = top + static_cast<int>(p) * cell;
    s << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 << "\" text-anchor=\"end\">" << to_string(kAllPeriods[p])
      << "</text>\n";
    for (std::size_t t = 0; t < 6; ++t) {
      const int x = left + static_cast<int>(t) * cell;
      const auto& c = b.cells[p][t];
      if (!c) {
        s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"#f4f4f4\" stroke=\"#fff\"/>\n";
        continue;
      }
      const double u = (c->mean - lo) / (hi - lo);
      const int red = static_cast<int>(std::lround(80 + 175 * u));
      const int blue = static_cast<int>(std::lround(255 - 175 * u));
      s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
        << red << ",120," << blue << ")\" stroke=\"#fff\"/>";
      s << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\"#fff\">"
        << io::format_double(std::round(c->mean * 1000.0) / 1000.0) << (c->p_value < 0.05 ? "*" : "") << "</text>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace donut::analysis
