// Copyright 2026 The driftlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Concrete estimators behind a common textual id, e.g.
//   "marginal:bins=8,edges=equilikely"   "randproj:axes=6,bins=8"
//   "randtree:leaves=16,trees=8"         "kdq:min_count=10"
//   "rf:trees=16,degree=2,skip=0.1"      "dt:degree=1"
//   "mmd"  "mmd:sigma=0.5"  "ldd:k=10"  "knnkl:k=5"  "grid:bins=4"
// Binning and tree estimators accept metric=tv|hellinger|js|kl.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "driftlab/detector.hpp"
#include "driftlab/error.hpp"
#include "driftlab/histogram.hpp"
#include "driftlab/moment_tree.hpp"
#include "driftlab/neighbor_kernel.hpp"
#include "driftlab/partition.hpp"

namespace driftlab {

struct EstimatorSpec {
  std::string name;
  std::map<std::string, std::string> params;

  static EstimatorSpec parse(const std::string& text) {
    EstimatorSpec spec;
    const auto colon = text.find(':');
    spec.name = text.substr(0, colon);
    if (spec.name.empty()) throw ParameterError("empty estimator id");
    if (colon == std::string::npos) return spec;
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0) throw ParameterError("malformed estimator parameter '" + item + "'");
      spec.params[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return spec;
  }

  std::string to_string() const {
    std::string s = name;
    char sep = ':';
    for (const auto& [k, v] : params) {
      s += sep + k + "=" + v;
      sep = ',';
    }
    return s;
  }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
  double get_double(const std::string& key, double fallback) const {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ParameterError("parameter '" + key + "' is not a number: " + it->second);
    }
  }
  std::size_t get_size(const std::string& key, std::size_t fallback) const {
    const double v = get_double(key, static_cast<double>(fallback));
    if (v < 0 || v != std::floor(v)) throw ParameterError("parameter '" + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }
};

namespace detail {

// Statistic = max over independent 1-D binnings (marginals or projection axes).
class MaxOverBinnings final : public Descriptor {
 public:
  MaxOverBinnings(const std::vector<AxisBinning>& binnings, const Window& eval, MetricOptions opt)
      : n_(eval.size()), opt_(opt) {
    for (const auto& b : binnings) hist_.push_back(CumulativeHistogram::build(b, eval));
  }
  std::size_t window_size() const override { return n_; }
  double statistic_at_rank(std::size_t k) const override {
    double best = 0.0;
    for (const auto& h : hist_) best = std::max(best, h.divergence_at_rank(k, opt_));
    return best;
  }

 private:
  std::size_t n_;
  MetricOptions opt_;
  std::vector<CumulativeHistogram> hist_;
};

// Statistic = mean over a set of partitions (tree ensembles, grid).
class MeanOverPartitions final : public Descriptor {
 public:
  explicit MeanOverPartitions(std::vector<CumulativeHistogram> hist, std::size_t n, MetricOptions opt)
      : n_(n), opt_(opt), hist_(std::move(hist)) {}
  std::size_t window_size() const override { return n_; }
  double statistic_at_rank(std::size_t k) const override {
    double s = 0.0;
    for (const auto& h : hist_) s += h.divergence_at_rank(k, opt_);
    return s / static_cast<double>(hist_.size());
  }

 private:
  std::size_t n_;
  MetricOptions opt_;
  std::vector<CumulativeHistogram> hist_;
};

class MmdDescriptor final : public Descriptor {
 public:
  MmdDescriptor(const Window& eval, BandwidthMode mode, double sigma) : gram_(eval, mode, sigma) {}
  std::size_t window_size() const override { return gram_.size(); }
  double statistic_at_rank(std::size_t k) const override { return gram_.mmd_at_rank(k); }

 private:
  KernelGram gram_;
};

class LddDescriptor final : public Descriptor {
 public:
  LddDescriptor(const Window& eval, std::size_t k, LddConfig cfg) : graph_(eval, k), cfg_(cfg) {}
  std::size_t window_size() const override { return graph_.size(); }
  double statistic_at_rank(std::size_t k) const override { return ldd_at_rank(graph_, k, cfg_); }

 private:
  NeighborGraph graph_;
  LddConfig cfg_;
};

class KnnKlDescriptor final : public Descriptor {
 public:
  KnnKlDescriptor(const Window& eval, std::size_t k, std::size_t graph_k)
      : window_(eval), graph_(eval, graph_k), k_(k) {}
  std::size_t window_size() const override { return window_.size(); }
  double statistic_at_rank(std::size_t k) const override { return knn_kl_at_rank(graph_, window_, k, k_); }

 private:
  Window window_;
  NeighborGraph graph_;
  std::size_t k_;
};

inline MetricOptions metric_from(const EstimatorSpec& s) {
  MetricOptions opt;
  opt.metric = parse_metric(s.get("metric", "tv"));
  opt.kl_alpha = s.get_double("alpha", 0.5);
  opt.kl_reverse = s.get("kl_direction", "before_after") == "after_before";
  return opt;
}

inline void check_known(const EstimatorSpec& s, std::initializer_list<const char*> known) {
  for (const auto& [k, v] : s.params) {
    if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; }))
      throw ParameterError("estimator '" + s.name + "' has no parameter '" + k + "'");
  }
}

}  // namespace detail

inline Estimator make_estimator(const EstimatorSpec& spec) {
  using namespace detail;
  const std::string& name = spec.name;

  if (name == "marginal") {
    check_known(spec, {"bins", "edges", "metric", "alpha", "kl_direction"});
    const auto bins = spec.get_size("bins", 8);
    const auto mode = parse_edge_mode(spec.get("edges", "equidistant"));
    const auto opt = metric_from(spec);
    if (bins < 2) throw ParameterError("bins must be >= 2");
    return Estimator(spec.to_string(), {DriftDetecting::No, false, "O(1)", true},
                     [=](const Window& train, const Window& eval, std::uint64_t) -> std::unique_ptr<Descriptor> {
                       return std::make_unique<MaxOverBinnings>(build_marginal(train, bins, mode), eval, opt);
                     });
  }
  if (name == "randproj") {
    check_known(spec, {"axes", "bins", "edges", "metric", "alpha", "kl_direction"});
    const auto axes = spec.get_size("axes", 0);  // 0: twice the dimension
    const auto bins = spec.get_size("bins", 8);
    const auto mode = parse_edge_mode(spec.get("edges", "equidistant"));
    const auto opt = metric_from(spec);
    if (bins < 2) throw ParameterError("bins must be >= 2");
    return Estimator(spec.to_string(), {DriftDetecting::Probabilistic, false, "O(1)", true},
                     [=](const Window& train, const Window& eval, std::uint64_t seed) -> std::unique_ptr<Descriptor> {
                       const auto a = axes == 0 ? 2 * train.dim() : axes;
                       return std::make_unique<MaxOverBinnings>(build_random_projection(train, a, bins, mode, seed).axes,
                                                                eval, opt);
                     });
  }
  if (name == "grid") {
    check_known(spec, {"bins", "max_cells", "metric", "alpha", "kl_direction"});
    const auto bins = spec.get_size("bins", 4);
    const auto max_cells = spec.get_size("max_cells", 4096);
    const auto opt = metric_from(spec);
    return Estimator(spec.to_string(), {DriftDetecting::No, false, "O(1)", true},
                     [=](const Window& train, const Window& eval, std::uint64_t) -> std::unique_ptr<Descriptor> {
                       std::vector<CumulativeHistogram> h;
                       h.push_back(CumulativeHistogram::build(build_grid(train, bins, max_cells), eval));
                       return std::make_unique<MeanOverPartitions>(std::move(h), eval.size(), opt);
                     });
  }
  if (name == "randtree") {
    check_known(spec, {"leaves", "min_leaf", "trees", "metric", "alpha", "kl_direction"});
    RandomTreeConfig cfg;
    cfg.n_leaves = spec.get_size("leaves", 16);
    cfg.min_leaf = spec.get_size("min_leaf", 5);
    const auto trees = spec.get_size("trees", 1);
    const auto opt = metric_from(spec);
    if (cfg.n_leaves < 2) throw ParameterError("leaves must be >= 2");
    if (trees < 1) throw ParameterError("trees must be >= 1");
    return Estimator(spec.to_string(), {DriftDetecting::Surely, false, "O(1)", true},
                     [=](const Window& train, const Window& eval, std::uint64_t seed) -> std::unique_ptr<Descriptor> {
                       std::vector<CumulativeHistogram> h;
                       for (std::size_t i = 0; i < trees; ++i) {
                         const auto s = trees == 1 ? seed : derive_seed(seed, {i});
                         h.push_back(CumulativeHistogram::build(build_random_tree(train, cfg, s), eval));
                       }
                       return std::make_unique<MeanOverPartitions>(std::move(h), eval.size(), opt);
                     });
  }
  if (name == "kdq") {
    check_known(spec, {"min_side", "min_count", "metric", "alpha", "kl_direction"});
    KdqConfig cfg;
    cfg.min_side = spec.get_double("min_side", cfg.min_side);
    cfg.min_count = spec.get_size("min_count", 10);
    const auto opt = metric_from(spec);
    return Estimator(spec.to_string(), {DriftDetecting::Surely, false, "O(1)", true},
                     [=](const Window& train, const Window& eval, std::uint64_t) -> std::unique_ptr<Descriptor> {
                       std::vector<CumulativeHistogram> h;
                       h.push_back(CumulativeHistogram::build(build_kdq_tree(train, cfg), eval));
                       return std::make_unique<MeanOverPartitions>(std::move(h), eval.size(), opt);
                     });
  }
  if (name == "rf" || name == "dt") {
    check_known(spec, {"trees", "degree", "min_leaf", "max_depth", "skip", "metric", "alpha", "kl_direction"});
    MomentTreeConfig cfg;
    cfg.degree = spec.get_size("degree", 1);
    cfg.min_leaf = spec.get_size("min_leaf", 10);
    cfg.max_depth = spec.get_size("max_depth", 8);
    const auto trees = spec.get_size("trees", 16);
    const double skip = spec.get_double("skip", 0.0);
    const auto opt = metric_from(spec);
    const auto variant = name == "rf" ? ForestVariant::RandomForest : ForestVariant::IndependentTrees;
    if (cfg.degree < 1 || trees < 1) throw ParameterError("degree and trees must be >= 1");
    if (!(skip >= 0.0 && skip < 0.5)) throw ParameterError("skip must lie in [0, 0.5)");
    return Estimator(
        spec.to_string(), {DriftDetecting::Surely, true, "O(1)", true},
        [=](const Window& train, const Window& eval, std::uint64_t seed) -> std::unique_ptr<Descriptor> {
          const auto forest = fit_moment_forest(train, trees, cfg, variant, seed);
          std::vector<CumulativeHistogram> h;
          for (const auto& t : forest.trees) h.push_back(CumulativeHistogram::build(t, eval));
          return std::make_unique<MeanOverPartitions>(std::move(h), eval.size(), opt);
        },
        skip);
  }
  if (name == "mmd") {
    check_known(spec, {"sigma"});
    const auto sig = spec.get("sigma", "median");
    const bool median = sig == "median";
    const double sigma = median ? 1.0 : spec.get_double("sigma", 1.0);
    return Estimator(spec.to_string(), {DriftDetecting::Surely, false, "O(|W|)", false},
                     [=](const Window&, const Window& eval, std::uint64_t) -> std::unique_ptr<Descriptor> {
                       return std::make_unique<MmdDescriptor>(
                           eval, median ? BandwidthMode::MedianHeuristic : BandwidthMode::Fixed, sigma);
                     });
  }
  if (name == "ldd") {
    check_known(spec, {"k", "cap", "agg"});
    const auto k = spec.get_size("k", 10);
    LddConfig cfg;
    cfg.cap = spec.get_double("cap", 10.0);
    const auto agg = spec.get("agg", "mean");
    if (agg == "mean") cfg.aggregation = LddAggregation::MeanAbs;
    else if (agg == "max") cfg.aggregation = LddAggregation::MaxAbs;
    else if (agg == "exceed") cfg.aggregation = LddAggregation::ExceedanceRate;
    else throw ParameterError("unknown LDD aggregation '" + agg + "'");
    if (k < 1) throw ParameterError("k must be >= 1");
    return Estimator(spec.to_string(), {DriftDetecting::Surely, false, "O(k)", false},
                     [=](const Window&, const Window& eval, std::uint64_t) -> std::unique_ptr<Descriptor> {
                       return std::make_unique<LddDescriptor>(eval, k, cfg);
                     });
  }
  if (name == "knnkl") {
    check_known(spec, {"k", "graph_k"});
    const auto k = spec.get_size("k", 5);
    const auto graph_k = spec.get_size("graph_k", 0);  // 0: full neighbor order
    if (k < 1) throw ParameterError("k must be >= 1");
    return Estimator(spec.to_string(), {DriftDetecting::Surely, false, "O(k)", false},
                     [=](const Window&, const Window& eval, std::uint64_t) -> std::unique_ptr<Descriptor> {
                       return std::make_unique<KnnKlDescriptor>(eval, k, graph_k == 0 ? eval.size() : graph_k);
                     });
  }
  throw ParameterError("unknown estimator '" + name + "'");
}

inline Estimator make_estimator(const std::string& text) { return make_estimator(EstimatorSpec::parse(text)); }

}  // namespace driftlab
