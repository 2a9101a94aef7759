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

// Moment trees: decision trees regressing the arrival time T on the data X.
// Splits maximize the contrast between the children's time moments
// (E[T], ..., E[T^D]), so the leaves approximate P(T | X). Evaluated as a
// binning, the leaves give an arrival-time-respecting descriptor.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "driftlab/error.hpp"
#include "driftlab/histogram.hpp"
#include "driftlab/partition.hpp"
#include "driftlab/random.hpp"
#include "driftlab/stream.hpp"

namespace driftlab {

struct MomentTreeConfig {
  std::size_t degree = 1;
  std::size_t min_leaf = 10;
  std::size_t max_depth = 8;
  // Features considered per node; 0 means all.
  std::size_t max_features = 0;
  // Nodes larger than this only try `candidate_cap` quantile thresholds per feature.
  std::size_t exhaustive_limit = 256;
  std::size_t candidate_cap = 64;
};

class MomentTree {
 public:
  const TreePartition& partition() const noexcept { return partition_; }
  std::size_t cell_of(std::span<const double> x) const { return partition_.cell_of(x); }
  std::size_t cell_count() const noexcept { return partition_.cell_count(); }

  // Sorted training timestamps per leaf.
  const std::vector<std::vector<double>>& leaf_times() const noexcept { return leaf_times_; }

  friend bool operator==(const MomentTree&, const MomentTree&) = default;

 private:
  friend MomentTree fit_moment_tree_on(const Window&, std::vector<std::uint32_t>, const MomentTreeConfig&, Rng&);
  TreePartition partition_;
  std::vector<std::vector<double>> leaf_times_;
};

namespace detail {

struct MomentSplit {
  double score = 0.0;
  int feature = -1;
  double threshold = 0.0;
  std::size_t left_count = 0;
};

// Best moment-contrast split of `members` on feature f:
// score = n_l n_r / n^2 * || m(left) - m(right) ||^2.
inline void scan_feature(const Window& w, std::vector<std::uint32_t>& members, std::size_t f,
                         const MomentTreeConfig& cfg, MomentSplit& best) {
  const std::size_t n = members.size();
  std::stable_sort(members.begin(), members.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return w.x(a)[f] < w.x(b)[f]; });
  const std::size_t D = cfg.degree;
  // prefix[i*D + j] = sum over the first i members of t^(j+1)
  std::vector<double> prefix((n + 1) * D, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = w.t(members[i]);
    double p = 1.0;
    for (std::size_t j = 0; j < D; ++j) {
      p *= t;
      prefix[(i + 1) * D + j] = prefix[i * D + j] + p;
    }
  }

  std::vector<std::size_t> positions;
  for (std::size_t i = cfg.min_leaf; i + cfg.min_leaf <= n; ++i)
    if (w.x(members[i - 1])[f] < w.x(members[i])[f]) positions.push_back(i);
  if (positions.empty()) return;
  if (n > cfg.exhaustive_limit && positions.size() > cfg.candidate_cap) {
    std::vector<std::size_t> kept;
    for (std::size_t q = 1; q <= cfg.candidate_cap; ++q) {
      const double target = static_cast<double>(q) * static_cast<double>(n) / static_cast<double>(cfg.candidate_cap + 1);
      auto it = std::lower_bound(positions.begin(), positions.end(), target,
                                 [](std::size_t p, double v) { return static_cast<double>(p) < v; });
      if (it == positions.end()) --it;
      if (kept.empty() || kept.back() != *it) kept.push_back(*it);
    }
    positions = std::move(kept);
  }

  const double nn = static_cast<double>(n);
  for (std::size_t i : positions) {
    const double nl = static_cast<double>(i), nr = nn - nl;
    double dist = 0.0;
    for (std::size_t j = 0; j < D; ++j) {
      const double ml = prefix[i * D + j] / nl;
      const double mr = (prefix[n * D + j] - prefix[i * D + j]) / nr;
      dist += (ml - mr) * (ml - mr);
    }
    const double score = nl * nr / (nn * nn) * dist;
    if (score > best.score) {
      best.score = score;
      best.feature = static_cast<int>(f);
      best.threshold = 0.5 * (w.x(members[i - 1])[f] + w.x(members[i])[f]);
      best.left_count = i;
    }
  }
}

}  // namespace detail

// Fit on the given (possibly repeated, for bootstrap) member indices of w.
inline MomentTree fit_moment_tree_on(const Window& w, std::vector<std::uint32_t> members, const MomentTreeConfig& cfg,
                                     Rng& rng) {
  if (cfg.degree < 1) throw ParameterError("moment degree must be >= 1");
  if (cfg.min_leaf < 1) throw ParameterError("min_leaf must be >= 1");
  MomentTree tree;
  tree.partition_.provenance = "moment_tree/D=" + std::to_string(cfg.degree);
  // Scores below this are rounding noise of identical moments.
  constexpr double kZeroScore = 1e-14;

  struct Task {
    std::uint32_t node;
    std::vector<std::uint32_t> members;
  };
  std::vector<Task> stack;
  std::vector<std::pair<std::uint32_t, std::vector<std::uint32_t>>> finished;
  stack.push_back({0, std::move(members)});
  std::vector<std::size_t> features(w.dim());
  std::iota(features.begin(), features.end(), std::size_t{0});

  while (!stack.empty()) {
    Task task = std::move(stack.back());
    stack.pop_back();
    const auto depth = tree.partition_.nodes()[task.node].depth;
    detail::MomentSplit best;
    if (depth < cfg.max_depth && task.members.size() >= 2 * cfg.min_leaf) {
      std::vector<std::size_t> candidates = features;
      if (cfg.max_features > 0 && cfg.max_features < features.size()) {
        // Partial Fisher-Yates: first max_features entries are a uniform subset.
        for (std::size_t i = 0; i < cfg.max_features; ++i)
          std::swap(candidates[i], candidates[i + uniform_index(rng, candidates.size() - i)]);
        candidates.resize(cfg.max_features);
        std::sort(candidates.begin(), candidates.end());
      }
      for (auto f : candidates) detail::scan_feature(w, task.members, f, cfg, best);
    }
    if (best.feature < 0 || best.score <= kZeroScore) {
      finished.emplace_back(task.node, std::move(task.members));
      continue;
    }
    const auto f = static_cast<std::size_t>(best.feature);
    auto [l, r] = tree.partition_.split(task.node, best.feature, best.threshold);
    Task left{l, {}}, right{r, {}};
    for (auto m : task.members) (w.x(m)[f] <= best.threshold ? left : right).members.push_back(m);
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }

  tree.leaf_times_.assign(tree.partition_.leaf_count(), {});
  for (auto& [node, mem] : finished) {
    auto& times = tree.leaf_times_[tree.partition_.nodes()[node].leaf];
    for (auto m : mem) times.push_back(w.t(m));
    std::sort(times.begin(), times.end());
  }
  return tree;
}

inline MomentTree fit_moment_tree(const Window& w, const MomentTreeConfig& cfg, std::uint64_t seed) {
  if (w.size() < 2 * cfg.min_leaf) throw DataError("window too small for min_leaf");
  std::vector<std::uint32_t> members(w.size());
  std::iota(members.begin(), members.end(), 0u);
  Rng rng = make_rng(seed);
  return fit_moment_tree_on(w, std::move(members), cfg, rng);
}

enum class ForestVariant { IndependentTrees, RandomForest };

struct MomentForest {
  std::vector<MomentTree> trees;
  ForestVariant variant = ForestVariant::RandomForest;
};

// RandomForest: bootstrap per tree and sqrt(d) features per node.
// IndependentTrees: every tree sees the full window with the given config.
inline MomentForest fit_moment_forest(const Window& w, std::size_t n_trees, MomentTreeConfig cfg,
                                      ForestVariant variant, std::uint64_t seed) {
  if (n_trees < 1) throw ParameterError("n_trees must be >= 1");
  if (w.size() < 2 * cfg.min_leaf) throw DataError("window too small for min_leaf");
  if (variant == ForestVariant::RandomForest && cfg.max_features == 0)
    cfg.max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(w.dim())))));
  MomentForest forest;
  forest.variant = variant;
  forest.trees.reserve(n_trees);
  for (std::size_t i = 0; i < n_trees; ++i) {
    const std::uint64_t tree_seed = n_trees == 1 ? seed : derive_seed(seed, {i});
    Rng rng = make_rng(tree_seed);
    std::vector<std::uint32_t> members(w.size());
    if (variant == ForestVariant::RandomForest) {
      for (auto& m : members) m = static_cast<std::uint32_t>(uniform_index(rng, w.size()));
    } else {
      std::iota(members.begin(), members.end(), 0u);
    }
    forest.trees.push_back(fit_moment_tree_on(w, std::move(members), cfg, rng));
  }
  return forest;
}

// Drops reference samples whose timestamps fall in the last skip_fraction of
// the reference range [0, reference_end].
inline Window truncate_reference(const Window& w, double skip_fraction, double reference_end) {
  if (!(skip_fraction >= 0.0 && skip_fraction < 0.5)) throw ParameterError("skip_fraction must lie in [0, 0.5)");
  if (skip_fraction == 0.0) return w;
  const double cut = reference_end - skip_fraction * reference_end;
  std::vector<TimedSample> kept;
  for (const auto& s : w)
    if (!(s.t > cut && s.t <= reference_end)) kept.push_back(s);
  return Window(std::move(kept), w.label_feature_appended());
}

// Per-tree cumulative leaf histograms over an evaluation window; the forest
// statistic at a split is the mean of the per-tree divergences.
class MomentForestHistograms {
 public:
  MomentForestHistograms(const MomentForest& forest, const Window& w) {
    hist_.reserve(forest.trees.size());
    for (const auto& t : forest.trees) hist_.push_back(CumulativeHistogram::build(t, w));
  }

  double divergence_at_rank(std::size_t k, const MetricOptions& opt) const {
    double s = 0.0;
    for (const auto& h : hist_) s += h.divergence_at_rank(k, opt);
    return s / static_cast<double>(hist_.size());
  }

  const std::vector<CumulativeHistogram>& per_tree() const noexcept { return hist_; }

 private:
  std::vector<CumulativeHistogram> hist_;
};

inline double similarity_at(const MomentForest& forest, const Window& w, const SplitPoint& split,
                            const MetricOptions& opt = {}) {
  return MomentForestHistograms(forest, w).divergence_at_rank(w.rank_of(split.t), opt);
}

inline nlohmann::json to_json(const MomentTree& t) {
  nlohmann::json j = to_json(t.partition());
  j["type"] = "moment_tree";
  j["leaf_times"] = t.leaf_times();
  return j;
}

inline nlohmann::json to_json(const MomentForest& f) {
  nlohmann::json j;
  j["type"] = "moment_forest";
  j["variant"] = f.variant == ForestVariant::RandomForest ? "random_forest" : "independent_trees";
  auto& arr = j["trees"] = nlohmann::json::array();
  for (const auto& t : f.trees) arr.push_back(to_json(t));
  return j;
}

}  // namespace driftlab
