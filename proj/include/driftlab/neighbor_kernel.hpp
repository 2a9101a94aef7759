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

// Non-partition estimators: k-nearest-neighbor descriptors (LDD, kNN
// Kullback-Leibler) and the biased MMD with a Gaussian kernel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "driftlab/error.hpp"
#include "driftlab/stream.hpp"

namespace driftlab {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Exact k nearest neighbors of every sample within the window (self excluded),
// ordered by distance with ties broken by lower index.
class NeighborGraph {
 public:
  NeighborGraph() = default;

  NeighborGraph(const Window& w, std::size_t k) : n_(w.size()) {
    if (n_ < 2) throw DataError("neighbor graph needs at least 2 samples");
    if (k < 1) throw ParameterError("k must be >= 1");
    k_ = std::min(k, n_ - 1);
    index_.resize(n_ * k_);
    dist_.resize(n_ * k_);
    std::vector<std::pair<double, std::uint32_t>> row;
    row.reserve(n_ - 1);
    for (std::size_t i = 0; i < n_; ++i) {
      row.clear();
      for (std::size_t j = 0; j < n_; ++j)
        if (j != i) row.emplace_back(squared_distance(w.x(i), w.x(j)), static_cast<std::uint32_t>(j));
      std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k_), row.end());
      for (std::size_t r = 0; r < k_; ++r) {
        index_[i * k_ + r] = row[r].second;
        dist_[i * k_ + r] = std::sqrt(row[r].first);
      }
    }
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t k() const noexcept { return k_; }
  std::span<const std::uint32_t> neighbors(std::size_t i) const { return {index_.data() + i * k_, k_}; }
  std::span<const double> distances(std::size_t i) const { return {dist_.data() + i * k_, k_}; }

 private:
  std::size_t n_ = 0, k_ = 0;
  std::vector<std::uint32_t> index_;
  std::vector<double> dist_;
};

inline NeighborGraph build_neighbor_graph(const Window& w, std::size_t k) { return NeighborGraph(w, k); }

enum class LddAggregation { MeanAbs, MaxAbs, ExceedanceRate };

struct LddConfig {
  double cap = 10.0;
  LddAggregation aggregation = LddAggregation::MeanAbs;
  // For ExceedanceRate: fraction of points with |delta| above this.
  double exceed_threshold = 1.0;
};

// Local drift degree at a split after the first k_split samples.
// delta(x) = (n_-/n_+) * k_+(x) / max(k_-(x), 1) - 1, |delta| capped.
inline double ldd_at_rank(const NeighborGraph& g, std::size_t k_split, const LddConfig& cfg = {}) {
  const std::size_t n = g.size();
  if (k_split == 0 || k_split >= n) throw InvalidSplit("LDD split leaves an empty side");
  const double ratio = static_cast<double>(k_split) / static_cast<double>(n - k_split);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t before = 0;
    for (auto j : g.neighbors(i)) before += j < k_split;
    const std::size_t after = g.k() - before;
    const double delta =
        std::min(cfg.cap, std::abs(ratio * static_cast<double>(after) / static_cast<double>(std::max<std::size_t>(before, 1)) - 1.0));
    switch (cfg.aggregation) {
      case LddAggregation::MeanAbs: acc += delta; break;
      case LddAggregation::MaxAbs: acc = std::max(acc, delta); break;
      case LddAggregation::ExceedanceRate: acc += delta > cfg.exceed_threshold; break;
    }
  }
  return cfg.aggregation == LddAggregation::MaxAbs ? acc : acc / static_cast<double>(n);
}

inline double ldd_statistic(const NeighborGraph& g, const Window& w, const SplitPoint& split, const LddConfig& cfg = {}) {
  return ldd_at_rank(g, w.rank_of(split.t), cfg);
}

namespace detail {

// Distance from sample i to its k-th nearest neighbor among indices in
// [lo, hi), excluding i itself. Uses the graph lists, falling back to a scan.
inline double kth_distance_in(const NeighborGraph& g, const Window& w, std::size_t i, std::size_t k, std::size_t lo,
                              std::size_t hi) {
  std::size_t seen = 0;
  const auto nb = g.neighbors(i);
  const auto ds = g.distances(i);
  for (std::size_t r = 0; r < nb.size(); ++r) {
    if (nb[r] >= lo && nb[r] < hi && ++seen == k) return ds[r];
  }
  std::vector<double> d;
  d.reserve(hi - lo);
  for (std::size_t j = lo; j < hi; ++j)
    if (j != i) d.push_back(squared_distance(w.x(i), w.x(j)));
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
  return std::sqrt(d[k - 1]);
}

}  // namespace detail

// kNN estimate of KL(S_- || S_+) (Wang, Kulkarni, Verdu), clamped at 0.
inline double knn_kl_at_rank(const NeighborGraph& g, const Window& w, std::size_t k_split, std::size_t k) {
  const std::size_t n = w.size();
  if (k < 1) throw ParameterError("k must be >= 1");
  if (k_split <= k || n - k_split <= k) throw InvalidSplit("kNN-KL needs more than k samples on each side");
  constexpr double kFloor = 1e-12;
  const double d = static_cast<double>(w.dim());
  const double nm = static_cast<double>(k_split), np = static_cast<double>(n - k_split);
  double acc = 0.0;
  for (std::size_t i = 0; i < k_split; ++i) {
    const double rho = std::max(kFloor, detail::kth_distance_in(g, w, i, k, 0, k_split));
    const double nu = std::max(kFloor, detail::kth_distance_in(g, w, i, k, k_split, n));
    acc += std::log(nu / rho);
  }
  return std::max(0.0, d / nm * acc + std::log(np / (nm - 1.0)));
}

inline double knn_kl(const NeighborGraph& g, const Window& w, const SplitPoint& split, std::size_t k) {
  return knn_kl_at_rank(g, w, w.rank_of(split.t), k);
}

enum class BandwidthMode { MedianHeuristic, Fixed };

inline double median_pairwise_distance(const Window& w) {
  std::vector<double> d;
  d.reserve(w.size() * (w.size() - 1) / 2);
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j) d.push_back(std::sqrt(squared_distance(w.x(i), w.x(j))));
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (*mid > 0.0) return *mid;
  const double mx = *std::max_element(d.begin(), d.end());
  return mx > 0.0 ? mx : 1.0;
}

// Gaussian Gram matrix k(x,y) = exp(-|x-y|^2 / (2 sigma^2)) over the full
// window, with per-row prefix sums along arrival order so that the block
// sums of any split cost O(n).
class KernelGram {
 public:
  KernelGram(const Window& w, BandwidthMode mode = BandwidthMode::MedianHeuristic, double fixed_sigma = 1.0)
      : n_(w.size()) {
    if (n_ < 2) throw DataError("kernel gram needs at least 2 samples");
    sigma_ = mode == BandwidthMode::MedianHeuristic ? median_pairwise_distance(w) : fixed_sigma;
    if (!(sigma_ > 0.0)) throw ParameterError("bandwidth must be positive");
    const double inv = 1.0 / (2.0 * sigma_ * sigma_);
    gram_.assign(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      gram_[i * n_ + i] = 1.0;
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double v = std::exp(-squared_distance(w.x(i), w.x(j)) * inv);
        gram_[i * n_ + j] = gram_[j * n_ + i] = v;
      }
    }
    row_prefix_.assign(n_ * (n_ + 1), 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        row_prefix_[i * (n_ + 1) + j + 1] = row_prefix_[i * (n_ + 1) + j] + gram_[i * n_ + j];
  }

  std::size_t size() const noexcept { return n_; }
  double sigma() const noexcept { return sigma_; }
  double operator()(std::size_t i, std::size_t j) const { return gram_[i * n_ + j]; }

  // Biased MMD (square root of the clamped MMD_b^2) after the first k samples.
  double mmd_at_rank(std::size_t k) const {
    if (k == 0 || k >= n_) throw InvalidSplit("MMD split leaves an empty side");
    double bb = 0.0, ba = 0.0, aa = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double* p = row_prefix_.data() + i * (n_ + 1);
      if (i < k) {
        bb += p[k];
        ba += p[n_] - p[k];
      } else {
        aa += p[n_] - p[k];
      }
    }
    const double nb = static_cast<double>(k), na = static_cast<double>(n_ - k);
    const double mmd2 = bb / (nb * nb) + aa / (na * na) - 2.0 * ba / (nb * na);
    // Kernel values are at most 1, so anything below this is cancellation noise.
    constexpr double kRoundingFloor = 1e-12;
    return mmd2 > kRoundingFloor ? std::sqrt(mmd2) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double sigma_ = 1.0;
  std::vector<double> gram_;
  std::vector<double> row_prefix_;
};

inline double mmd_biased(const Window& w, const SplitPoint& split, BandwidthMode mode = BandwidthMode::MedianHeuristic,
                         double fixed_sigma = 1.0) {
  return KernelGram(w, mode, fixed_sigma).mmd_at_rank(w.rank_of(split.t));
}

}  // namespace driftlab
