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

// Estimator = (descriptor builder, similarity). A descriptor is fitted once per
// window and then evaluated at any split; the drift statistic of a window is
// the maximum over admissible splits, normalized by a permutation test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "driftlab/error.hpp"
#include "driftlab/histogram.hpp"
#include "driftlab/random.hpp"
#include "driftlab/stream.hpp"

namespace driftlab {

// A fitted descriptor A0(S). statistic_at_rank(k) is s(A0(S), t) for the
// split whose before-side holds the first k samples.
class Descriptor {
 public:
  virtual ~Descriptor() = default;
  virtual std::size_t window_size() const = 0;
  virtual double statistic_at_rank(std::size_t k) const = 0;

  double statistic_at(const Window& w, const SplitPoint& split) const {
    if (w.size() != window_size()) throw ParameterError("descriptor was fitted on a different window");
    return statistic_at_rank(w.rank_of(split.t));
  }
};

enum class DriftDetecting { No, Probabilistic, Surely };

struct EstimatorTraits {
  DriftDetecting drift_detecting = DriftDetecting::No;
  bool arrival_time_respecting = false;
  std::string per_split_cost = "O(1)";
  bool partition_based = false;
};

class Estimator {
 public:
  // train: window the descriptor is learned on; eval: window it is evaluated on.
  using FitFn = std::function<std::unique_ptr<Descriptor>(const Window& train, const Window& eval, std::uint64_t seed)>;

  Estimator(std::string id, EstimatorTraits traits, FitFn fit, double reference_skip = 0.0)
      : id_(std::move(id)), traits_(std::move(traits)), fit_(std::move(fit)), reference_skip_(reference_skip) {}

  const std::string& id() const noexcept { return id_; }
  const EstimatorTraits& traits() const noexcept { return traits_; }
  // Fraction of the reference period withheld from training (arrival-time-respecting estimators only).
  double reference_skip() const noexcept { return reference_skip_; }

  std::unique_ptr<Descriptor> fit(const Window& w, std::uint64_t seed) const { return fit_(w, w, seed); }
  std::unique_ptr<Descriptor> fit(const Window& train, const Window& eval, std::uint64_t seed) const {
    return fit_(train, eval, seed);
  }

 private:
  std::string id_;
  EstimatorTraits traits_;
  FitFn fit_;
  double reference_skip_ = 0.0;
};

struct DriftVerdict {
  std::vector<std::pair<double, double>> statistic_trace;  // (t, statistic)
  double t_hat = 0.0;
  double max_stat = 0.0;
  bool detected = false;
  std::optional<double> p_value;
  std::optional<double> precision;
};

// Candidate splits: distinct timestamps whose split satisfies the margin.
// Returns (t, rank) pairs in time order.
inline std::vector<std::pair<double, std::size_t>> candidate_splits(const Window& w, const MarginPolicy& margin) {
  std::vector<std::pair<double, std::size_t>> out;
  const std::size_t n = w.size(), m = margin.min_side(n);
  for (std::size_t k = 1; k < n; ++k) {
    if (w.t(k - 1) == w.t(k)) continue;
    if (k >= m && n - k >= m) out.emplace_back(w.t(k - 1), k);
  }
  return out;
}

// 1 - empirical P_T mass between the true and the estimated change point.
inline double split_precision(const Window& w, double t0, double t_hat) {
  const double lo = std::min(t0, t_hat), hi = std::max(t0, t_hat);
  std::size_t between = 0;
  for (const auto& s : w) {
    if (t0 <= t_hat ? (s.t >= lo && s.t < hi) : (s.t > lo && s.t <= hi)) ++between;
  }
  return 1.0 - static_cast<double>(between) / static_cast<double>(w.size());
}

inline DriftVerdict scan_descriptor(const Descriptor& d, const Window& w, const MarginPolicy& margin = {}) {
  const auto cands = candidate_splits(w, margin);
  if (cands.empty()) throw InvalidSplit("no candidate split satisfies the margin constraint");
  DriftVerdict v;
  v.statistic_trace.reserve(cands.size());
  v.max_stat = -std::numeric_limits<double>::infinity();
  for (const auto& [t, k] : cands) {
    const double s = d.statistic_at_rank(k);
    v.statistic_trace.emplace_back(t, s);
    if (s > v.max_stat) {  // strict: earliest arg max wins
      v.max_stat = s;
      v.t_hat = t;
    }
  }
  return v;
}

// Fit once, evaluate every candidate split, take the earliest arg max.
inline DriftVerdict scan_splits(const Estimator& e, const Window& w, std::uint64_t seed, const MarginPolicy& margin = {}) {
  if (w.empty()) throw DataError("cannot scan an empty window");
  if (candidate_splits(w, margin).empty()) throw InvalidSplit("no candidate split satisfies the margin constraint");
  return scan_descriptor(*e.fit(w, seed), w, margin);
}

namespace detail {

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

struct PermutationOptions {
  std::size_t n_perms = 99;
  std::size_t threads = 1;
  MarginPolicy margin{};
};

// p = (1 + #{permuted max-statistics >= observed}) / (n_perms + 1). Every
// permuted window gets a freshly fitted descriptor.
inline double permutation_p_value(const Estimator& e, const Window& w, double observed, std::uint64_t seed,
                                  const PermutationOptions& opt = {}) {
  if (opt.n_perms < 19) throw ParameterError("n_perms must be >= 19");
  std::vector<double> stats(opt.n_perms);
  detail::parallel_for(opt.n_perms, opt.threads, [&](std::size_t p) {
    const Window wp = permute_timestamps(w, derive_seed(seed, {p, 0}));
    stats[p] = scan_splits(e, wp, derive_seed(seed, {p, 1}), opt.margin).max_stat;
  });
  const auto exceed = std::count_if(stats.begin(), stats.end(), [&](double s) { return s >= observed; });
  return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(opt.n_perms) + 1.0);
}

inline double permutation_normalize(const Estimator& e, const Window& w, std::size_t n_perms, std::uint64_t seed,
                                    const MarginPolicy& margin = {}) {
  const double observed = scan_splits(e, w, derive_seed(seed, {0xfeed}), margin).max_stat;
  return permutation_p_value(e, w, observed, seed, PermutationOptions{n_perms, 1, margin});
}

// Scan plus permutation test: the full stage-2..4 pipeline on one window.
inline DriftVerdict detect(const Estimator& e, const Window& w, std::uint64_t seed, const PermutationOptions& opt = {},
                           double alpha = 0.05, std::optional<double> true_t0 = std::nullopt) {
  DriftVerdict v = scan_splits(e, w, derive_seed(seed, {0xfeed}), opt.margin);
  v.p_value = permutation_p_value(e, w, v.max_stat, seed, opt);
  v.detected = *v.p_value <= alpha;
  if (true_t0) v.precision = split_precision(w, *true_t0, v.t_hat);
  return v;
}

// Best class-reweighted 0-1 loss of a leaf-labeling classifier separating
// S_-(t) from S_+(t), by brute force over all 2^L labelings; returns
// 1/2 - min loss, which coincides with half the total variation of the leaf
// histograms.
template <class CellMap>
double classifier_tv_oracle(const CellMap& partition, const Window& w, const SplitPoint& split) {
  const std::size_t L = partition.cell_count();
  if (L > 20) throw ParameterError("classifier oracle refuses partitions with more than 20 cells");
  const std::size_t k = w.rank_of(split.t);
  if (k == 0 || k >= w.size()) throw InvalidSplit("oracle split leaves an empty side");
  std::vector<double> before(L, 0.0), after(L, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) (i < k ? before : after)[partition.cell_of(w.x(i))] += 1.0;
  const double nb = static_cast<double>(k), na = static_cast<double>(w.size() - k);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << L); ++mask) {
    // Leaf c predicts "after" when bit c is set: errs on before-samples there,
    // on after-samples elsewhere.
    double err_before = 0.0, err_after = 0.0;
    for (std::size_t c = 0; c < L; ++c) {
      if (mask >> c & 1U) err_before += before[c];
      else err_after += after[c];
    }
    best = std::min(best, 0.5 * (err_before / nb + err_after / na));
  }
  return 0.5 - best;
}

}  // namespace driftlab
