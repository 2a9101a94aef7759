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

// Histogram divergences and the cumulative (prefix-count) histogram that lets
// every partition-based estimator evaluate a split in O(#cells).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftlab/error.hpp"
#include "driftlab/stream.hpp"

namespace driftlab {

enum class Metric { TotalVariation, Hellinger, JensenShannon, KullbackLeibler };

inline std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::TotalVariation: return "tv";
    case Metric::Hellinger: return "hellinger";
    case Metric::JensenShannon: return "js";
    case Metric::KullbackLeibler: return "kl";
  }
  return "?";
}

inline Metric parse_metric(std::string_view s) {
  if (s == "tv") return Metric::TotalVariation;
  if (s == "hellinger") return Metric::Hellinger;
  if (s == "js") return Metric::JensenShannon;
  if (s == "kl") return Metric::KullbackLeibler;
  throw ParameterError("unknown metric '" + std::string(s) + "'");
}

struct MetricOptions {
  Metric metric = Metric::TotalVariation;
  // Laplace pseudo-count per cell, used by KL whenever the reference has an empty cell.
  double kl_alpha = 0.5;
  // KL(after || before) instead of KL(before || after).
  bool kl_reverse = false;
};

struct CellHistogram {
  std::vector<std::uint32_t> counts;
  std::uint64_t total = 0;

  static CellHistogram from_counts(std::vector<std::uint32_t> c) {
    CellHistogram h{std::move(c), 0};
    h.total = std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0});
    return h;
  }
  std::size_t cells() const noexcept { return counts.size(); }

  friend bool operator==(const CellHistogram&, const CellHistogram&) = default;
};

struct DiscreteDistribution {
  std::vector<double> p;
  // Sample count behind p; only used to place the smoothing pseudo-count.
  double mass = 1.0;

  std::size_t cells() const noexcept { return p.size(); }

  static DiscreteDistribution from_histogram(const CellHistogram& h, double alpha = 0.0) {
    if (h.total == 0 && alpha <= 0.0) throw DataError("cannot normalize an empty histogram");
    DiscreteDistribution d;
    d.mass = static_cast<double>(h.total);
    const double denom = d.mass + alpha * static_cast<double>(h.cells());
    d.p.reserve(h.cells());
    for (auto c : h.counts) d.p.push_back((static_cast<double>(c) + alpha) / denom);
    return d;
  }

  DiscreteDistribution smoothed(double alpha) const {
    DiscreteDistribution d;
    d.mass = mass;
    const double denom = mass + alpha * static_cast<double>(p.size());
    for (double v : p) d.p.push_back((v * mass + alpha) / denom);
    return d;
  }
};

namespace detail {

inline void require_same_cells(std::size_t a, std::size_t b) {
  if (a != b) throw ParameterError("distributions are defined on different cell sets");
}

inline double xlogy_ratio(double p, double q) {
  if (p <= 0.0) return 0.0;
  if (q <= 0.0) return std::numeric_limits<double>::infinity();
  return p * std::log(p / q);
}

}  // namespace detail

inline double total_variation(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  detail::require_same_cells(p.cells(), q.cells());
  double s = 0.0;
  for (std::size_t c = 0; c < p.cells(); ++c) s += std::abs(p.p[c] - q.p[c]);
  return 0.5 * s;
}

inline double hellinger(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  detail::require_same_cells(p.cells(), q.cells());
  double s = 0.0;
  for (std::size_t c = 0; c < p.cells(); ++c) {
    const double d = std::sqrt(p.p[c]) - std::sqrt(q.p[c]);
    s += d * d;
  }
  return std::sqrt(std::max(0.0, 0.5 * s));
}

// KL(p || q) in nats. With alpha > 0 both sides are smoothed when q has an
// empty cell; with alpha == 0 an unsupported p-mass yields +infinity.
inline double kl_divergence(const DiscreteDistribution& p, const DiscreteDistribution& q, double alpha = 0.5) {
  detail::require_same_cells(p.cells(), q.cells());
  const bool needs = std::any_of(q.p.begin(), q.p.end(), [](double v) { return v <= 0.0; });
  if (alpha > 0.0 && needs) return kl_divergence(p.smoothed(alpha), q.smoothed(alpha), 0.0);
  double s = 0.0;
  for (std::size_t c = 0; c < p.cells(); ++c) s += detail::xlogy_ratio(p.p[c], q.p[c]);
  return std::max(0.0, s);
}

// Jensen-Shannon metric: square root of the JS divergence, natural log.
inline double jensen_shannon(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  detail::require_same_cells(p.cells(), q.cells());
  double s = 0.0;
  for (std::size_t c = 0; c < p.cells(); ++c) {
    const double m = 0.5 * (p.p[c] + q.p[c]);
    s += 0.5 * detail::xlogy_ratio(p.p[c], m) + 0.5 * detail::xlogy_ratio(q.p[c], m);
  }
  return std::sqrt(std::max(0.0, s));
}

// Divergence between two count vectors given by accessors. Every histogram
// route (recount, prefix subtraction, leaf histograms) funnels through here so
// the results agree bit for bit.
template <class BeforeFn, class AfterFn>
double divergence_from_counts(const MetricOptions& opt, std::size_t cells, BeforeFn before, AfterFn after,
                              double n_before, double n_after) {
  if (n_before <= 0.0 || n_after <= 0.0) throw InvalidSplit("empty side in histogram comparison");
  double s = 0.0;
  switch (opt.metric) {
    case Metric::TotalVariation:
      for (std::size_t c = 0; c < cells; ++c) s += std::abs(before(c) / n_before - after(c) / n_after);
      return 0.5 * s;
    case Metric::Hellinger:
      for (std::size_t c = 0; c < cells; ++c) {
        const double d = std::sqrt(before(c) / n_before) - std::sqrt(after(c) / n_after);
        s += d * d;
      }
      return std::sqrt(std::max(0.0, 0.5 * s));
    case Metric::JensenShannon:
      for (std::size_t c = 0; c < cells; ++c) {
        const double p = before(c) / n_before, q = after(c) / n_after, m = 0.5 * (p + q);
        s += 0.5 * detail::xlogy_ratio(p, m) + 0.5 * detail::xlogy_ratio(q, m);
      }
      return std::sqrt(std::max(0.0, s));
    case Metric::KullbackLeibler: {
      auto kl = [&](auto pc, auto qc, double np, double nq) {
        bool needs = false;
        for (std::size_t c = 0; c < cells && !needs; ++c) needs = qc(c) <= 0.0;
        const double a = (needs && opt.kl_alpha > 0.0) ? opt.kl_alpha : 0.0;
        const double L = static_cast<double>(cells);
        double acc = 0.0;
        for (std::size_t c = 0; c < cells; ++c)
          acc += detail::xlogy_ratio((pc(c) + a) / (np + a * L), (qc(c) + a) / (nq + a * L));
        return std::max(0.0, acc);
      };
      return opt.kl_reverse ? kl(after, before, n_after, n_before) : kl(before, after, n_before, n_after);
    }
  }
  return 0.0;
}

inline double divergence(const MetricOptions& opt, const CellHistogram& before, const CellHistogram& after) {
  detail::require_same_cells(before.cells(), after.cells());
  return divergence_from_counts(
      opt, before.cells(), [&](std::size_t c) { return static_cast<double>(before.counts[c]); },
      [&](std::size_t c) { return static_cast<double>(after.counts[c]); }, static_cast<double>(before.total),
      static_cast<double>(after.total));
}

// Per-cell prefix counts over the arrival order of a window. Row k holds, for
// every cell, the number of the first k samples (by time) that fall into it.
class CumulativeHistogram {
 public:
  CumulativeHistogram() = default;

  CumulativeHistogram(std::span<const std::uint32_t> cell_of_sample, std::size_t cells, std::vector<double> timestamps)
      : cells_(cells), n_(cell_of_sample.size()), timestamps_(std::move(timestamps)) {
    if (timestamps_.size() != n_) throw ParameterError("cell assignment and timestamps differ in length");
    if (!std::is_sorted(timestamps_.begin(), timestamps_.end()))
      throw ParameterError("timestamps must be sorted by arrival");
    prefix_.assign((n_ + 1) * cells_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto c = cell_of_sample[i];
      if (c >= cells_) throw InvariantViolation("cell index out of range");
      std::copy_n(prefix_.begin() + static_cast<std::ptrdiff_t>(i * cells_), cells_,
                  prefix_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cells_));
      ++prefix_[(i + 1) * cells_ + c];
    }
  }

  // Builds from any cell map exposing cell_of(x) and cell_count().
  template <class CellMap>
  static CumulativeHistogram build(const CellMap& partition, const Window& w) {
    std::vector<std::uint32_t> cells(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) cells[i] = static_cast<std::uint32_t>(partition.cell_of(w.x(i)));
    return CumulativeHistogram(cells, partition.cell_count(), w.timestamps());
  }

  std::size_t cells() const noexcept { return cells_; }
  std::size_t size() const noexcept { return n_; }
  const std::vector<double>& timestamps() const noexcept { return timestamps_; }

  std::size_t rank_of(double t) const {
    return static_cast<std::size_t>(std::upper_bound(timestamps_.begin(), timestamps_.end(), t) - timestamps_.begin());
  }

  std::uint32_t prefix(std::size_t k, std::size_t c) const { return prefix_[k * cells_ + c]; }

  // Histograms of the first k and the remaining n-k samples.
  std::pair<CellHistogram, CellHistogram> histograms_at_rank(std::size_t k) const {
    if (k == 0 || k >= n_) throw InvalidSplit("split leaves an empty side");
    CellHistogram b, a;
    b.counts.resize(cells_);
    a.counts.resize(cells_);
    for (std::size_t c = 0; c < cells_; ++c) {
      b.counts[c] = prefix(k, c);
      a.counts[c] = prefix(n_, c) - b.counts[c];
    }
    b.total = k;
    a.total = n_ - k;
    return {std::move(b), std::move(a)};
  }

  std::pair<CellHistogram, CellHistogram> histograms_at(const SplitPoint& split) const {
    return histograms_at_rank(rank_of(split.t));
  }

  // Divergence at rank k without materializing the histograms.
  double divergence_at_rank(std::size_t k, const MetricOptions& opt) const {
    if (k == 0 || k >= n_) throw InvalidSplit("split leaves an empty side");
    const std::uint32_t* row = prefix_.data() + k * cells_;
    const std::uint32_t* last = prefix_.data() + n_ * cells_;
    return divergence_from_counts(
        opt, cells_, [row](std::size_t c) { return static_cast<double>(row[c]); },
        [row, last](std::size_t c) { return static_cast<double>(last[c] - row[c]); }, static_cast<double>(k),
        static_cast<double>(n_ - k));
  }

 private:
  std::size_t cells_ = 0;
  std::size_t n_ = 0;
  std::vector<double> timestamps_;
  std::vector<std::uint32_t> prefix_;
};

}  // namespace driftlab
