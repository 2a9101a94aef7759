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

// Timed samples, windows and the drifting/permuted window pairs used by the
// evaluation protocol. Timestamps live in [0,1]; windows are kept sorted by
// time with ties in input order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftlab/error.hpp"
#include "driftlab/random.hpp"

namespace driftlab {

using Vector = std::vector<double>;

struct TimedSample {
  Vector x;
  double t = 0.0;

  friend bool operator==(const TimedSample&, const TimedSample&) = default;
};

// An ordered sample {(x_i, t_i)}. Immutable after construction.
class Window {
 public:
  Window() = default;

  // Validates timestamps and dimensions, then stable-sorts by t.
  explicit Window(std::vector<TimedSample> samples, bool label_feature_appended = false)
      : samples_(std::move(samples)), label_appended_(label_feature_appended) {
    if (!samples_.empty()) {
      dim_ = samples_.front().x.size();
      if (dim_ == 0) throw DataError("window samples must have dimension >= 1");
    }
    for (const auto& s : samples_) {
      if (s.x.size() != dim_) throw DataError("inconsistent sample dimension in window");
      if (!(s.t >= 0.0 && s.t <= 1.0)) throw DataError("timestamp outside [0,1]");
    }
    std::stable_sort(samples_.begin(), samples_.end(),
                     [](const TimedSample& a, const TimedSample& b) { return a.t < b.t; });
  }

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  bool label_feature_appended() const noexcept { return label_appended_; }

  const TimedSample& operator[](std::size_t i) const { return samples_[i]; }
  std::span<const double> x(std::size_t i) const { return samples_[i].x; }
  double t(std::size_t i) const { return samples_[i].t; }

  const std::vector<TimedSample>& samples() const noexcept { return samples_; }
  auto begin() const noexcept { return samples_.begin(); }
  auto end() const noexcept { return samples_.end(); }

  std::vector<double> timestamps() const {
    std::vector<double> ts;
    ts.reserve(samples_.size());
    for (const auto& s : samples_) ts.push_back(s.t);
    return ts;
  }

  // Number of samples with timestamp <= t, i.e. |S_-(t)|.
  std::size_t rank_of(double t) const {
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double v, const TimedSample& s) { return v < s.t; });
    return static_cast<std::size_t>(it - samples_.begin());
  }

 private:
  std::vector<TimedSample> samples_;
  bool label_appended_ = false;
  std::size_t dim_ = 0;
};

// Minimum number of samples each side of a split must hold.
struct MarginPolicy {
  std::size_t min_count = 25;
  double min_fraction = 0.05;

  std::size_t min_side(std::size_t n) const {
    return std::max(min_count, static_cast<std::size_t>(std::ceil(min_fraction * static_cast<double>(n))));
  }

  static MarginPolicy none() { return MarginPolicy{1, 0.0}; }
};

struct SplitPoint {
  double t = 0.5;
  bool margin_ok = false;
};

inline SplitPoint make_split(const Window& w, double t, const MarginPolicy& margin = {}) {
  const std::size_t k = w.rank_of(t);
  const std::size_t m = margin.min_side(w.size());
  return SplitPoint{t, k >= m && w.size() - k >= m && k > 0 && k < w.size()};
}

// (S_-(t), S_+(t)): samples with t' <= t versus t' > t.
inline std::pair<Window, Window> split_window(const Window& w, const SplitPoint& split) {
  const std::size_t k = w.rank_of(split.t);
  std::vector<TimedSample> before(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<TimedSample> after(w.begin() + static_cast<std::ptrdiff_t>(k), w.end());
  return {Window(std::move(before), w.label_feature_appended()),
          Window(std::move(after), w.label_feature_appended())};
}

// Same x values paired with a uniformly random permutation of the timestamps.
inline Window permute_timestamps(const Window& w, std::uint64_t seed) {
  std::vector<double> ts = w.timestamps();
  Rng rng = make_rng(seed);
  std::shuffle(ts.begin(), ts.end(), rng);
  std::vector<TimedSample> out;
  out.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out.push_back({w[i].x, ts[i]});
  return Window(std::move(out), w.label_feature_appended());
}

// Affine min-max map of raw timestamps onto [0,1]. A constant sequence maps to 0.
inline std::vector<double> rescale_unit(std::span<const double> raw) {
  std::vector<double> out(raw.begin(), raw.end());
  if (out.empty()) return out;
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double a = *lo, b = *hi;
  for (auto& v : out) v = b > a ? std::clamp((v - a) / (b - a), 0.0, 1.0) : 0.0;
  return out;
}

// A concept: i.i.d. draws of feature vectors (label already appended if any).
class ConceptSampler {
 public:
  using DrawFn = std::function<Vector(Rng&)>;

  ConceptSampler() = default;
  ConceptSampler(std::string concept_id, std::size_t dim, bool label_appended, DrawFn draw)
      : id_(std::move(concept_id)), dim_(dim), label_appended_(label_appended), draw_(std::move(draw)) {}

  const std::string& concept_id() const noexcept { return id_; }
  std::size_t dim() const noexcept { return dim_; }
  bool label_appended() const noexcept { return label_appended_; }

  Vector draw_one(Rng& rng) const { return draw_(rng); }

  std::vector<Vector> draw(std::size_t n, std::uint64_t seed) const {
    Rng rng = make_rng(seed);
    std::vector<Vector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(draw_(rng));
    return out;
  }

 private:
  std::string id_;
  std::size_t dim_ = 0;
  bool label_appended_ = false;
  DrawFn draw_;
};

struct PairedWindows {
  Window drifting;
  Window permuted;
  double t0 = 0.5;
  // Affine map from generation time to window time: (t - time_origin) / time_span.
  double time_origin = 0.0;
  double time_span = 1.0;

  double window_time(double generation_time) const { return (generation_time - time_origin) / time_span; }
};

// Sample n points: round(n*t0) from `before` with t ~ U[0,t0], the rest from
// `after` with t ~ U(t0,1]. The oldest round(offset*n) samples are then dropped
// and the remaining timestamps are min-max rescaled to [0,1]; t0 is mapped by
// the same affine map.
inline PairedWindows make_paired(const ConceptSampler& before, const ConceptSampler& after, std::size_t n,
                                 double t0_fraction, double offset_fraction, std::uint64_t seed) {
  if (!(t0_fraction > 0.0 && t0_fraction < 1.0)) throw ParameterError("t0_fraction must lie in (0,1)");
  if (!(offset_fraction >= 0.0 && offset_fraction < t0_fraction))
    throw ParameterError("offset_fraction must lie in [0, t0_fraction)");
  if (before.dim() != after.dim()) throw ParameterError("concept dimensions differ");

  const auto n_before = static_cast<std::size_t>(std::lround(static_cast<double>(n) * t0_fraction));
  const auto n_drop = static_cast<std::size_t>(std::lround(static_cast<double>(n) * offset_fraction));
  if (n_before == 0 || n_before >= n || n_drop >= n_before)
    throw ParameterError("window too small for requested drift position/offset");

  auto xb = before.draw(n_before, derive_seed(seed, {1}));
  auto xa = after.draw(n - n_before, derive_seed(seed, {2}));
  Rng trng = make_rng(derive_seed(seed, {3}));

  std::vector<TimedSample> all;
  all.reserve(n);
  for (auto& x : xb) all.push_back({std::move(x), t0_fraction * uniform01(trng)});
  for (auto& x : xa) {
    // U(t0,1]: reflect the half-open [0,1) draw.
    const double u = 1.0 - uniform01(trng);
    all.push_back({std::move(x), t0_fraction + (1.0 - t0_fraction) * u});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  all.erase(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_drop));

  std::vector<double> raw;
  raw.reserve(all.size());
  for (const auto& s : all) raw.push_back(s.t);
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double a = *lo, b = *hi;
  const auto scaled = rescale_unit(raw);
  for (std::size_t i = 0; i < all.size(); ++i) all[i].t = scaled[i];

  PairedWindows out;
  out.time_origin = a;
  out.time_span = b - a;
  out.t0 = std::clamp(out.window_time(t0_fraction), 0.0, 1.0);
  out.drifting = Window(std::move(all), before.label_appended());
  out.permuted = permute_timestamps(out.drifting, derive_seed(seed, {4}));
  return out;
}

}  // namespace driftlab
