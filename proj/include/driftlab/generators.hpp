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

// Synthetic concept samplers (SEA, STAGGER, rotating hyperplane, random RBF)
// and Gaussian noise augmentation. Class labels are appended as the last
// feature so that real drift shows up as distributional drift.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "driftlab/error.hpp"
#include "driftlab/random.hpp"
#include "driftlab/stream.hpp"

namespace driftlab {

struct ConceptPair {
  ConceptSampler before;
  ConceptSampler after;
  // Set when both concepts are the same and no drift can be expected.
  bool no_drift = false;
};

// SEA thresholds on f1 + f2 for variants 0..3.
inline constexpr std::array<double, 4> kSeaThresholds{8.0, 9.0, 7.0, 9.5};

inline ConceptSampler sea_concept(int variant) {
  if (variant < 0 || variant > 3) throw ParameterError("SEA variant must lie in 0..3");
  const double theta = kSeaThresholds[static_cast<std::size_t>(variant)];
  return ConceptSampler("sea/" + std::to_string(variant), 4, true, [theta](Rng& rng) {
    Vector x(4);
    for (std::size_t i = 0; i < 3; ++i) x[i] = 10.0 * uniform01(rng);
    x[3] = x[0] + x[1] <= theta ? 1.0 : 0.0;
    return x;
  });
}

inline ConceptPair sea_pair(int variant_before, int variant_after) {
  return {sea_concept(variant_before), sea_concept(variant_after), variant_before == variant_after};
}

// STAGGER: size, color, shape with three values each (one-hot, 9 columns) and
// concepts 1: size=small and color=red; 2: color=green or shape=circle;
// 3: size=medium or size=large.
inline ConceptSampler stagger_concept(int concept_id) {
  if (concept_id < 1 || concept_id > 3) throw ParameterError("STAGGER concept must lie in 1..3");
  return ConceptSampler("stagger/" + std::to_string(concept_id), 10, true, [concept_id](Rng& rng) {
    const auto size = uniform_index(rng, 3), color = uniform_index(rng, 3), shape = uniform_index(rng, 3);
    Vector x(10, 0.0);
    x[size] = 1.0;
    x[3 + color] = 1.0;
    x[6 + shape] = 1.0;
    bool label = false;
    switch (concept_id) {
      case 1: label = size == 0 && color == 0; break;   // small, red
      case 2: label = color == 1 || shape == 0; break;  // green, circle
      case 3: label = size == 1 || size == 2; break;    // medium, large
    }
    x[9] = label ? 1.0 : 0.0;
    return x;
  });
}

inline ConceptPair stagger_pair(int concept_before, int concept_after) {
  return {stagger_concept(concept_before), stagger_concept(concept_after), concept_before == concept_after};
}

namespace detail {

inline ConceptSampler hyperplane_concept(std::string id, Vector w) {
  const std::size_t d = w.size();
  double wbar = 0.0;
  for (double v : w) wbar += 0.5 * v;
  return ConceptSampler(std::move(id), d + 1, true, [w = std::move(w), wbar, d](Rng& rng) {
    Vector x(d + 1);
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = uniform01(rng);
      s += w[i] * x[i];
    }
    x[d] = s >= wbar ? 1.0 : 0.0;
    return x;
  });
}

}  // namespace detail

// Rotating hyperplane: x ~ U[0,1]^d, label = 1[w.x >= sum(w)/2]. The after
// concept rotates w by `angle` inside a random 2-plane containing w, so the
// boundary keeps passing through the cube center and feature marginals and
// class balance are unchanged.
inline ConceptPair rhp_pair(std::size_t d, double angle, std::uint64_t seed) {
  if (d < 2) throw ParameterError("rotating hyperplane needs d >= 2");
  Rng rng = make_rng(seed);
  Vector w(d);
  double norm = 0.0;
  for (auto& v : w) v = uniform01(rng) + 0.1;
  for (double v : w) norm += v * v;
  norm = std::sqrt(norm);
  for (auto& v : w) v /= norm;
  // Random unit direction orthogonal to w.
  Vector u(d);
  double un = 0.0;
  while (un < 1e-8) {
    for (auto& v : u) v = std_normal(rng);
    double proj = 0.0;
    for (std::size_t i = 0; i < d; ++i) proj += u[i] * w[i];
    for (std::size_t i = 0; i < d; ++i) u[i] -= proj * w[i];
    un = 0.0;
    for (double v : u) un += v * v;
    un = std::sqrt(un);
  }
  for (auto& v : u) v /= un;
  Vector w2(d);
  for (std::size_t i = 0; i < d; ++i) w2[i] = std::cos(angle) * w[i] + std::sin(angle) * u[i];
  return {detail::hyperplane_concept("rhp/0", w), detail::hyperplane_concept("rhp/" + std::to_string(angle), w2),
          angle == 0.0};
}

struct RbfMixture {
  std::vector<Vector> centers;
  std::vector<double> weights;  // normalized
  std::vector<double> scales;
  std::vector<int> labels;
};

inline RbfMixture make_rbf_mixture(std::size_t d, std::size_t n_centroids, std::uint64_t seed) {
  if (d < 1 || n_centroids < 1) throw ParameterError("RBF needs d >= 1 and at least one centroid");
  Rng rng = make_rng(seed);
  RbfMixture m;
  double total = 0.0;
  for (std::size_t c = 0; c < n_centroids; ++c) {
    Vector center(d);
    for (auto& v : center) v = uniform01(rng);
    m.centers.push_back(std::move(center));
    m.labels.push_back(static_cast<int>(uniform_index(rng, 2)));
    m.scales.push_back(uniform01(rng));
    m.weights.push_back(uniform01(rng));
    total += m.weights.back();
  }
  for (auto& w : m.weights) w /= total;
  return m;
}

inline ConceptSampler rbf_concept(std::string id, RbfMixture mix) {
  const std::size_t d = mix.centers.front().size();
  auto shared = std::make_shared<const RbfMixture>(std::move(mix));
  return ConceptSampler(std::move(id), d + 1, true, [shared, d](Rng& rng) {
    const auto& m = *shared;
    double u = uniform01(rng), acc = 0.0;
    std::size_t c = 0;
    for (; c + 1 < m.weights.size(); ++c) {
      acc += m.weights[c];
      if (u < acc) break;
    }
    // Random direction, Gaussian magnitude scaled by the centroid's spread.
    Vector dir(d);
    double norm = 0.0;
    while (norm == 0.0) {
      for (auto& v : dir) v = 2.0 * uniform01(rng) - 1.0;
      norm = 0.0;
      for (double v : dir) norm += v * v;
      norm = std::sqrt(norm);
    }
    const double mag = std_normal(rng) * m.scales[c];
    Vector x(d + 1);
    for (std::size_t i = 0; i < d; ++i) x[i] = m.centers[c][i] + dir[i] / norm * mag;
    x[d] = m.labels[c];
    return x;
  });
}

// Same generator family; the after concept redraws all centroids.
inline ConceptPair rbf_pair(std::size_t d, std::size_t n_centroids, std::uint64_t seed) {
  return {rbf_concept("rbf/0", make_rbf_mixture(d, n_centroids, derive_seed(seed, {0}))),
          rbf_concept("rbf/1", make_rbf_mixture(d, n_centroids, derive_seed(seed, {1}))), false};
}

// Adds extra_dims i.i.d. N(0, sigma^2) coordinates after the concept's
// features. An appended label stays the last coordinate.
inline ConceptSampler with_noise(const ConceptSampler& base, std::size_t extra_dims, double sigma = 1.0) {
  if (extra_dims == 0) return base;
  return ConceptSampler(base.concept_id() + "+noise" + std::to_string(extra_dims), base.dim() + extra_dims,
                        base.label_appended(), [base, extra_dims, sigma](Rng& rng) {
                          Vector x = base.draw_one(rng);
                          const auto at = base.label_appended() ? x.end() - 1 : x.end();
                          Vector noise(extra_dims);
                          for (auto& v : noise) v = sigma * std_normal(rng);
                          x.insert(at, noise.begin(), noise.end());
                          return x;
                        });
}

inline ConceptPair with_noise(const ConceptPair& pair, std::size_t extra_dims, double sigma = 1.0) {
  return {with_noise(pair.before, extra_dims, sigma), with_noise(pair.after, extra_dims, sigma), pair.no_drift};
}

}  // namespace driftlab
