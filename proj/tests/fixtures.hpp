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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "driftlab/random.hpp"
#include "driftlab/stream.hpp"

namespace fixtures {

// Window with n samples of dimension d, features U[0,1), distinct uniform timestamps.
inline driftlab::Window uniform_window(std::size_t n, std::size_t d, std::uint64_t seed) {
  auto rng = driftlab::make_rng(seed);
  std::vector<driftlab::TimedSample> s;
  for (std::size_t i = 0; i < n; ++i) {
    driftlab::Vector x(d);
    for (auto& v : x) v = driftlab::uniform01(rng);
    s.push_back({x, driftlab::uniform01(rng)});
  }
  return driftlab::Window(std::move(s));
}

// Two blocks: before t0 features centered at 0, after t0 centered at `shift`.
inline driftlab::Window shifted_window(std::size_t n, std::size_t d, double shift, double t0, std::uint64_t seed) {
  auto rng = driftlab::make_rng(seed);
  std::vector<driftlab::TimedSample> s;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = driftlab::uniform01(rng);
    driftlab::Vector x(d);
    for (auto& v : x) v = driftlab::std_normal(rng) + (t > t0 ? shift : 0.0);
    s.push_back({x, t});
  }
  return driftlab::Window(std::move(s));
}

// Samples with integer feature values, which forces ties and collapsed edges.
inline driftlab::Window lattice_window(std::size_t n, std::size_t d, int levels, std::uint64_t seed) {
  auto rng = driftlab::make_rng(seed);
  std::vector<driftlab::TimedSample> s;
  for (std::size_t i = 0; i < n; ++i) {
    driftlab::Vector x(d);
    for (auto& v : x) v = static_cast<double>(driftlab::uniform_index(rng, static_cast<std::size_t>(levels)));
    s.push_back({x, static_cast<double>(driftlab::uniform_index(rng, 40)) / 39.0});
  }
  return driftlab::Window(std::move(s));
}

}  // namespace fixtures
