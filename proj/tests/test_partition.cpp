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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "driftlab/estimators.hpp"
#include "driftlab/harness.hpp"
#include "driftlab/partition.hpp"
#include "fixtures.hpp"

using namespace driftlab;
using Catch::Approx;

namespace {

Window line_window(std::vector<double> xs) {
  std::vector<TimedSample> s;
  for (std::size_t i = 0; i < xs.size(); ++i) s.push_back({{xs[i]}, static_cast<double>(i) / xs.size()});
  return Window(std::move(s));
}

// Straightforward recursive kdq reference: count leaves only.
std::size_t kdq_leaves_reference(const Window& w, const KdqConfig& cfg) {
  const std::size_t d = w.dim();
  Vector lo(d, INFINITY), hi(d, -INFINITY);
  for (const auto& s : w)
    for (std::size_t f = 0; f < d; ++f) {
      lo[f] = std::min(lo[f], s.x[f]);
      hi[f] = std::max(hi[f], s.x[f]);
    }
  const Vector extent = [&] {
    Vector e(d);
    for (std::size_t f = 0; f < d; ++f) e[f] = hi[f] - lo[f];
    return e;
  }();
  std::function<std::size_t(std::vector<Vector>, Vector, Vector, std::size_t, std::size_t)> rec =
      [&](std::vector<Vector> pts, Vector a, Vector b, std::size_t next, std::size_t depth) -> std::size_t {
    if (pts.size() < cfg.min_count || depth >= cfg.max_depth) return 1;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t f = (next + k) % d;
      if (extent[f] <= 0.0 || b[f] - a[f] < cfg.min_side * extent[f]) continue;
      const double mid = (a[f] + b[f]) / 2.0;
      std::vector<Vector> l, r;
      for (auto& p : pts) (p[f] <= mid ? l : r).push_back(p);
      Vector lb = b, ra = a;
      lb[f] = mid;
      ra[f] = mid;
      return rec(l, a, lb, (f + 1) % d, depth + 1) + rec(r, ra, b, (f + 1) % d, depth + 1);
    }
    return 1;
  };
  std::vector<Vector> pts;
  for (const auto& s : w) pts.push_back(s.x);
  return rec(pts, lo, hi, 0, 0);
}

std::vector<std::size_t> cell_counts(const TreePartition& t, const Window& w) {
  std::vector<std::size_t> c(t.cell_count(), 0);
  for (const auto& s : w) ++c[t.cell_of(s.x)];
  return c;
}

}  // namespace

TEST_CASE("equidistant edges on [0,1]") {
  auto w = line_window({0.0, 0.1, 0.6, 1.0});
  auto parts = build_marginal(w, 4, EdgeMode::Equidistant);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].edges == std::vector<double>{0.25, 0.5, 0.75});
  CHECK(parts[0].cell_of(std::vector<double>{-5.0}) == 0);
  CHECK(parts[0].cell_of(std::vector<double>{5.0}) == 3);
}

TEST_CASE("equilikely bins hold about a quarter each") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto w = fixtures::uniform_window(100, 1, seed);
    const auto b = build_marginal(w, 4, EdgeMode::Equilikely)[0];
    REQUIRE(b.edges.size() == 3);
    std::vector<int> c(4, 0);
    for (const auto& s : w) ++c[b.cell_of(s.x)];
    // continuous data: cuts land exactly on the quantile positions
    for (int v : c) CHECK(v == 25);
  }
  const auto lat = fixtures::lattice_window(200, 1, 3, 4);
  const auto b = build_marginal(lat, 8, EdgeMode::Equilikely)[0];
  CHECK(b.edges.size() <= 2);
  CHECK(std::is_sorted(b.edges.begin(), b.edges.end()));
  CHECK(std::adjacent_find(b.edges.begin(), b.edges.end()) == b.edges.end());
}

TEST_CASE("one marginal per feature; constant features collapse") {
  const auto w = fixtures::uniform_window(50, 3, 2);
  CHECK(build_marginal(w, 8, EdgeMode::Equidistant).size() == 3);
  auto c = line_window({2.0, 2.0, 2.0});
  const auto b = build_marginal(c, 4, EdgeMode::Equilikely)[0];
  CHECK(b.collapsed);
  CHECK(b.cell_count() == 1);
  CHECK_THROWS_AS(build_marginal(w, 1, EdgeMode::Equidistant), ParameterError);
}

TEST_CASE("random projection axes") {
  const auto w1 = fixtures::uniform_window(80, 1, 3);
  const auto p = build_random_projection(w1, 3, 8, EdgeMode::Equidistant, 17);
  for (const auto& a : p.axes) CHECK(std::abs(a.axis[0]) == Approx(1.0));
  // in 1-D a projection is the marginal up to sign: identical cell sizes
  const auto m = build_marginal(w1, 8, EdgeMode::Equidistant)[0];
  std::vector<int> cm(8, 0), cp(8, 0);
  for (const auto& s : w1) {
    ++cm[m.cell_of(s.x)];
    const auto c = p.axes[0].cell_of(s.x);
    ++cp[p.axes[0].axis[0] > 0 ? c : 7 - c];
  }
  CHECK(cm == cp);

  const auto w = fixtures::uniform_window(80, 5, 3);
  const auto a = build_random_projection(w, 10, 8, EdgeMode::Equilikely, 99);
  const auto b = build_random_projection(w, 10, 8, EdgeMode::Equilikely, 99);
  CHECK(a.axes == b.axes);
  for (const auto& ax : a.axes) {
    double n = 0.0;
    for (double v : ax.axis) n += v * v;
    CHECK(n == Approx(1.0));
    CHECK(std::adjacent_find(ax.edges.begin(), ax.edges.end(), std::greater_equal<>()) == ax.edges.end());
  }
  CHECK_THROWS_AS(build_random_projection(w, 0, 8, EdgeMode::Equilikely, 1), ParameterError);
}

TEST_CASE("projection onto the diagonal separates opposite correlations") {
  const double rho = 0.8;
  auto rng = make_rng(31);
  const std::size_t n = 500;
  std::vector<TimedSample> s;
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const double a = std_normal(rng), b = std_normal(rng);
    const double r = i < n ? rho : -rho;
    s.push_back({{a, r * a + std::sqrt(1 - r * r) * b}, i < n ? 0.25 : 0.75});
  }
  const Window w(std::move(s));
  AxisBinning diag;
  diag.axis = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
  std::vector<double> proj;
  for (const auto& x : w) proj.push_back(diag.project(x.x));
  diag.edges = make_edges(proj, 8, EdgeMode::Equilikely).interior;
  const auto h = CumulativeHistogram::build(diag, w);
  CHECK(h.divergence_at_rank(n, {}) > 0.2);
}

TEST_CASE("marginals are blind to a correlation flip that projections see") {
  auto corr = [](double rho) {
    return ConceptSampler("corr", 2, false, [rho](Rng& rng) {
      const double a = std_normal(rng), b = std_normal(rng);
      return Vector{a, rho * a + std::sqrt(1 - rho * rho) * b};
    });
  };
  const auto before = corr(0.8), after = corr(-0.8);
  const auto marg = make_estimator("marginal:bins=8,edges=equilikely");
  const auto proj = make_estimator("randproj:axes=8,bins=8,edges=equilikely");
  std::vector<EvalRecord> rm, rp;
  for (std::uint64_t r = 0; r < 300; ++r) {
    const auto pw = make_paired(before, after, 150, 0.5, 0.0, derive_seed(5, {r}));
    const auto k = pw.drifting.rank_of(pw.t0);
    for (auto [est, out] : {std::pair{&marg, &rm}, std::pair{&proj, &rp}}) {
      EvalRecord rec;
      rec.drift = {est->fit(pw.drifting, r)->statistic_at_rank(k)};
      rec.perm = {est->fit(pw.permuted, r)->statistic_at_rank(k)};
      out->push_back(rec);
    }
  }
  CHECK(p_perm(rm) >= 0.4);
  CHECK(p_perm(rm) <= 0.6);
  CHECK(p_perm(rp) >= 0.9);
}

TEST_CASE("grid binning") {
  const auto w = fixtures::uniform_window(100, 2, 5);
  const auto g = build_grid(w, 4);
  CHECK(g.cell_count() == 16);
  CHECK_THROWS_AS(build_grid(fixtures::uniform_window(20, 7, 1), 4), IncompatibleError);
}

TEST_CASE("random tree construction invariants") {
  const auto w = fixtures::uniform_window(200, 3, 8);
  const auto t2 = build_random_tree(w, {2, 5, 32, 32}, 4);
  CHECK(t2.leaf_count() == 2);
  CHECK(t2.nodes().size() == 3);

  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RandomTreeConfig cfg;
    cfg.n_leaves = 8 + seed % 25;
    const auto t = build_random_tree(w, cfg, seed);
    CHECK(t.leaf_count() <= cfg.n_leaves);
    CHECK(t.depth() <= cfg.max_depth);
    const auto c = cell_counts(t, w);
    std::size_t total = 0;
    for (auto v : c) {
      CHECK(v >= cfg.min_leaf);
      total += v;
    }
    CHECK(total == w.size());
    CHECK(t == build_random_tree(w, cfg, seed));
    CHECK(to_json(t) == to_json(build_random_tree(w, cfg, seed)));
  }
  CHECK_THROWS_AS(build_random_tree(w, {1, 5, 32, 32}, 1), ParameterError);
}

TEST_CASE("random tree stops when nothing is splittable") {
  const auto w = fixtures::uniform_window(12, 2, 3);
  const auto t = build_random_tree(w, {64, 5, 32, 32}, 2);
  CHECK(t.leaf_count() <= 2);
}

TEST_CASE("kdq tree splits at centers") {
  std::vector<TimedSample> s;
  auto rng = make_rng(4);
  for (int i = 0; i < 400; ++i) s.push_back({{uniform01(rng), uniform01(rng)}, uniform01(rng)});
  s.push_back({{0.0, 0.0}, 0.0});
  s.push_back({{1.0, 1.0}, 1.0});
  const Window w(std::move(s));
  const auto t = build_kdq_tree(w);
  const auto& n = t.nodes();
  REQUIRE(n[0].feature == 0);
  CHECK(n[0].threshold == 0.5);
  CHECK(n[n[0].left].feature == 1);
  CHECK(n[n[0].left].threshold == 0.5);
  CHECK(n[n[0].right].feature == 1);
  CHECK(n[n[0].right].threshold == 0.5);
  CHECK(t == build_kdq_tree(w));
}

TEST_CASE("kdq leaf count matches a recursive reference") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto w = seed % 2 ? fixtures::uniform_window(100 + seed * 20, 1 + seed % 4, seed)
                            : fixtures::lattice_window(150, 2 + seed % 3, 4, seed);
    KdqConfig cfg;
    cfg.min_count = 5 + seed % 10;
    cfg.min_side = seed % 3 == 0 ? 0.2 : 1.0 / 16;
    CHECK(build_kdq_tree(w, cfg).leaf_count() == kdq_leaves_reference(w, cfg));
  }
}

TEST_CASE("partitions serialize deterministically") {
  const auto w = fixtures::uniform_window(60, 2, 9);
  const auto m = build_marginal(w, 4, EdgeMode::Equidistant);
  const auto j = to_json(m[1]);
  CHECK(j["feature"] == 1);
  CHECK(j["edges"].size() == 3);
  CHECK(to_json(build_kdq_tree(w)).dump() == to_json(build_kdq_tree(w)).dump());
}
