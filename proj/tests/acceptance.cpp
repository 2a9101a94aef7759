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

// Acceptance gate: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "driftlab.hpp"

using namespace driftlab;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " MISS[" << what << "]";
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

using Tables = std::map<std::string, std::map<std::string, TableCell>>;

Tables build_tables() {
  const std::vector<std::string> datasets{"stagger", "rhp", "sea", "rbf"};
  const auto cells = reproduce_tables(datasets, table_families(), 200, 100, 20260501);
  Tables t;
  for (const auto& c : cells) t[c.dataset][c.family] = c;
  std::cout << "# tables (dataset family chosen p_perm p_thre p_pa3 p_pa12)\n";
  for (const auto& c : cells) {
    std::cout << "#   " << c.dataset << " " << c.family << " " << c.chosen << " ";
    if (c.result.failed) {
      std::cout << "failed: " << c.result.message << "\n";
      continue;
    }
    std::cout << fmt(c.result.p_perm) << " " << fmt(c.result.p_thre) << " " << fmt(pa_at(c.result, 0.03)) << " "
              << fmt(pa_at(c.result, 0.12)) << "\n";
  }
  return t;
}

const ResultRow& row(const Tables& t, const std::string& ds, const std::string& fam) {
  return t.at(ds).at(fam).result;
}

Outcome criterion1(const Tables& t) {
  Outcome o;
  for (const char* f : {"RF", "RndPj", "RndTree", "Marg", "MMD"}) {
    const auto& r = row(t, "stagger", f);
    o.detail << " " << f << ".perm=" << fmt(r.p_perm);
    o.require(!r.failed && r.p_perm >= 0.95, std::string(f) + " p_perm>=0.95");
  }
  for (const char* f : {"RF", "RndTree"}) {
    const auto& r = row(t, "stagger", f);
    o.detail << " " << f << ".thre=" << fmt(r.p_thre);
    o.require(!r.failed && r.p_thre >= 0.85, std::string(f) + " p_thre>=0.85");
  }
  return o;
}

Outcome criterion2(const Tables& t) {
  Outcome o;
  const auto& m = row(t, "rhp", "Marg");
  o.detail << " Marg=" << fmt(m.p_perm);
  o.require(!m.failed && m.p_perm >= 0.38 && m.p_perm <= 0.62, "Marg in [0.38,0.62]");
  for (const char* f : {"RndPj", "RndTree"}) {
    const auto& r = row(t, "rhp", f);
    o.detail << " " << f << "=" << fmt(r.p_perm);
    o.require(!r.failed && r.p_perm >= 0.90, std::string(f) + ">=0.90");
  }
  return o;
}

Outcome criterion3(const Tables& t) {
  Outcome o;
  for (const auto& [fam, cell] : t.at("sea")) {
    const auto& r = cell.result;
    o.detail << " " << fam << "=" << fmt(r.p_perm);
    o.require(!r.failed && r.p_perm <= 0.75, fam + "<=0.75");
  }
  for (const char* f : {"RndTree", "Marg"})
    o.require(row(t, "sea", f).p_perm >= 0.50, std::string(f) + ">=0.50");
  return o;
}

Outcome criterion4(const Tables& t) {
  Outcome o;
  for (const char* f : {"RndTree", "RF"}) {
    const double v = pa_at(row(t, "stagger", f), 0.12);
    o.detail << " stagger." << f << ".pa12=" << fmt(v);
    o.require(v >= 0.90, std::string(f) + " p_pa(12%)>=0.90");
  }
  std::size_t cells = 0, violations = 0;
  std::ostringstream which;
  for (const auto& [ds, fams] : t)
    for (const auto& [fam, cell] : fams) {
      if (cell.result.failed) continue;
      ++cells;
      const double a = pa_at(cell.result, 0.03), b = pa_at(cell.result, 0.12);
      if (b < a) {
        ++violations;
        which << " " << ds << "/" << fam << "(" << fmt(a) << ">" << fmt(b) << ")";
      }
    }
  o.detail << " monotonicity violations " << violations << "/" << cells << which.str();
  o.require(static_cast<double>(violations) <= 0.05 * static_cast<double>(cells), "violations<=5% of cells");
  return o;
}

Outcome criterion5() {
  Outcome o;
  auto rng = make_rng(5005);
  double worst = 0.0;
  std::size_t done = 0;
  while (done < 500) {
    const std::size_t n = 2 + uniform_index(rng, 299);
    const std::size_t d = 1 + uniform_index(rng, 4);
    std::vector<TimedSample> s;
    const double shift = uniform01(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = uniform01(rng);
      Vector x(d);
      for (auto& v : x) v = std_normal(rng) + (t > 0.5 ? shift : 0.0);
      s.push_back({x, t});
    }
    const Window w(std::move(s));
    const std::size_t k = 1 + uniform_index(rng, n - 1);
    if (w.t(k - 1) == w.t(k)) continue;
    const SplitPoint split{w.t(k - 1), true};
    auto check = [&](const auto& part) {
      if (part.cell_count() > 10) return false;
      const double tv = CumulativeHistogram::build(part, w).divergence_at_rank(k, {});
      worst = std::max(worst, std::abs(classifier_tv_oracle(part, w, split) - 0.5 * tv));
      return true;
    };
    bool ok = false;
    switch (done % 3) {
      case 0: {
        RandomTreeConfig cfg;
        cfg.n_leaves = 2 + uniform_index(rng, 9);
        cfg.min_leaf = 1;
        ok = check(build_random_tree(w, cfg, done));
        break;
      }
      case 1: {
        KdqConfig cfg;
        cfg.min_count = std::max<std::size_t>(2, n / 4);
        cfg.max_depth = 3;
        ok = check(build_kdq_tree(w, cfg));
        break;
      }
      default:
        ok = check(build_marginal(w, 2 + uniform_index(rng, 8), done % 2 ? EdgeMode::Equilikely : EdgeMode::Equidistant)[0]);
    }
    done += ok;
  }
  o.detail << " triples=500 max|oracle-TV/2|=" << worst;
  o.require(worst <= 1e-12, "within 1e-12");
  return o;
}

Outcome criterion6() {
  Outcome o;
  // (a) biased MMD against a naive double loop
  double worst_mmd = 0.0;
  for (std::uint64_t f = 0; f < 100; ++f) {
    auto rng = make_rng(derive_seed(606, {f}));
    const std::size_t n = 4 + uniform_index(rng, 120), d = 1 + uniform_index(rng, 5);
    std::vector<TimedSample> s;
    for (std::size_t i = 0; i < n; ++i) {
      Vector x(d);
      const double t = uniform01(rng);
      for (auto& v : x) v = std_normal(rng) + (t > 0.5 ? 0.8 : 0.0);
      s.push_back({x, t});
    }
    const Window w(std::move(s));
    const std::size_t k = 1 + uniform_index(rng, n - 1);
    const KernelGram g(w);
    const double h = 1.0 / (2.0 * g.sigma() * g.sigma());
    double xx = 0, yy = 0, xy = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double dd = 0;
        for (std::size_t c = 0; c < d; ++c) dd += (w.x(i)[c] - w.x(j)[c]) * (w.x(i)[c] - w.x(j)[c]);
        const double kv = std::exp(-dd * h);
        if (i < k && j < k) xx += kv;
        else if (i >= k && j >= k) yy += kv;
        else if (i < k) xy += kv;
      }
    const double m = static_cast<double>(k), l = static_cast<double>(n - k);
    const double naive = std::sqrt(std::max(0.0, xx / (m * m) + yy / (l * l) - 2 * xy / (m * l)));
    worst_mmd = std::max(worst_mmd, std::abs(naive - g.mmd_at_rank(k)));
  }
  o.detail << " mmd max|diff|=" << worst_mmd;
  o.require(worst_mmd <= 1e-10, "MMD within 1e-10");

  // (b) cumulative histogram against a recount on every split
  std::size_t mismatches = 0, splits = 0;
  for (std::uint64_t f = 0; f < 100; ++f) {
    auto rng = make_rng(derive_seed(607, {f}));
    const std::size_t n = 2 + uniform_index(rng, 400), d = 1 + uniform_index(rng, 3);
    std::vector<TimedSample> s;
    for (std::size_t i = 0; i < n; ++i) {
      Vector x(d);
      for (auto& v : x) v = uniform01(rng);
      s.push_back({x, static_cast<double>(uniform_index(rng, n)) / static_cast<double>(n)});
    }
    const Window w(std::move(s));
    RandomTreeConfig cfg;
    cfg.n_leaves = 2 + uniform_index(rng, 30);
    cfg.min_leaf = 1;
    const auto tree = build_random_tree(w, cfg, f);
    const auto h = CumulativeHistogram::build(tree, w);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (w.t(i) == w.t(i + 1)) continue;
      ++splits;
      std::vector<std::uint32_t> b(tree.cell_count(), 0), a(tree.cell_count(), 0);
      for (const auto& smp : w) (smp.t <= w.t(i) ? b : a)[tree.cell_of(smp.x)]++;
      auto [hb, ha] = h.histograms_at(SplitPoint{w.t(i), true});
      const auto rb = CellHistogram::from_counts(b), ra = CellHistogram::from_counts(a);
      mismatches += !(hb == rb && ha == ra && h.divergence_at_rank(i + 1, {}) == divergence({}, rb, ra));
    }
  }
  o.detail << " cumhist mismatches=" << mismatches << "/" << splits;
  o.require(mismatches == 0, "cumulative histogram bit-exact");

  // (c) kNN-KL on N(0,1) vs N(3,1)
  auto rng = make_rng(608);
  std::vector<TimedSample> s;
  const std::size_t n = 2000;
  for (std::size_t i = 0; i < n; ++i) s.push_back({{std_normal(rng)}, 0.5 * static_cast<double>(i + 1) / n});
  for (std::size_t i = 0; i < n; ++i) s.push_back({{3.0 + std_normal(rng)}, 0.5 + 0.5 * static_cast<double>(i + 1) / n});
  const Window w(std::move(s));
  const double kl = knn_kl_at_rank(NeighborGraph(w, 5), w, n, 5);
  o.detail << " knnKL=" << fmt(kl) << " (closed form 4.5)";
  o.require(std::abs(kl - 4.5) <= 0.25 * 4.5, "kNN-KL within 25%");
  return o;
}

Outcome criterion7() {
  Outcome o;
  const std::vector<std::string> estimators{"rf:trees=16", "randproj", "marginal", "randtree", "mmd", "ldd", "kdq"};
  const std::vector<std::string> datasets{"sea:before=0,after=0", "stagger:before=1,after=1"};
  for (const auto& id : estimators) {
    const auto e = make_estimator(id);
    std::size_t worst = 0;
    for (const auto& ds : datasets) {
      std::size_t alarms = 0;
      for (std::uint64_t r = 0; r < 200; ++r) {
        const auto data = make_dataset(DatasetSpec::parse(ds), r);
        const auto pw = make_paired(data.pair.before, data.pair.after, 150, 0.5, 0.0, derive_seed(707, {r}));
        const auto v = detect(e, pw.drifting, derive_seed(708, {r}), PermutationOptions{});
        alarms += *v.p_value <= 0.05;
      }
      worst = std::max(worst, alarms);
    }
    o.detail << " " << id << "=" << fmt(worst / 200.0);
    o.require(worst <= 20, id + " false alarms <= 10%");
  }
  return o;
}

Outcome criterion8() {
  Outcome o;
  using clock = std::chrono::steady_clock;
  const std::vector<std::string> estimators{"marginal", "randproj", "grid", "randtree", "kdq", "rf:trees=16"};
  for (const auto& id : estimators) {
    const auto e = make_estimator(id);
    std::vector<double> per_split;
    for (std::size_t n : {200, 2000, 20000}) {
      auto rng = make_rng(800 + n);
      std::vector<TimedSample> s;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = uniform01(rng);
        s.push_back({{uniform01(rng) + (t > 0.5), uniform01(rng), std_normal(rng)}, t});
      }
      const Window w(std::move(s));
      const auto d = e.fit(w, 3);
      // same number of evaluations at every n, spread evenly over the window
      const std::size_t evals = 20000;
      double sink = 0.0;
      const auto t0 = clock::now();
      for (std::size_t q = 0; q < evals; ++q) sink += d->statistic_at_rank(1 + (q * 7919) % (n - 1));
      const double dt = std::chrono::duration<double>(clock::now() - t0).count() / evals;
      if (sink < 0) std::cout << "";
      per_split.push_back(dt);
    }
    const double ratio = *std::max_element(per_split.begin(), per_split.end()) /
                         *std::min_element(per_split.begin(), per_split.end());
    o.detail << " " << id << "=" << fmt(ratio) << "x";
    o.require(ratio < 3.0, id + " ratio<3");
  }
  return o;
}

Outcome criterion9() {
  Outcome o;
  // x1 separates the sides; within the before side x2 orders time in one
  // version and is shuffled against time in the other.
  auto rng = make_rng(909);
  std::vector<double> x2(60), t_before(60), x2_after(60), t_after(60);
  for (auto& v : x2) v = uniform01(rng);
  for (auto& v : x2_after) v = uniform01(rng);
  for (std::size_t i = 0; i < 60; ++i) {
    t_before[i] = 0.5 * static_cast<double>(i) / 60.0;
    t_after[i] = 0.5 + 0.5 * static_cast<double>(i + 1) / 60.0;
  }
  std::vector<double> sorted_x2 = x2;
  std::sort(sorted_x2.begin(), sorted_x2.end());
  std::vector<std::size_t> shuffled(60);
  std::iota(shuffled.begin(), shuffled.end(), std::size_t{0});
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto make = [&](bool ordered) {
    std::vector<TimedSample> s;
    for (std::size_t i = 0; i < 60; ++i) s.push_back({{0.0, sorted_x2[i]}, t_before[ordered ? i : shuffled[i]]});
    for (std::size_t i = 0; i < 60; ++i) s.push_back({{1.0, x2_after[i]}, t_after[i]});
    return Window(std::move(s));
  };
  const Window a = make(true), b = make(false);
  // the two windows differ only by a time permutation inside S_-(t0)
  const auto [a_before, a_after] = split_window(a, make_split(a, 0.5));
  const auto [b_before, b_after] = split_window(b, make_split(b, 0.5));
  o.require(a_after.samples() == b_after.samples(), "after sides identical");

  const auto ta = fit_moment_tree(a, {}, 1), tb = fit_moment_tree(b, {}, 1);
  const bool tree_changed = !(ta.partition() == tb.partition());
  o.detail << " moment-tree leaves " << ta.cell_count() << " vs " << tb.cell_count()
           << (tree_changed ? " (structure differs)" : " (structure equal)");
  o.require(tree_changed, "moment tree changes");

  std::size_t equal = 0, total = 0;
  auto same = [&](bool eq) {
    ++total;
    equal += eq;
  };
  for (auto mode : {EdgeMode::Equidistant, EdgeMode::Equilikely}) {
    same(build_marginal(a, 8, mode) == build_marginal(b, 8, mode));
    same(build_random_projection(a, 4, 8, mode, 5).axes == build_random_projection(b, 4, 8, mode, 5).axes);
  }
  same(to_json(build_random_tree(a, {}, 5)) == to_json(build_random_tree(b, {}, 5)));
  same(build_kdq_tree(a) == build_kdq_tree(b));
  {
    const auto ga = build_grid(a, 4), gb = build_grid(b, 4);
    same(ga.edges == gb.edges && ga.cells == gb.cells);
  }
  o.detail << " partition descriptors unchanged " << equal << "/" << total;
  o.require(equal == total, "partition descriptors unchanged");
  return o;
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Outcome()>>> gates;
  Tables tables;
  bool have_tables = false;
  auto need_tables = [&]() -> const Tables& {
    if (!have_tables) {
      tables = build_tables();
      have_tables = true;
    }
    return tables;
  };
  gates.emplace_back("1 stagger reproduction", [&] { return criterion1(need_tables()); });
  gates.emplace_back("2 RHP marginal blindness", [&] { return criterion2(need_tables()); });
  gates.emplace_back("3 SEA hardness", [&] { return criterion3(need_tables()); });
  gates.emplace_back("4 precision accuracy", [&] { return criterion4(need_tables()); });
  gates.emplace_back("5 classifier/TV oracle", criterion5);
  gates.emplace_back("6 estimator correctness oracles", criterion6);
  gates.emplace_back("7 null calibration", criterion7);
  gates.emplace_back("8 per-split cost independent of n", criterion8);
  gates.emplace_back("9 arrival-time-respecting witness", criterion9);

  int failed = 0;
  for (auto& [name, fn] : gates) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " exception: " << e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ":" << o.detail.str() << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << "\n";
  return failed ? 1 : 0;
}
