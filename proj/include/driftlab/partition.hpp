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

// Data-space partitions used as binning descriptors: marginal, grid and
// random-projection binnings, random trees and kdq-trees.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftlab/error.hpp"
#include "driftlab/random.hpp"
#include "driftlab/stream.hpp"

namespace driftlab {

enum class EdgeMode { Equidistant, Equilikely };

inline std::string edge_mode_name(EdgeMode m) { return m == EdgeMode::Equidistant ? "equidistant" : "equilikely"; }

inline EdgeMode parse_edge_mode(const std::string& s) {
  if (s == "equidistant" || s == "eqd") return EdgeMode::Equidistant;
  if (s == "equilikely" || s == "eql") return EdgeMode::Equilikely;
  throw ParameterError("unknown edge mode '" + s + "'");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Interior bin edges for a 1-D sample. `collapsed` is set when the sample is
// constant and no edge can be placed.
struct Edges {
  std::vector<double> interior;
  bool collapsed = false;
};

inline Edges make_edges(std::vector<double> values, std::size_t bins, EdgeMode mode) {
  if (bins < 2) throw ParameterError("bins_per_dim must be >= 2");
  Edges out;
  if (values.empty()) {
    out.collapsed = true;
    return out;
  }
  std::sort(values.begin(), values.end());
  const double lo = values.front(), hi = values.back();
  if (!(hi > lo)) {
    out.collapsed = true;
    return out;
  }
  if (mode == EdgeMode::Equidistant) {
    for (std::size_t i = 1; i < bins; ++i)
      out.interior.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins));
    return out;
  }
  // Equilikely: cut at the gap between distinct values nearest to each
  // quantile position, so tied values never straddle an edge.
  const std::size_t n = values.size();
  std::vector<std::size_t> gaps;
  for (std::size_t j = 1; j < n; ++j)
    if (values[j - 1] < values[j]) gaps.push_back(j);
  for (std::size_t i = 1; i < bins; ++i) {
    const double target = static_cast<double>(i) * static_cast<double>(n) / static_cast<double>(bins);
    auto it = std::lower_bound(gaps.begin(), gaps.end(), target,
                               [](std::size_t g, double v) { return static_cast<double>(g) < v; });
    std::size_t best;
    if (it == gaps.end()) {
      best = gaps.back();
    } else if (it == gaps.begin()) {
      best = *it;
    } else {
      const std::size_t a = *(it - 1), b = *it;
      best = (target - static_cast<double>(a) <= static_cast<double>(b) - target) ? a : b;
    }
    out.interior.push_back(0.5 * (values[best - 1] + values[best]));
  }
  out.interior.erase(std::unique(out.interior.begin(), out.interior.end()), out.interior.end());
  return out;
}

// A 1-D binning of either one coordinate (feature >= 0) or a projection axis.
struct AxisBinning {
  int feature = -1;
  Vector axis;
  std::vector<double> edges;
  bool collapsed = false;
  std::string provenance;

  double project(std::span<const double> x) const {
    return feature >= 0 ? x[static_cast<std::size_t>(feature)] : dot(axis, x);
  }
  std::size_t cell_of(std::span<const double> x) const {
    const double v = project(x);
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
  }
  std::size_t cell_count() const noexcept { return edges.size() + 1; }

  friend bool operator==(const AxisBinning&, const AxisBinning&) = default;
};

inline nlohmann::json to_json(const AxisBinning& b) {
  nlohmann::json j;
  j["type"] = "axis_binning";
  j["provenance"] = b.provenance;
  if (b.feature >= 0) j["feature"] = b.feature;
  else j["axis"] = b.axis;
  j["edges"] = b.edges;
  j["collapsed"] = b.collapsed;
  return j;
}

namespace detail {

inline std::vector<double> column(const Window& w, std::size_t f) {
  std::vector<double> v;
  v.reserve(w.size());
  for (const auto& s : w) v.push_back(s.x[f]);
  return v;
}

}  // namespace detail

// One binning per feature (projections onto the coordinate axes).
inline std::vector<AxisBinning> build_marginal(const Window& w, std::size_t bins_per_dim, EdgeMode mode) {
  if (w.empty()) throw DataError("cannot build a binning on an empty window");
  std::vector<AxisBinning> out;
  for (std::size_t f = 0; f < w.dim(); ++f) {
    auto e = make_edges(detail::column(w, f), bins_per_dim, mode);
    AxisBinning b;
    b.feature = static_cast<int>(f);
    b.edges = std::move(e.interior);
    b.collapsed = e.collapsed;
    b.provenance = "marginal/" + edge_mode_name(mode) + "/" + std::to_string(bins_per_dim);
    out.push_back(std::move(b));
  }
  return out;
}

struct ProjectionBinning {
  std::vector<AxisBinning> axes;
  std::uint64_t seed = 0;
};

// Axes w ~ N(0, I) normalized to unit length, then binned as the marginals.
inline ProjectionBinning build_random_projection(const Window& w, std::size_t n_axes, std::size_t bins_per_axis,
                                                 EdgeMode mode, std::uint64_t seed) {
  if (n_axes < 1) throw ParameterError("n_axes must be >= 1");
  if (w.empty()) throw DataError("cannot build a binning on an empty window");
  Rng rng = make_rng(seed);
  ProjectionBinning pb;
  pb.seed = seed;
  for (std::size_t a = 0; a < n_axes; ++a) {
    Vector axis(w.dim());
    double norm = 0.0;
    while (norm == 0.0) {
      for (auto& v : axis) v = std_normal(rng);
      norm = std::sqrt(dot(axis, axis));
    }
    for (auto& v : axis) v /= norm;
    std::vector<double> proj;
    proj.reserve(w.size());
    for (const auto& s : w) proj.push_back(dot(axis, s.x));
    auto e = make_edges(std::move(proj), bins_per_axis, mode);
    AxisBinning b;
    b.axis = std::move(axis);
    b.edges = std::move(e.interior);
    b.collapsed = e.collapsed;
    b.provenance = "random_projection/" + edge_mode_name(mode) + "/" + std::to_string(bins_per_axis);
    pb.axes.push_back(std::move(b));
  }
  return pb;
}

// Full product grid of equidistant bins; refuses grids above max_cells.
struct GridBinning {
  std::vector<std::vector<double>> edges;
  std::vector<std::size_t> stride;
  std::size_t cells = 1;

  std::size_t cell_of(std::span<const double> x) const {
    std::size_t c = 0;
    for (std::size_t f = 0; f < edges.size(); ++f) {
      const auto b = static_cast<std::size_t>(std::upper_bound(edges[f].begin(), edges[f].end(), x[f]) - edges[f].begin());
      c += b * stride[f];
    }
    return c;
  }
  std::size_t cell_count() const noexcept { return cells; }
};

inline GridBinning build_grid(const Window& w, std::size_t bins_per_dim, std::size_t max_cells = 4096) {
  if (w.empty()) throw DataError("cannot build a binning on an empty window");
  GridBinning g;
  for (std::size_t f = 0; f < w.dim(); ++f) {
    auto e = make_edges(detail::column(w, f), bins_per_dim, EdgeMode::Equidistant);
    g.stride.push_back(g.cells);
    const std::size_t k = e.interior.size() + 1;
    if (g.cells > max_cells / k) throw IncompatibleError("grid binning would exceed " + std::to_string(max_cells) + " cells");
    g.cells *= k;
    g.edges.push_back(std::move(e.interior));
  }
  return g;
}

// Binary tree over the data space; leaves are the cells. Samples with
// x[feature] <= threshold descend left.
class TreePartition {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0, right = 0;
    std::uint32_t leaf = 0;
    std::uint32_t depth = 0;

    friend bool operator==(const Node&, const Node&) = default;
  };

  TreePartition() { nodes_.push_back(Node{}); leaves_ = 1; }

  std::size_t cell_of(std::span<const double> x) const {
    std::uint32_t i = 0;
    while (nodes_[i].feature >= 0) {
      const auto& n = nodes_[i];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[i].leaf;
  }
  std::size_t cell_count() const noexcept { return leaves_; }
  std::size_t leaf_count() const noexcept { return leaves_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  std::size_t depth() const {
    std::uint32_t d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.depth);
    return d;
  }

  // Turns leaf node `i` into an internal node; returns (left, right) node ids.
  std::pair<std::uint32_t, std::uint32_t> split(std::uint32_t i, int feature, double threshold) {
    if (nodes_.at(i).feature >= 0) throw InvariantViolation("splitting an internal node");
    const auto l = static_cast<std::uint32_t>(nodes_.size());
    const auto r = l + 1;
    const std::uint32_t depth = nodes_[i].depth + 1;
    nodes_.push_back(Node{-1, 0.0, 0, 0, 0, depth});
    nodes_.push_back(Node{-1, 0.0, 0, 0, 0, depth});
    nodes_[i].feature = feature;
    nodes_[i].threshold = threshold;
    nodes_[i].left = l;
    nodes_[i].right = r;
    renumber();
    return {l, r};
  }

  std::string provenance;

  friend bool operator==(const TreePartition& a, const TreePartition& b) { return a.nodes_ == b.nodes_; }

 private:
  // Leaves are numbered in node order.
  void renumber() {
    leaves_ = 0;
    for (auto& n : nodes_)
      if (n.feature < 0) n.leaf = static_cast<std::uint32_t>(leaves_++);
  }

  std::vector<Node> nodes_;
  std::size_t leaves_ = 0;
};

inline nlohmann::json to_json(const TreePartition& t) {
  nlohmann::json j;
  j["type"] = "tree_partition";
  j["provenance"] = t.provenance;
  j["leaves"] = t.leaf_count();
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const auto& n : t.nodes()) {
    if (n.feature < 0) nodes.push_back({{"leaf", n.leaf}, {"depth", n.depth}});
    else
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                       {"depth", n.depth}});
  }
  return j;
}

struct RandomTreeConfig {
  std::size_t n_leaves = 16;
  std::size_t min_leaf = 5;
  std::size_t max_depth = 32;
  std::size_t attempts_per_leaf = 32;
};

// Repeatedly split a uniformly chosen splittable leaf on a uniformly chosen
// feature at a threshold uniform on that leaf's observed range.
inline TreePartition build_random_tree(const Window& w, const RandomTreeConfig& cfg, std::uint64_t seed) {
  if (cfg.n_leaves < 2) throw ParameterError("n_leaves must be >= 2");
  if (w.empty()) throw DataError("cannot build a tree on an empty window");
  Rng rng = make_rng(seed);
  TreePartition tree;
  tree.provenance = "random_tree/" + std::to_string(cfg.n_leaves) + "/seed=" + std::to_string(seed);

  struct Leaf {
    std::uint32_t node;
    std::vector<std::uint32_t> members;
    bool exhausted = false;
  };
  std::vector<Leaf> leaves(1);
  leaves[0].node = 0;
  leaves[0].members.resize(w.size());
  std::iota(leaves[0].members.begin(), leaves[0].members.end(), 0u);

  while (leaves.size() < cfg.n_leaves) {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      const auto& lf = leaves[i];
      if (!lf.exhausted && lf.members.size() >= 2 * cfg.min_leaf && tree.nodes()[lf.node].depth < cfg.max_depth)
        open.push_back(i);
    }
    if (open.empty()) break;
    const std::size_t li = open[uniform_index(rng, open.size())];
    bool done = false;
    for (std::size_t attempt = 0; attempt < cfg.attempts_per_leaf && !done; ++attempt) {
      const auto f = uniform_index(rng, w.dim());
      double lo = w.x(leaves[li].members.front())[f], hi = lo;
      for (auto m : leaves[li].members) {
        lo = std::min(lo, w.x(m)[f]);
        hi = std::max(hi, w.x(m)[f]);
      }
      if (!(hi > lo)) continue;
      const double thr = lo + (hi - lo) * uniform01(rng);
      std::vector<std::uint32_t> left, right;
      for (auto m : leaves[li].members) (w.x(m)[f] <= thr ? left : right).push_back(m);
      if (left.size() < cfg.min_leaf || right.size() < cfg.min_leaf) continue;
      auto [l, r] = tree.split(leaves[li].node, static_cast<int>(f), thr);
      Leaf right_leaf{r, std::move(right), false};
      leaves[li].node = l;
      leaves[li].members = std::move(left);
      leaves.push_back(std::move(right_leaf));
      done = true;
    }
    if (!done) leaves[li].exhausted = true;
  }
  return tree;
}

struct KdqConfig {
  // Smallest box side that may still be halved, relative to the window's extent in that dimension.
  double min_side = 1.0 / 16.0;
  std::size_t min_count = 10;
  std::size_t max_depth = 64;
};

// Cycle through the dimensions, halving each cell at the center of its box.
inline TreePartition build_kdq_tree(const Window& w, const KdqConfig& cfg = {}) {
  if (w.empty()) throw DataError("cannot build a tree on an empty window");
  const std::size_t d = w.dim();
  Vector lo(d), hi(d);
  for (std::size_t f = 0; f < d; ++f) {
    lo[f] = hi[f] = w.x(0)[f];
    for (const auto& s : w) {
      lo[f] = std::min(lo[f], s.x[f]);
      hi[f] = std::max(hi[f], s.x[f]);
    }
  }
  Vector root_side(d);
  for (std::size_t f = 0; f < d; ++f) root_side[f] = hi[f] - lo[f];

  TreePartition tree;
  tree.provenance = "kdq_tree";
  struct Task {
    std::uint32_t node;
    std::vector<std::uint32_t> members;
    Vector lo, hi;
    std::size_t next_dim;
  };
  std::vector<Task> stack;
  std::vector<std::uint32_t> all(w.size());
  std::iota(all.begin(), all.end(), 0u);
  stack.push_back({0, std::move(all), lo, hi, 0});
  while (!stack.empty()) {
    Task task = std::move(stack.back());
    stack.pop_back();
    if (task.members.size() < cfg.min_count || tree.nodes()[task.node].depth >= cfg.max_depth) continue;
    std::size_t dim = d;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t f = (task.next_dim + k) % d;
      if (root_side[f] > 0.0 && task.hi[f] - task.lo[f] >= cfg.min_side * root_side[f]) {
        dim = f;
        break;
      }
    }
    if (dim == d) continue;
    const double mid = 0.5 * (task.lo[dim] + task.hi[dim]);
    auto [l, r] = tree.split(task.node, static_cast<int>(dim), mid);
    Task left{l, {}, task.lo, task.hi, (dim + 1) % d};
    Task right{r, {}, task.lo, task.hi, (dim + 1) % d};
    left.hi[dim] = mid;
    right.lo[dim] = mid;
    for (auto m : task.members) (w.x(m)[dim] <= mid ? left : right).members.push_back(m);
    // Right pushed first so the left subtree is expanded first.
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }
  return tree;
}

}  // namespace driftlab
