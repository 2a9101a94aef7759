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

// Evaluation engine: repeated drifting/permuted window pairs, statistics at
// displaced split points, and the aggregate scores
//   p_perm  = P[d(S-, S+) > d(S~-, S~+)]
//   p_thre  = sup_b P[d(S-, S+) > b >= d(S~-, S~+)]
//   p_pa(D) = P[d(S-(t0), S+(t0)) > d(S-(t0+D), S+(t0+D))]

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftlab/csv.hpp"
#include "driftlab/detector.hpp"
#include "driftlab/estimators.hpp"
#include "driftlab/generators.hpp"
#include "driftlab/moment_tree.hpp"
#include "driftlab/stream.hpp"

namespace driftlab {

inline constexpr const char* kVersion = "0.3.0";

// Paired statistics of one repetition, one entry per configured split position.
struct EvalRecord {
  std::vector<double> drift;
  std::vector<double> perm;
};

// Fraction of repetitions where the drifting window scores strictly higher
// than its permuted counterpart at split index `at`. Ties count as misses.
inline double p_perm(const std::vector<EvalRecord>& records, std::size_t at = 0) {
  if (records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : records) hits += r.drift.at(at) > r.perm.at(at);
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

// sup over thresholds b in {-inf} U {permuted statistics} of
// P[drift > b >= perm]. The count at b equals #{perm <= b} - #{max(drift, perm) <= b}.
inline double p_thre(const std::vector<EvalRecord>& records, std::size_t at = 0) {
  if (records.empty()) return 0.0;
  std::vector<double> perm, upper;
  for (const auto& r : records) {
    perm.push_back(r.perm.at(at));
    upper.push_back(std::max(r.drift.at(at), r.perm.at(at)));
  }
  std::sort(perm.begin(), perm.end());
  std::sort(upper.begin(), upper.end());
  std::ptrdiff_t best = 0;  // b = -inf gives 0
  for (double b : perm) {
    const auto below = std::upper_bound(perm.begin(), perm.end(), b) - perm.begin();
    const auto both = std::upper_bound(upper.begin(), upper.end(), b) - upper.begin();
    best = std::max(best, below - both);
  }
  return static_cast<double>(best) / static_cast<double>(records.size());
}

// Fraction of drifting windows scoring strictly higher at split index `at`
// (the true change point) than at split index `displaced`.
inline double p_pa(const std::vector<EvalRecord>& records, std::size_t at, std::size_t displaced) {
  if (records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : records) hits += r.drift.at(at) > r.drift.at(displaced);
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

// ---------------------------------------------------------------------------
// Datasets

using DatasetSpec = EstimatorSpec;

struct DatasetInfo {
  ConceptPair pair;
  std::string description;
};

// Dataset ids: sea[:before=0,after=1]  stagger[:before=1,after=2]
// rhp[:d=2,angle=1.5708]  rbf[:d=5,centroids=10]  csv:path=<file>[,split=0.5,check=1]
// Generator randomness (hyperplane normal, RBF centroids) is drawn from `seed`
// unless the id pins seed=<n>.
inline DatasetInfo make_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  const auto pinned = spec.params.count("seed") ? static_cast<std::uint64_t>(spec.get_size("seed", 0)) : seed;
  if (spec.name == "sea") {
    detail::check_known(spec, {"before", "after"});
    const int b = static_cast<int>(spec.get_size("before", 0)), a = static_cast<int>(spec.get_size("after", 1));
    return {sea_pair(b, a), "SEA variants " + std::to_string(b) + "->" + std::to_string(a)};
  }
  if (spec.name == "stagger") {
    detail::check_known(spec, {"before", "after"});
    const int b = static_cast<int>(spec.get_size("before", 1)), a = static_cast<int>(spec.get_size("after", 2));
    return {stagger_pair(b, a), "STAGGER concepts " + std::to_string(b) + "->" + std::to_string(a)};
  }
  if (spec.name == "rhp") {
    detail::check_known(spec, {"d", "angle", "seed"});
    const auto d = spec.get_size("d", 2);
    const double angle = spec.get_double("angle", std::numbers::pi / 2);
    return {rhp_pair(d, angle, pinned), "rotating hyperplane d=" + std::to_string(d) + " angle=" + std::to_string(angle)};
  }
  if (spec.name == "rbf") {
    detail::check_known(spec, {"d", "centroids", "seed"});
    const auto d = spec.get_size("d", 5), c = spec.get_size("centroids", 10);
    return {rbf_pair(d, c, pinned), "random RBF d=" + std::to_string(d) + " centroids=" + std::to_string(c)};
  }
  if (spec.name == "csv") {
    detail::check_known(spec, {"path", "split", "check"});
    const auto path = spec.get("path", "");
    if (path.empty()) throw ParameterError("csv dataset needs path=<file>");
    auto res = csv_concept_pair(path, spec.get_double("split", 0.5), spec.get_size("check", 0) != 0, seed);
    return {res.pair, "csv " + path + (res.warning ? " [" + res.message + "]" : "")};
  }
  throw ParameterError("unknown dataset '" + spec.name + "'");
}

// ---------------------------------------------------------------------------
// Experiments

inline const std::vector<double>& default_split_positions() {
  static const std::vector<double> v{0.50, 0.53, 0.56, 0.62, 0.75};
  return v;
}

struct ExperimentConfig {
  std::string dataset = "stagger";
  std::vector<std::string> estimators;
  std::size_t window = 150;
  std::size_t noise_dims = 0;
  double offset = 0.0;
  double drift_position = 0.5;
  std::vector<double> split_positions = default_split_positions();
  std::size_t repetitions = 200;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  // Values outside the standard evaluation grid.
  bool is_custom() const {
    const bool off = offset == 0.0 || offset == 0.125 || offset == 0.25;
    return !off || drift_position != 0.5 || split_positions != default_split_positions();
  }

  std::string canonical() const {
    std::ostringstream os;
    os << std::setprecision(17) << "dataset=" << dataset << ";window=" << window << ";noise=" << noise_dims
       << ";offset=" << offset << ";drift=" << drift_position << ";reps=" << repetitions << ";seed=" << seed
       << ";splits=";
    for (double s : split_positions) os << s << ",";
    os << ";estimators=";
    for (const auto& e : estimators) os << e << "|";
    return os.str();
  }

  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) h = (h ^ c) * 0x100000001b3ULL;
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
  }
};

struct ResultRow {
  std::string dataset;
  std::string estimator;
  std::size_t window = 0, noise_dims = 0;
  double offset = 0.0;
  std::size_t repetitions = 0;
  double p_perm = 0.0, p_thre = 0.0;
  std::vector<std::pair<double, double>> p_pa;  // (delta, value)
  bool failed = false;
  std::string message;
  std::string config_hash;
  std::vector<EvalRecord> records;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  const ResultRow& find(const std::string& dataset, const std::string& estimator) const {
    for (const auto& r : rows)
      if (r.dataset == dataset && r.estimator == estimator) return r;
    throw ParameterError("no result for " + dataset + " / " + estimator);
  }
};

// p_pa at displacement delta (matched to the nearest configured position).
inline double pa_at(const ResultRow& row, double delta) {
  for (const auto& [d, v] : row.p_pa)
    if (std::abs(d - delta) < 1e-9) return v;
  throw ParameterError("no p_pa entry for delta " + std::to_string(delta));
}

// Runs one experiment: `repetitions` paired windows, every estimator fitted
// afresh on each drifting and each permuted window, evaluated at every split
// position. Deterministic in the master seed and independent of thread count.
inline ResultTable run_grid(const ExperimentConfig& cfg) {
  if (cfg.repetitions < 1) throw ParameterError("repetitions must be >= 1");
  if (cfg.estimators.empty()) throw ParameterError("no estimators configured");
  std::vector<double> positions = cfg.split_positions;
  auto drift_it = std::find(positions.begin(), positions.end(), cfg.drift_position);
  if (drift_it == positions.end()) positions.insert(positions.begin(), cfg.drift_position);
  const std::size_t at = static_cast<std::size_t>(
      std::find(positions.begin(), positions.end(), cfg.drift_position) - positions.begin());
  for (double p : positions)
    if (!(p > cfg.offset && p < 1.0)) throw ParameterError("split positions must lie in (offset, 1)");

  const auto dataset_spec = DatasetSpec::parse(cfg.dataset);
  // Fail fast on malformed dataset ids.
  (void)make_dataset(dataset_spec, cfg.seed);

  const std::size_t E = cfg.estimators.size(), R = cfg.repetitions, P = positions.size();
  std::vector<std::optional<Estimator>> estimators(E);
  std::vector<std::string> failure(E);
  for (std::size_t e = 0; e < E; ++e) {
    try {
      estimators[e].emplace(make_estimator(cfg.estimators[e]));
    } catch (const ParameterError& err) {
      throw;
    } catch (const Error& err) {
      failure[e] = err.what();
    }
  }

  std::vector<std::vector<EvalRecord>> records(E, std::vector<EvalRecord>(R));
  std::vector<std::vector<std::string>> rep_failure(E, std::vector<std::string>(R));

  detail::parallel_for(R, cfg.threads, [&](std::size_t r) {
    const std::uint64_t rs = derive_seed(cfg.seed, {r});
    const auto data = make_dataset(dataset_spec, derive_seed(rs, {0}));
    const auto pair = with_noise(data.pair, cfg.noise_dims);
    const auto paired = make_paired(pair.before, pair.after, cfg.window, cfg.drift_position, cfg.offset,
                                    derive_seed(rs, {1}));
    std::vector<std::size_t> ranks(P);
    for (std::size_t p = 0; p < P; ++p) ranks[p] = paired.drifting.rank_of(paired.window_time(positions[p]));

    for (std::size_t e = 0; e < E; ++e) {
      if (!estimators[e]) continue;
      const auto& est = *estimators[e];
      const bool truncate = est.traits().arrival_time_respecting && est.reference_skip() > 0.0;
      auto evaluate = [&](const Window& w, std::uint64_t seed, std::vector<double>& out) {
        const Window train = truncate ? truncate_reference(w, est.reference_skip(), paired.t0) : w;
        const auto desc = est.fit(train, w, seed);
        out.resize(P);
        for (std::size_t p = 0; p < P; ++p) out[p] = desc->statistic_at_rank(ranks[p]);
      };
      try {
        evaluate(paired.drifting, derive_seed(rs, {2, e}), records[e][r].drift);
        evaluate(paired.permuted, derive_seed(rs, {3, e}), records[e][r].perm);
      } catch (const ParameterError&) {
        throw;
      } catch (const Error& err) {
        rep_failure[e][r] = err.what();
      }
    }
  });

  ResultTable table;
  for (std::size_t e = 0; e < E; ++e) {
    ResultRow row;
    row.dataset = cfg.dataset;
    row.estimator = cfg.estimators[e];
    row.window = cfg.window;
    row.noise_dims = cfg.noise_dims;
    row.offset = cfg.offset;
    row.repetitions = R;
    row.config_hash = cfg.hash();
    row.failed = !failure[e].empty();
    row.message = failure[e];
    for (std::size_t r = 0; r < R && !row.failed; ++r) {
      if (!rep_failure[e][r].empty()) {
        row.failed = true;
        row.message = "repetition " + std::to_string(r) + ": " + rep_failure[e][r];
      }
    }
    if (!row.failed) {
      row.records = std::move(records[e]);
      row.p_perm = p_perm(row.records, at);
      row.p_thre = p_thre(row.records, at);
      for (std::size_t p = 0; p < P; ++p)
        if (p != at) row.p_pa.emplace_back(positions[p] - cfg.drift_position, p_pa(row.records, at, p));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Config files (key = value, '#' comments). List-valued keys expand into a
// grid of experiments: dataset, estimators (';'), window, noise_dims, offset (',').

struct GridConfig {
  std::vector<std::string> datasets{"stagger"};
  std::vector<std::string> estimators;
  std::vector<std::size_t> windows{150};
  std::vector<std::size_t> noise_dims{0};
  std::vector<double> offsets{0.0};
  std::vector<double> split_positions = default_split_positions();
  double drift_position = 0.5;
  std::size_t repetitions = 200;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  std::vector<ExperimentConfig> expand() const {
    std::vector<ExperimentConfig> out;
    for (const auto& d : datasets)
      for (auto n : windows)
        for (auto nd : noise_dims)
          for (double off : offsets) {
            ExperimentConfig c;
            c.dataset = d;
            c.estimators = estimators;
            c.window = n;
            c.noise_dims = nd;
            c.offset = off;
            c.drift_position = drift_position;
            c.split_positions = split_positions;
            c.repetitions = repetitions;
            c.seed = seed;
            c.threads = threads;
            out.push_back(std::move(c));
          }
    return out;
  }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "': not a number: '" + v + "'");
  }
}

inline std::size_t to_size(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d < 0 || d != std::floor(d)) throw ParameterError("config key '" + key + "' must be a non-negative integer");
  return static_cast<std::size_t>(d);
}

}  // namespace detail

inline GridConfig parse_grid_config(std::istream& in) {
  GridConfig g;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParameterError("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key == "dataset" || key == "datasets") {
      g.datasets = detail::split_list(value, ';');
    } else if (key == "estimators" || key == "estimator") {
      g.estimators = detail::split_list(value, ';');
    } else if (key == "window") {
      g.windows.clear();
      for (const auto& v : detail::split_list(value, ',')) g.windows.push_back(detail::to_size(key, v));
    } else if (key == "noise_dims") {
      g.noise_dims.clear();
      for (const auto& v : detail::split_list(value, ',')) g.noise_dims.push_back(detail::to_size(key, v));
    } else if (key == "offset") {
      g.offsets.clear();
      for (const auto& v : detail::split_list(value, ',')) g.offsets.push_back(detail::to_double(key, v));
    } else if (key == "splits") {
      g.split_positions.clear();
      for (const auto& v : detail::split_list(value, ',')) g.split_positions.push_back(detail::to_double(key, v));
    } else if (key == "drift_position") {
      g.drift_position = detail::to_double(key, value);
    } else if (key == "reps" || key == "repetitions") {
      g.repetitions = detail::to_size(key, value);
    } else if (key == "seed") {
      g.seed = detail::to_size(key, value);
    } else if (key == "threads") {
      g.threads = detail::to_size(key, value);
    } else {
      throw ParameterError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (g.estimators.empty()) throw ParameterError("config lists no estimators");
  if (g.datasets.empty() || g.windows.empty() || g.noise_dims.empty() || g.offsets.empty())
    throw ParameterError("config has an empty list");
  return g;
}

inline GridConfig read_grid_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config file '" + path + "'");
  return parse_grid_config(in);
}

// ---------------------------------------------------------------------------
// Output

inline void write_results_csv(const ResultTable& table, std::ostream& os) {
  std::vector<double> deltas;
  for (const auto& r : table.rows)
    for (const auto& [d, v] : r.p_pa)
      if (std::find(deltas.begin(), deltas.end(), d) == deltas.end()) deltas.push_back(d);
  std::sort(deltas.begin(), deltas.end());
  os << "dataset,estimator,window,noise_dims,offset,repetitions,p_perm,p_thre";
  for (double d : deltas) os << ",p_pa_" << std::lround(d * 100);
  os << ",status,config_hash\n";
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  os << std::fixed << std::setprecision(4);
  for (const auto& r : table.rows) {
    os << quote(r.dataset) << "," << quote(r.estimator) << "," << r.window << "," << r.noise_dims << "," << r.offset
       << "," << r.repetitions << ",";
    if (r.failed) {
      os << ",";
      for (std::size_t i = 0; i < deltas.size(); ++i) os << ",";
      os << "," << quote("failed: " + r.message) << "," << r.config_hash << "\n";
      continue;
    }
    os << r.p_perm << "," << r.p_thre;
    for (double d : deltas) {
      os << ",";
      for (const auto& [dd, v] : r.p_pa)
        if (dd == d) os << v;
    }
    os << ",ok," << r.config_hash << "\n";
  }
}

inline nlohmann::json metadata_json(const std::vector<ExperimentConfig>& cfgs, const nlohmann::json& extra = {}) {
  nlohmann::json j;
  j["version"] = kVersion;
  auto& arr = j["experiments"] = nlohmann::json::array();
  for (const auto& c : cfgs) {
    nlohmann::json e;
    e["config_hash"] = c.hash();
    e["dataset"] = c.dataset;
    e["dataset_description"] = make_dataset(DatasetSpec::parse(c.dataset), c.seed).description;
    e["estimators"] = c.estimators;
    e["window"] = c.window;
    e["noise_dims"] = c.noise_dims;
    e["offset"] = c.offset;
    e["drift_position"] = c.drift_position;
    e["split_positions"] = c.split_positions;
    e["repetitions"] = c.repetitions;
    e["master_seed"] = c.seed;
    e["seed_derivation"] = "splitmix64(master_seed, repetition_index)";
    e["custom_grid"] = c.is_custom();
    arr.push_back(std::move(e));
  }
  if (!extra.is_null()) j["notes"] = extra;
  return j;
}

// ---------------------------------------------------------------------------
// Table reproduction: per estimator family, pick the hyperparameters with the
// best p_thre on a calibration run, then evaluate them on a fresh seed.

struct EstimatorFamily {
  std::string name;
  std::vector<std::string> candidates;
};

inline std::vector<EstimatorFamily> table_families() {
  std::vector<EstimatorFamily> f;
  f.push_back({"RF", {"rf:trees=16,degree=1", "rf:trees=16,degree=2", "rf:trees=16,degree=1,skip=0.1",
                      "rf:trees=16,degree=3"}});
  EstimatorFamily rp{"RndPj", {}};
  for (const char* e : {"equidistant", "equilikely"})
    for (int b : {4, 8, 16}) rp.candidates.push_back("randproj:bins=" + std::to_string(b) + ",edges=" + e);
  f.push_back(rp);
  EstimatorFamily marg{"Marg", {}};
  for (const char* e : {"equidistant", "equilikely"})
    for (int b : {4, 8, 16}) marg.candidates.push_back("marginal:bins=" + std::to_string(b) + ",edges=" + e);
  f.push_back(marg);
  EstimatorFamily rt{"RndTree", {}};
  for (int t : {1, 16})
    for (int m : {5, 1})
      for (int l : {8, 16, 32})
        rt.candidates.push_back("randtree:leaves=" + std::to_string(l) + ",trees=" + std::to_string(t) +
                                ",min_leaf=" + std::to_string(m));
  f.push_back(rt);
  f.push_back({"MMD", {"mmd"}});
  f.push_back({"LDD", {"ldd:k=5", "ldd:k=10", "ldd:k=20"}});
  return f;
}

struct TableCell {
  std::string dataset, family, chosen;
  double calibration_p_thre = 0.0;
  ResultRow result;
};

inline std::vector<TableCell> reproduce_tables(const std::vector<std::string>& datasets,
                                               const std::vector<EstimatorFamily>& families, std::size_t reps,
                                               std::size_t calibration_reps, std::uint64_t seed, std::size_t threads = 1) {
  std::vector<TableCell> cells;
  for (const auto& ds : datasets) {
    std::vector<std::string> all;
    for (const auto& f : families) all.insert(all.end(), f.candidates.begin(), f.candidates.end());
    ExperimentConfig calib;
    calib.dataset = ds;
    calib.estimators = all;
    calib.repetitions = calibration_reps;
    calib.seed = derive_seed(seed, {0xca11b});
    calib.threads = threads;
    const auto ct = calibration_reps > 0 ? run_grid(calib) : ResultTable{};

    std::vector<std::string> chosen;
    std::vector<double> chosen_score;
    for (const auto& f : families) {
      std::string best = f.candidates.front();
      double best_score = -1.0;
      if (calibration_reps > 0) {
        for (const auto& c : f.candidates) {
          const auto& row = ct.find(ds, c);
          if (!row.failed && row.p_thre > best_score) {
            best_score = row.p_thre;
            best = c;
          }
        }
      }
      chosen.push_back(best);
      chosen_score.push_back(best_score);
    }
    ExperimentConfig run;
    run.dataset = ds;
    run.estimators = chosen;
    run.repetitions = reps;
    run.seed = seed;
    run.threads = threads;
    auto rt = run_grid(run);
    for (std::size_t i = 0; i < families.size(); ++i) {
      TableCell cell{ds, families[i].name, chosen[i], chosen_score[i], rt.rows[i]};
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace driftlab
