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

// CSV ingestion: header row required; every column is a numeric feature
// except an optional `t` (timestamp) and an optional `label` (class label,
// encoded 0/1 for two classes and one-hot for more, appended last).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "driftlab/error.hpp"
#include "driftlab/generators.hpp"
#include "driftlab/neighbor_kernel.hpp"
#include "driftlab/random.hpp"
#include "driftlab/stream.hpp"

namespace driftlab {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, std::size_t row, const std::string& col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("row " + std::to_string(row) + ", column '" + col + "': not a number: '" + s + "'");
  }
}

}  // namespace detail

inline Window parse_csv_window(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV is empty (header required)");
  const auto header = detail::split_csv_line(line);
  int t_col = -1, label_col = -1;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "t") t_col = static_cast<int>(c);
    else if (header[c] == "label") label_col = static_cast<int>(c);
    else feature_cols.push_back(c);
  }
  if (feature_cols.empty()) throw DataError("CSV has no feature columns");

  std::vector<Vector> rows;
  std::vector<double> raw_t;
  std::vector<std::string> labels;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(header.size()));
    Vector x;
    for (auto c : feature_cols) x.push_back(detail::parse_number(cells[c], row_no, header[c]));
    rows.push_back(std::move(x));
    if (t_col >= 0) raw_t.push_back(detail::parse_number(cells[static_cast<std::size_t>(t_col)], row_no, "t"));
    if (label_col >= 0) labels.push_back(cells[static_cast<std::size_t>(label_col)]);
  }
  if (rows.empty()) throw DataError("CSV has no data rows");

  if (label_col >= 0) {
    // Numeric labels sort numerically, otherwise lexicographically.
    const std::set<std::string> distinct(labels.begin(), labels.end());
    std::vector<std::string> classes(distinct.begin(), distinct.end());
    const bool numeric = std::all_of(classes.begin(), classes.end(), [](const std::string& s) {
      try {
        std::size_t pos = 0;
        std::stod(s, &pos);
        return pos == s.size();
      } catch (...) {
        return false;
      }
    });
    if (numeric)
      std::sort(classes.begin(), classes.end(), [](const auto& a, const auto& b) { return std::stod(a) < std::stod(b); });
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < classes.size(); ++i) index[classes[i]] = i;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto cls = index[labels[r]];
      if (classes.size() <= 2) {
        rows[r].push_back(static_cast<double>(cls));
      } else {
        for (std::size_t i = 0; i < classes.size(); ++i) rows[r].push_back(i == cls ? 1.0 : 0.0);
      }
    }
  }

  std::vector<double> ts;
  if (t_col >= 0) {
    ts = rescale_unit(raw_t);
  } else {
    ts.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      ts[i] = rows.size() > 1 ? static_cast<double>(i) / static_cast<double>(rows.size() - 1) : 0.0;
  }
  std::vector<TimedSample> samples;
  samples.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) samples.push_back({std::move(rows[i]), ts[i]});
  return Window(std::move(samples), label_col >= 0);
}

inline Window read_csv_window(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file '" + path + "'");
  return parse_csv_window(in);
}

// Biased-MMD permutation test between two point sets (Gaussian kernel,
// median bandwidth over the union).
inline double mmd_two_sample_p_value(const std::vector<Vector>& a, const std::vector<Vector>& b, std::size_t n_perms,
                                     std::uint64_t seed) {
  std::vector<TimedSample> all;
  for (const auto& x : a) all.push_back({x, 0.0});
  for (const auto& x : b) all.push_back({x, 1.0});
  const Window w(std::move(all));
  const KernelGram gram(w);
  const std::size_t n = w.size(), na = a.size();
  auto stat = [&](const std::vector<std::uint8_t>& side) {
    double aa = 0, bb = 0, ab = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double k = gram(i, j);
        if (side[i] == 0 && side[j] == 0) aa += k;
        else if (side[i] == 1 && side[j] == 1) bb += k;
        else ab += k;
      }
    const double x = static_cast<double>(na), y = static_cast<double>(n - na);
    return aa / (x * x) + bb / (y * y) - ab / (x * y);
  };
  std::vector<std::uint8_t> side(n, 1);
  std::fill(side.begin(), side.begin() + static_cast<std::ptrdiff_t>(na), 0);
  const double observed = stat(side);
  Rng rng = make_rng(seed);
  std::size_t exceed = 0;
  for (std::size_t p = 0; p < n_perms; ++p) {
    std::shuffle(side.begin(), side.end(), rng);
    exceed += stat(side) >= observed;
  }
  return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(n_perms) + 1.0);
}

struct CsvConceptPair {
  ConceptPair pair;
  std::size_t rows_before = 0, rows_after = 0;
  std::optional<double> two_sample_p;
  bool warning = false;
  std::string message;
};

// Samplers drawing uniformly with replacement from the rows before
// (t < timestamp_split) and after the split of a CSV stream.
inline CsvConceptPair csv_concept_pair(const Window& stream, double timestamp_split, bool two_sample_check,
                                       std::uint64_t seed = 0) {
  auto before = std::make_shared<std::vector<Vector>>();
  auto after = std::make_shared<std::vector<Vector>>();
  for (const auto& s : stream) (s.t < timestamp_split ? *before : *after).push_back(s.x);
  if (before->empty() || after->empty()) throw DataError("timestamp split leaves one side of the CSV stream empty");
  CsvConceptPair out;
  out.rows_before = before->size();
  out.rows_after = after->size();
  auto sampler = [&](std::string id, std::shared_ptr<std::vector<Vector>> rows) {
    return ConceptSampler(std::move(id), stream.dim(), stream.label_feature_appended(),
                          [rows](Rng& rng) { return (*rows)[uniform_index(rng, rows->size())]; });
  };
  if (two_sample_check) {
    // Subsample large sides; the check only has to flag indistinguishable halves.
    constexpr std::size_t kMaxRows = 200;
    Rng rng = make_rng(derive_seed(seed, {7}));
    auto sub = [&](const std::vector<Vector>& rows) {
      if (rows.size() <= kMaxRows) return rows;
      std::vector<Vector> s;
      for (std::size_t i = 0; i < kMaxRows; ++i) s.push_back(rows[uniform_index(rng, rows.size())]);
      return s;
    };
    out.two_sample_p = mmd_two_sample_p_value(sub(*before), sub(*after), 99, derive_seed(seed, {8}));
    if (*out.two_sample_p > 0.05) {
      out.warning = true;
      out.message = "two-sample check: before/after batches are not significantly different (p=" +
                    std::to_string(*out.two_sample_p) + ")";
    }
  }
  out.pair = {sampler("csv/before", before), sampler("csv/after", after), false};
  return out;
}

inline CsvConceptPair csv_concept_pair(const std::string& path, double timestamp_split, bool two_sample_check,
                                       std::uint64_t seed = 0) {
  return csv_concept_pair(read_csv_window(path), timestamp_split, two_sample_check, seed);
}

}  // namespace driftlab
