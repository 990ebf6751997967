// Copyright 2026 The tabens Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tabens/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tabens/rng.hpp"

namespace tabens {

using nlohmann::json;

ParseError::ParseError(const std::string& message, std::size_t row, std::string column)
    : std::runtime_error(message + " (row " + std::to_string(row) + ", column '" + column + "')"),
      row_(row),
      column_(std::move(column)) {}

void DatasetSchema::validate() const {
  std::size_t targets = 0, features = 0;
  std::set<std::string> names;
  for (const auto& c : columns) {
    if (!names.insert(c.name).second) throw SchemaError("schema: duplicate column '" + c.name + "'");
    if (c.role == ColumnRole::Target) {
      ++targets;
    } else {
      ++features;
    }
  }
  if (targets != 1) throw SchemaError("schema: exactly one target column required");
  if (features == 0) throw SchemaError("schema: at least one feature column required");
  if (task.kind == TaskKind::Multiclass && task.n_classes < 2) {
    throw SchemaError("schema: multiclass task needs n_classes >= 2");
  }
}

namespace {

ColumnRole parse_role(const std::string& role) {
  if (role == "numeric") return ColumnRole::NumericFeature;
  if (role == "categorical") return ColumnRole::CategoricalFeature;
  if (role == "target") return ColumnRole::Target;
  throw SchemaError("schema: unknown column role '" + role + "'");
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const char* where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      throw SchemaError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits one CSV record. Double quotes group fields and "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::size_t> read_index_file(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::size_t> idx;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty()) continue;
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw std::invalid_argument("index file '" + path + "': bad line '" + line + "'");
    }
    idx.push_back(v);
  }
  return idx;
}

void check_split(const SplitIndices& s, std::size_t n) {
  if (s.train.empty() || s.val.empty() || s.test.empty()) {
    throw std::invalid_argument("split: every split must be nonempty");
  }
  std::vector<bool> seen(n, false);
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    for (std::size_t i : *part) {
      if (i >= n) throw std::invalid_argument("split: row index " + std::to_string(i) + " out of range");
      if (seen[i]) throw std::invalid_argument("split: row " + std::to_string(i) + " in two splits");
      seen[i] = true;
    }
  }
}

DatasetSchema parse_schema_json(const json& j) {
  reject_unknown_keys(j, {"task", "n_classes", "columns"}, "schema");
  DatasetSchema schema;
  schema.task.kind = parse_task_kind(j.at("task").get<std::string>());
  if (schema.task.kind == TaskKind::Binary) schema.task.n_classes = 2;
  if (schema.task.kind == TaskKind::Multiclass) {
    schema.task.n_classes = j.at("n_classes").get<std::size_t>();
  }
  for (const auto& c : j.at("columns")) {
    reject_unknown_keys(c, {"name", "role"}, "schema column");
    schema.columns.push_back({c.at("name").get<std::string>(), parse_role(c.at("role").get<std::string>())});
  }
  schema.validate();
  return schema;
}

}  // namespace

DatasetSchema parse_schema(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("schema: ") + e.what());
  }
  try {
    return parse_schema_json(j);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("schema: ") + e.what());
  }
}

DatasetSchema load_schema(const std::string& path) { return parse_schema(read_file(path)); }

SplitIndices make_split(std::size_t n, const SplitSpec& spec) {
  if (spec.train_index_file && spec.val_index_file && spec.test_index_file) {
    SplitIndices s{read_index_file(*spec.train_index_file), read_index_file(*spec.val_index_file),
                   read_index_file(*spec.test_index_file)};
    check_split(s, n);
    return s;
  }
  if (spec.train < 0.0 || spec.val < 0.0 || spec.test < 0.0 ||
      std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split: fractions must be nonnegative and sum to 1");
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(spec.seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

  const auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(spec.val * static_cast<double>(n)));
  if (n_train + n_val >= n) throw std::invalid_argument("split: test split would be empty");
  SplitIndices s;
  s.train.assign(perm.begin(), perm.begin() + n_train);
  s.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  s.test.assign(perm.begin() + n_train + n_val, perm.end());
  check_split(s, n);
  return s;
}

Matrix TabularDataset::feature_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::vector<double> TabularDataset::target_rows(std::span<const std::size_t> rows) const {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = targets[rows[i]];
  return out;
}

std::vector<double> TabularDataset::raw_target_rows(std::span<const std::size_t> rows) const {
  std::vector<double> out = target_rows(rows);
  if (!task().is_classification()) {
    for (double& y : out) y = target_scaler.unscale(y);
  }
  return out;
}

double TabularDataset::raw_train_target_variance() const {
  const auto y = raw_target_rows(train);
  if (y.empty()) return 0.0;
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  return var / static_cast<double>(y.size());
}

TabularDataset load_csv_text(std::string_view csv_text, const DatasetSchema& schema,
                             const SplitSpec& split) {
  schema.validate();
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= csv_text.size()) {
      std::size_t end = csv_text.find('\n', start);
      if (end == std::string_view::npos) end = csv_text.size();
      const auto line = csv_text.substr(start, end - start);
      if (!trim(line).empty()) lines.push_back(line);
      start = end + 1;
    }
  }
  if (lines.empty()) throw SchemaError("csv: missing header row");

  const auto header = split_csv_line(lines.front());
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position[std::string(trim(header[i]))] = i;

  TabularDataset ds;
  ds.schema = schema;
  std::vector<std::size_t> feature_cols;
  std::size_t target_col = 0;
  std::string target_name;
  for (const auto& c : schema.columns) {
    const auto it = position.find(c.name);
    if (it == position.end()) throw SchemaError("csv: missing column '" + c.name + "'");
    if (c.role == ColumnRole::Target) {
      target_col = it->second;
      target_name = c.name;
    } else {
      feature_cols.push_back(it->second);
      ds.feature_names.push_back(c.name);
      ds.feature_kinds.push_back(c.role == ColumnRole::CategoricalFeature ? FeatureKind::Categorical
                                                                          : FeatureKind::Numeric);
    }
  }

  const std::size_t n = lines.size() - 1;
  const std::size_t f = feature_cols.size();
  std::vector<std::vector<std::string>> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    raw[i] = split_csv_line(lines[i + 1]);
    if (raw[i].size() != header.size()) {
      throw ParseError("csv: expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(raw[i].size()),
                       i + 1, "*");
    }
  }

  const SplitIndices s = make_split(n, split);
  ds.train = s.train;
  ds.val = s.val;
  ds.test = s.test;

  // Vocabularies from training rows only, sorted for determinism.
  for (std::size_t j = 0; j < f; ++j) {
    if (ds.feature_kinds[j] != FeatureKind::Categorical) continue;
    std::set<std::string> vocab;
    for (std::size_t i : ds.train) vocab.insert(std::string(trim(raw[i][feature_cols[j]])));
    ds.schema.vocabularies.emplace_back(vocab.begin(), vocab.end());
    ds.cardinality.push_back(vocab.size());
  }

  ds.features = Matrix(n, f);
  ds.targets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t cat = 0;
    for (std::size_t j = 0; j < f; ++j) {
      const std::string& cell = raw[i][feature_cols[j]];
      if (ds.feature_kinds[j] == FeatureKind::Categorical) {
        const auto& vocab = ds.schema.vocabularies[cat];
        const auto key = std::string(trim(cell));
        const auto it = std::lower_bound(vocab.begin(), vocab.end(), key);
        ds.features(i, j) = static_cast<double>(
            it != vocab.end() && *it == key ? static_cast<std::size_t>(it - vocab.begin())
                                            : vocab.size());
        ++cat;
      } else {
        const auto v = parse_double(cell);
        if (!v) throw ParseError("csv: unparseable or missing numeric value '" + cell + "'", i + 1, ds.feature_names[j]);
        ds.features(i, j) = *v;
      }
    }
    const auto y = parse_double(raw[i][target_col]);
    if (!y) throw ParseError("csv: unparseable target '" + raw[i][target_col] + "'", i + 1, target_name);
    if (schema.task.is_classification()) {
      if (*y != std::floor(*y) || *y < 0.0 || *y >= static_cast<double>(schema.task.n_classes)) {
        throw ParseError("csv: class label out of range", i + 1, target_name);
      }
    }
    ds.targets[i] = *y;
  }
  return ds;
}

TabularDataset load_csv(const std::string& path, const DatasetSchema& schema,
                        const SplitSpec& split) {
  TabularDataset ds = load_csv_text(read_file(path), schema, split);
  ds.name = path;
  return ds;
}

TabularDataset standardize(TabularDataset ds) {
  if (ds.train.empty()) throw std::invalid_argument("standardize: empty training split");
  const std::size_t f = ds.features.cols();
  auto& st = ds.standardization;
  st.mean.assign(f, 0.0);
  st.std.assign(f, 1.0);
  st.degenerate.assign(f, false);
  const double n_train = static_cast<double>(ds.train.size());
  for (std::size_t j = 0; j < f; ++j) {
    if (ds.feature_kinds[j] != FeatureKind::Numeric) continue;
    double mean = 0.0;
    for (std::size_t i : ds.train) mean += ds.features(i, j);
    mean /= n_train;
    double var = 0.0;
    for (std::size_t i : ds.train) var += (ds.features(i, j) - mean) * (ds.features(i, j) - mean);
    const double sd = std::sqrt(var / n_train);
    if (!(sd > 0.0)) {
      st.degenerate[j] = true;
      continue;
    }
    st.mean[j] = mean;
    st.std[j] = sd;
    for (std::size_t i = 0; i < ds.size(); ++i) ds.features(i, j) = (ds.features(i, j) - mean) / sd;
  }
  st.fitted = true;

  if (!ds.task().is_classification()) {
    ds.target_scaler = TargetScaler::fit(ds.target_rows(ds.train));
    for (double& y : ds.targets) y = ds.target_scaler.scale(y);
  }
  return ds;
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "TwoGaussiansBinary" || name == "two-gaussians") return SyntheticKind::TwoGaussiansBinary;
  if (name == "XorMulticlass" || name == "xor") return SyntheticKind::XorMulticlass;
  if (name == "LinearRegression" || name == "linear") return SyntheticKind::LinearRegression;
  if (name == "FriedmanRegression" || name == "friedman") return SyntheticKind::FriedmanRegression;
  throw std::invalid_argument("unknown synthetic dataset kind '" + std::string(name) + "'");
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::TwoGaussiansBinary:
      return "TwoGaussiansBinary";
    case SyntheticKind::XorMulticlass:
      return "XorMulticlass";
    case SyntheticKind::LinearRegression:
      return "LinearRegression";
    case SyntheticKind::FriedmanRegression:
      return "FriedmanRegression";
  }
  return "unknown";
}

TabularDataset make_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed,
                              const SplitSpec& split) {
  Rng rng(seed);
  TabularDataset ds;
  ds.name = std::string(to_string(kind));
  std::size_t f = 0;
  switch (kind) {
    case SyntheticKind::TwoGaussiansBinary:
      f = 4;
      ds.schema.task = Task::binary();
      break;
    case SyntheticKind::XorMulticlass:
      f = 4;
      ds.schema.task = Task::multiclass(4);
      break;
    case SyntheticKind::LinearRegression:
      f = 2;
      ds.schema.task = Task::regression();
      break;
    case SyntheticKind::FriedmanRegression:
      f = 10;
      ds.schema.task = Task::regression();
      break;
  }
  for (std::size_t j = 0; j < f; ++j) {
    ds.feature_names.push_back("x" + std::to_string(j));
    ds.feature_kinds.push_back(FeatureKind::Numeric);
    ds.schema.columns.push_back({ds.feature_names.back(), ColumnRole::NumericFeature});
  }
  ds.schema.columns.push_back({"y", ColumnRole::Target});

  ds.features = Matrix(n, f);
  ds.targets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = ds.features.row(i);
    double y = 0.0;
    switch (kind) {
      case SyntheticKind::TwoGaussiansBinary: {
        y = rng.uniform() < 0.5 ? 0.0 : 1.0;
        const double mu = 2.0 * y - 1.0;
        for (double& v : x) v = mu + rng.gaussian();
        break;
      }
      case SyntheticKind::XorMulticlass:
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        y = 2.0 * (x[0] > 0.0 ? 1.0 : 0.0) + (x[0] * x[1] > 0.0 ? 1.0 : 0.0);
        break;
      case SyntheticKind::LinearRegression:
        for (double& v : x) v = rng.gaussian();
        y = 2.0 * x[0] - x[1];
        break;
      case SyntheticKind::FriedmanRegression:
        for (double& v : x) v = rng.uniform();
        y = 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) +
            10.0 * x[3] + 5.0 * x[4] + rng.gaussian();
        break;
    }
    ds.targets[i] = y;
  }
  const SplitIndices s = make_split(n, split);
  ds.train = s.train;
  ds.val = s.val;
  ds.test = s.test;
  return ds;
}

}  // namespace tabens
