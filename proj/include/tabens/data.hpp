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

#ifndef TABENS_DATA_HPP_
#define TABENS_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tabens/model.hpp"
#include "tabens/numkernel.hpp"
#include "tabens/ple.hpp"
#include "tabens/target_scaler.hpp"

namespace tabens {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unparseable CSV content; the message names the 1-based data row and column.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t row, std::string column);
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

enum class ColumnRole { NumericFeature, CategoricalFeature, Target };

struct ColumnSpec {
  std::string name;
  ColumnRole role = ColumnRole::NumericFeature;
};

struct DatasetSchema {
  std::vector<ColumnSpec> columns;
  Task task;
  // One sorted vocabulary per categorical feature, built from training rows.
  std::vector<std::vector<std::string>> vocabularies;

  // Exactly one target and at least one feature; throws SchemaError.
  void validate() const;
};

// Sidecar file (JSON):
//   {"task": "regression" | "binary" | "multiclass", "n_classes": C,
//    "columns": [{"name": "...", "role": "numeric" | "categorical" | "target"}]}
// Unknown keys are errors.
DatasetSchema parse_schema(std::string_view json_text);
DatasetSchema load_schema(const std::string& path);

// Explicit index files (one 0-based row index per line) take precedence over
// the seeded fractional split when all three are given.
struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  std::uint64_t seed = 0;
  std::optional<std::string> train_index_file;
  std::optional<std::string> val_index_file;
  std::optional<std::string> test_index_file;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

// Seeded Fisher-Yates permutation, cut into llround(train * n),
// llround(val * n) and the remainder. Throws std::invalid_argument if a split
// comes out empty or the fractions do not sum to 1.
SplitIndices make_split(std::size_t n, const SplitSpec& spec);

struct FeatureStandardization {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> degenerate;  // constant on the training split
  bool fitted = false;
};

struct TabularDataset {
  std::string name;
  DatasetSchema schema;
  std::vector<std::string> feature_names;
  std::vector<FeatureKind> feature_kinds;
  std::vector<std::size_t> cardinality;  // per categorical feature
  // N x F; categorical columns hold codes, code == cardinality is "unknown".
  Matrix features;
  std::vector<double> targets;
  std::vector<std::size_t> train, val, test;
  FeatureStandardization standardization;
  TargetScaler target_scaler;

  const Task& task() const { return schema.task; }
  std::size_t size() const { return features.rows(); }
  Matrix feature_rows(std::span<const std::size_t> rows) const;
  std::vector<double> target_rows(std::span<const std::size_t> rows) const;
  // Targets in the original scale.
  std::vector<double> raw_target_rows(std::span<const std::size_t> rows) const;
  // Population variance of the raw training targets.
  double raw_train_target_variance() const;
};

// Parses the CSV (header row required), applies the split, and builds the
// categorical vocabularies from training rows only. Missing numeric values are
// rejected.
TabularDataset load_csv(const std::string& path, const DatasetSchema& schema,
                        const SplitSpec& split);
TabularDataset load_csv_text(std::string_view csv_text, const DatasetSchema& schema,
                             const SplitSpec& split);

// z-scores numeric features and regression targets with training statistics.
// Constant features pass through unchanged and are flagged.
TabularDataset standardize(TabularDataset ds);

enum class SyntheticKind { TwoGaussiansBinary, XorMulticlass, LinearRegression, FriedmanRegression };

SyntheticKind parse_synthetic_kind(std::string_view name);
std::string_view to_string(SyntheticKind kind);

// Generators (all features numeric):
//   TwoGaussiansBinary: y ~ Bernoulli(1/2); x ~ N((2y - 1) * 1_4, I_4); the
//     class means are 4 standard deviations apart.
//   XorMulticlass: x ~ U(-1, 1)^4; y = 2 [x0 > 0] + [x0 x1 > 0] (4 classes).
//   LinearRegression: x ~ N(0, I_2); y = 2 x0 - x1, no noise.
//   FriedmanRegression: x ~ U(0, 1)^10;
//     y = 10 sin(pi x0 x1) + 20 (x2 - 0.5)^2 + 10 x3 + 5 x4 + N(0, 1).
// Not standardized.
TabularDataset make_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed,
                              const SplitSpec& split = {});

}  // namespace tabens

#endif  // TABENS_DATA_HPP_
