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

#ifndef TABENS_HARNESS_HPP_
#define TABENS_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tabens/data.hpp"
#include "tabens/metrics.hpp"
#include "tabens/model.hpp"
#include "tabens/trainer.hpp"

namespace tabens {

// Either a CSV file with its schema sidecar or a synthetic generator.
struct DatasetRef {
  std::string name;  // defaults to the file stem or generator name
  std::string csv_path;
  std::string schema_path;
  std::optional<SyntheticKind> synthetic;
  std::size_t synthetic_rows = 4000;
  std::uint64_t data_seed = 0;  // generator seed
  SplitSpec split;
  bool standardize = true;

  friend bool operator==(const DatasetRef&, const DatasetRef&) = default;
};

TabularDataset load_dataset(const DatasetRef& ref);
std::string dataset_name(const DatasetRef& ref);

struct SweepAxis {
  std::string parameter;
  std::vector<double> values;

  friend bool operator==(const SweepAxis&, const SweepAxis&) = default;
};

// Names accepted by sweep axes and HPO parameters.
//   model: members (K), rank (r), sigma_init, blocks (L), width (d), dropout, n_bins
//   train: lr, weight_decay, batch_size, max_epochs, patience, clip_norm
bool is_config_parameter(const std::string& name);
// Throws std::invalid_argument for an unknown name or a non-integral value of
// an integer field.
void apply_parameter(ModelConfig& model, TrainConfig& train, const std::string& name, double value);

struct ExperimentConfig {
  DatasetRef dataset;
  ModelConfig model;
  TrainConfig train;
  std::vector<SweepAxis> axes;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<AdapterKind> variants = {AdapterKind::MultiplicativeLowRank};
  // Record the diversity trace every trace_interval epochs when set.
  bool epoch_trace = false;
  std::size_t trace_interval = 5;
  bool early_stopping = true;
  bool restore_best = true;

  // Throws std::invalid_argument on unknown axis names, empty seed or variant
  // lists, or an invalid base configuration.
  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct TracePoint {
  std::size_t epoch = 0;
  double value = 0.0;  // pairwise KL (classification) or ambiguity (regression)

  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

struct SweepRecord {
  std::string dataset;
  AdapterKind variant = AdapterKind::MultiplicativeLowRank;
  std::size_t members = 0;
  std::size_t rank = 0;
  double sigma_init = 0.0;
  std::uint64_t seed = 0;
  DiversityReport report;
  // Remaining configuration, so a record identifies its cell on any axis.
  std::size_t blocks = 0;
  std::size_t width = 0;
  double dropout = 0.0;
  std::size_t n_bins = 0;
  double lr = 0.0;
  double weight_decay = 0.0;
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
  std::optional<double> initial_trace;  // before the first update
  std::vector<TracePoint> trace;

  friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

struct RunOptions {
  bool early_stopping = true;
  bool restore_best = true;
  std::size_t trace_interval = 0;  // 0 disables the trace
};

// init -> fit -> predict on the test split -> full DiversityReport.
// model.seed seeds the initialization and train.seed the batch order.
SweepRecord run_single(const TabularDataset& ds, const ModelConfig& model, const TrainConfig& train,
                       const RunOptions& options = {});
// First variant and first seed of `cfg`, axes ignored.
SweepRecord run_single(const ExperimentConfig& cfg);

struct CellAggregate {
  SweepRecord key;  // seed, report and trace unused
  std::size_t n_seeds = 0;
  DiversityReport mean;
  // Sample standard deviation over seeds (n - 1); 0 with a single seed.
  DiversityReport std;

  friend bool operator==(const CellAggregate&, const CellAggregate&) = default;
};

// True when two records belong to the same configuration cell.
bool same_cell(const SweepRecord& a, const SweepRecord& b);
// Cells in order of first appearance.
std::vector<CellAggregate> aggregate(const std::vector<SweepRecord>& records);

struct GridResult {
  std::vector<SweepRecord> records;
  std::vector<CellAggregate> cells;
};

struct GridCell {
  ModelConfig model;
  TrainConfig train;
};

// Cartesian product in the order variants x axis_1 x ... x axis_n x seeds,
// with the last factor varying fastest.
std::vector<GridCell> expand_grid(const ExperimentConfig& cfg);

// Cells run on up to `workers` threads; records come back in expand_grid order
// regardless of completion order. workers == 0 uses the hardware concurrency.
GridResult run_grid(const ExperimentConfig& cfg, const TabularDataset& ds, std::size_t workers = 1);
GridResult run_grid(const ExperimentConfig& cfg, std::size_t workers = 1);

// Default grids.
std::vector<double> grid_ranks();          // {1, 2, 4, 8, 16}
std::vector<double> grid_sigmas();         // {0.1, 0.3, 0.5, 1, 2, 3}
std::vector<double> axis_sweep_sigmas();   // {0.1, 0.3, 0.5, 1, 2}

// Multiplicative and additive runs per seed with identical configuration and
// no early stopping. Each record carries its KL trace.
GridResult run_gap_experiment(const ExperimentConfig& cfg, const TabularDataset& ds,
                              std::size_t workers = 1);

struct HpoParam {
  enum class Kind { Categorical, IntRange, Uniform, LogUniform };
  std::string name;
  Kind kind = Kind::Categorical;
  std::vector<double> choices;  // Categorical
  double low = 0.0;             // ranges, inclusive
  double high = 0.0;
  double step = 1.0;            // IntRange
  // Draw 0 with probability 1/2, else from the distribution ({0, dist}).
  bool zero_or = false;

  friend bool operator==(const HpoParam&, const HpoParam&) = default;
};

struct HpoSpace {
  std::vector<HpoParam> params;

  // K {16, 32}; r {1, 2, 4, 8, 16}; sigma_init {0.1, 0.3, 0.5, 1}; width
  // UniformInt[64, 1024] step 16; blocks UniformInt[1, 4]; lr
  // LogUniform[1e-4, 5e-3]; weight_decay {0, LogUniform[1e-4, 1e-1]}; dropout
  // {0, Uniform[0, 0.5]}; n_bins UniformInt[2, 128].
  static HpoSpace standard();
  // Throws std::invalid_argument on unknown names or empty ranges.
  void validate() const;
  friend bool operator==(const HpoSpace&, const HpoSpace&) = default;
};

struct HpoTrial {
  std::size_t index = 0;
  ModelConfig model;
  TrainConfig train;
  double val_metric = 0.0;
  std::size_t best_epoch = 0;
};

struct HpoResult {
  std::vector<HpoTrial> trials;
  std::size_t best = 0;  // index into trials
  bool higher_is_better = false;
};

// Seeded random search without pruning. Trials use the base seeds; the
// sampler uses `seed`. Ties keep the earliest trial.
HpoResult run_hpo(const TabularDataset& ds, const ModelConfig& base_model,
                  const TrainConfig& base_train, const HpoSpace& space, std::size_t budget,
                  std::uint64_t seed);

}  // namespace tabens

#endif  // TABENS_HARNESS_HPP_
