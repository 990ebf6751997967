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

#ifndef TABENS_RESULTS_IO_HPP_
#define TABENS_RESULTS_IO_HPP_

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tabens/harness.hpp"
#include "tabens/metrics.hpp"

namespace tabens {

inline constexpr int kResultsSchemaVersion = 1;

struct ExportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExportFormat { Csv, JsonLines };
ExportFormat parse_export_format(std::string_view name);

// Record columns, in order:
//   dataset, variant, K, r, sigma_init, seed, pairwise_kl, disagreement,
//   ambiguity, normalized_ambiguity, ece, accuracy, rmse, L, d, dropout,
//   n_bins, lr, weight_decay, best_epoch, stopped_epoch
// Reals are printed with %.17g so parsing restores them exactly; absent
// metrics are empty cells. The CSV form carries no trace.
const std::vector<std::string>& record_columns();
std::string records_to_csv(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> parse_records_csv(std::string_view text);

// One JSON object per record, including the trace.
std::string records_to_json_lines(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> parse_records_json_lines(std::string_view text);

// Cell key columns, n_seeds, then <metric>_mean and <metric>_std per metric.
std::string aggregates_to_csv(const std::vector<CellAggregate>& cells);

// Mean of one metric laid out with rows = r and columns = sigma_init, both
// ascending, for one (dataset, variant) group.
struct Pivot {
  std::string dataset;
  AdapterKind variant = AdapterKind::MultiplicativeLowRank;
  std::string metric;
  std::vector<std::size_t> ranks;
  std::vector<double> sigmas;
  std::vector<std::vector<std::optional<double>>> values;  // [rank][sigma]
};

// Metric names: pairwise_kl, disagreement, ambiguity, normalized_ambiguity,
// ece, accuracy, rmse. Throws std::invalid_argument for any other name.
std::optional<double> report_field(const DiversityReport& report, std::string_view metric);
// pairwise_kl when any cell has it, else ambiguity.
std::string default_pivot_metric(const std::vector<CellAggregate>& cells);
std::vector<Pivot> make_pivots(const std::vector<CellAggregate>& cells, const std::string& metric);
// Blocks separated by blank lines; each block starts with a
// "# dataset=<name> variant=<kind> metric=<metric>" line, then a header row
// "r,<sigma_1>,...".
std::string pivots_to_csv(const std::vector<Pivot>& pivots);

// dataset, variant, K, r, sigma_init, seed, epoch, value. Epoch 0 is the
// value before training.
std::string traces_to_csv(const std::vector<SweepRecord>& records);

// Writes the data file at `path` plus <path>.aggregate.csv and
// <path>.pivot.csv beside it. Throws ExportError for empty input or an
// unwritable path.
void export_results(const GridResult& result, const std::string& path, ExportFormat format);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// Predictions dump:
//   {"schema_version": 1, "task": "binary", "n_classes": 2,
//    "targets": [...], "members": [[[p_00, p_01], ...], ...]}
nlohmann::json predictions_to_json(const MemberPredictions& preds);
MemberPredictions predictions_from_json(const nlohmann::json& j);

// {"schema_version": 1, "members": K, "samples": N, "metrics": {...}} with
// null for undefined metrics.
nlohmann::json metrics_to_json(const MemberPredictions& preds, const DiversityReport& report);

}  // namespace tabens

#endif  // TABENS_RESULTS_IO_HPP_
