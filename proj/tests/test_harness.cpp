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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "tabens/config.hpp"
#include "tabens/harness.hpp"
#include "tabens/results_io.hpp"

namespace tabens {
namespace {

ExperimentConfig tiny_experiment(SyntheticKind kind) {
  ExperimentConfig cfg;
  cfg.dataset.synthetic = kind;
  cfg.dataset.synthetic_rows = 150;
  cfg.dataset.data_seed = 5;
  cfg.model.task = make_synthetic(kind, 10, 0).task();
  cfg.model.members = 3;
  cfg.model.rank = 2;
  cfg.model.width = 8;
  cfg.model.blocks = 1;
  cfg.model.n_bins = 4;
  cfg.train.max_epochs = 2;
  cfg.train.batch_size = 32;
  cfg.train.lr = 1e-2;
  return cfg;
}

ExperimentConfig full_grid_experiment() {
  auto cfg = tiny_experiment(SyntheticKind::TwoGaussiansBinary);
  cfg.axes = {{"rank", grid_ranks()}, {"sigma_init", grid_sigmas()}};
  cfg.seeds = {0, 1};
  return cfg;
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

TEST(Parameters, ApplyResolvesNamesAndAliases) {
  ModelConfig m;
  TrainConfig t;
  apply_parameter(m, t, "K", 8);
  apply_parameter(m, t, "r", 16);
  apply_parameter(m, t, "sigma_init", 0.3);
  apply_parameter(m, t, "lr", 1e-4);
  apply_parameter(m, t, "wd", 0.01);
  EXPECT_EQ(m.members, 8u);
  EXPECT_EQ(m.rank, 16u);
  EXPECT_EQ(m.sigma_init, 0.3);
  EXPECT_EQ(t.lr, 1e-4);
  EXPECT_EQ(t.weight_decay, 0.01);
  EXPECT_THROW(apply_parameter(m, t, "depth", 1), std::invalid_argument);
  EXPECT_THROW(apply_parameter(m, t, "rank", 2.5), std::invalid_argument);
}

TEST(ExperimentConfigTest, UnknownAxisIsRejected) {
  auto cfg = tiny_experiment(SyntheticKind::TwoGaussiansBinary);
  cfg.axes = {{"learning_rate", {0.1}}};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.axes.clear();
  cfg.seeds.clear();
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ConfigFile, JsonRoundTripAndUnknownKeys) {
  auto cfg = full_grid_experiment();
  cfg.variants = {AdapterKind::AdditiveLowRank, AdapterKind::Rank1Mask};
  cfg.epoch_trace = true;
  EXPECT_EQ(experiment_from_json(to_json(cfg)), cfg);
  auto j = to_json(cfg);
  j["model"]["depth"] = 3;
  EXPECT_THROW(experiment_from_json(j), ConfigError);
  j = to_json(cfg);
  j["colour"] = "blue";
  EXPECT_THROW(experiment_from_json(j), ConfigError);
  EXPECT_EQ(hpo_space_from_json(to_json(HpoSpace::standard())), HpoSpace::standard());
}

TEST(Grid, ExpansionOrderIsVariantsAxesSeeds) {
  auto cfg = tiny_experiment(SyntheticKind::TwoGaussiansBinary);
  cfg.variants = {AdapterKind::MultiplicativeLowRank, AdapterKind::AdditiveLowRank};
  cfg.axes = {{"rank", {1, 2}}, {"sigma_init", {0.1, 0.5, 1.0}}};
  cfg.seeds = {7, 8};
  const auto cells = expand_grid(cfg);
  ASSERT_EQ(cells.size(), 24u);
  std::size_t i = 0;
  for (auto v : cfg.variants) {
    for (double r : cfg.axes[0].values) {
      for (double s : cfg.axes[1].values) {
        for (auto seed : cfg.seeds) {
          EXPECT_EQ(cells[i].model.variant, v);
          EXPECT_EQ(cells[i].model.rank, static_cast<std::size_t>(r));
          EXPECT_EQ(cells[i].model.sigma_init, s);
          EXPECT_EQ(cells[i].model.seed, seed);
          EXPECT_EQ(cells[i].train.seed, seed);
          ++i;
        }
      }
    }
  }
}

TEST(Grid, RequiresAnAxis) {
  auto cfg = tiny_experiment(SyntheticKind::TwoGaussiansBinary);
  EXPECT_THROW(run_grid(cfg, load_dataset(cfg.dataset)), std::invalid_argument);
}

class FullGrid : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto cfg = full_grid_experiment();
    result_ = new GridResult(run_grid(cfg, load_dataset(cfg.dataset), 4));
  }
  static void TearDownTestSuite() {
    delete result_;
    result_ = nullptr;
  }
  static GridResult* result_;
};
GridResult* FullGrid::result_ = nullptr;

TEST_F(FullGrid, SixtyRecordsThirtyCells) {
  EXPECT_EQ(result_->records.size(), 60u);
  EXPECT_EQ(result_->cells.size(), 30u);
  for (const auto& c : result_->cells) EXPECT_EQ(c.n_seeds, 2u);
}

TEST_F(FullGrid, CsvHasHeaderPlusOneRowPerRecord) {
  const std::string csv = records_to_csv(result_->records);
  EXPECT_EQ(count_lines(csv), 61u);
  const auto& cols = record_columns();
  const std::vector<std::string> leading = {"dataset", "variant", "K", "r", "sigma_init", "seed"};
  EXPECT_TRUE(std::equal(leading.begin(), leading.end(), cols.begin()));
}

TEST_F(FullGrid, CsvReimportIsValueIdentical) {
  const auto back = parse_records_csv(records_to_csv(result_->records));
  ASSERT_EQ(back.size(), result_->records.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i], result_->records[i]) << i;
  EXPECT_EQ(aggregate(back), result_->cells);
}

TEST_F(FullGrid, JsonLinesReimportIsValueIdentical) {
  const auto back = parse_records_json_lines(records_to_json_lines(result_->records));
  EXPECT_EQ(back, result_->records);
}

TEST_F(FullGrid, AggregatesMatchBruteForce) {
  for (const auto& cell : result_->cells) {
    std::vector<double> kl;
    for (const auto& r : result_->records) {
      if (r.rank == cell.key.rank && r.sigma_init == cell.key.sigma_init) kl.push_back(*r.report.pairwise_kl);
    }
    ASSERT_EQ(kl.size(), 2u);
    const double mean = (kl[0] + kl[1]) / 2.0;
    const double sd = std::sqrt(((kl[0] - mean) * (kl[0] - mean) + (kl[1] - mean) * (kl[1] - mean)) / 1.0);
    EXPECT_EQ(*cell.mean.pairwise_kl, mean);
    EXPECT_NEAR(*cell.std.pairwise_kl, sd, 1e-15 * (1.0 + sd));
  }
}

TEST_F(FullGrid, PivotIsRanksBySigmas) {
  const auto pivots = make_pivots(result_->cells, "pairwise_kl");
  ASSERT_EQ(pivots.size(), 1u);
  EXPECT_EQ(pivots[0].ranks.size(), 5u);
  EXPECT_EQ(pivots[0].sigmas.size(), 6u);
  for (const auto& row : pivots[0].values) {
    ASSERT_EQ(row.size(), 6u);
    for (const auto& v : row) EXPECT_TRUE(v.has_value());
  }
  // Header line, column line, 5 value rows.
  std::istringstream in(pivots_to_csv(pivots));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 7u);
  for (std::size_t i = 1; i < lines.size(); ++i) EXPECT_EQ(std::count(lines[i].begin(), lines[i].end(), ','), 6);
}

TEST_F(FullGrid, RerunIsByteIdenticalRegardlessOfWorkers) {
  const auto cfg = full_grid_experiment();
  const auto again = run_grid(cfg, load_dataset(cfg.dataset), 1);
  EXPECT_EQ(records_to_csv(again.records), records_to_csv(result_->records));
  EXPECT_EQ(aggregates_to_csv(again.cells), aggregates_to_csv(result_->cells));
}

TEST_F(FullGrid, ExportWritesDataAggregateAndPivot) {
  std::filesystem::create_directories(TABENS_TEST_TMPDIR);
  const std::string path = std::string(TABENS_TEST_TMPDIR) + "/grid.csv";
  export_results(*result_, path, ExportFormat::Csv);
  EXPECT_EQ(read_text_file(path), records_to_csv(result_->records));
  EXPECT_TRUE(std::filesystem::exists(path + ".aggregate.csv"));
  EXPECT_TRUE(std::filesystem::exists(path + ".pivot.csv"));
  EXPECT_THROW(export_results(*result_, "/nonexistent-dir/x.csv", ExportFormat::Csv), ExportError);
}

TEST(RunSingle, ZeroSigmaCollapsesDiversity) {
  for (auto variant : {AdapterKind::MultiplicativeLowRank, AdapterKind::AdditiveLowRank, AdapterKind::Rank1Mask}) {
    auto cfg = tiny_experiment(SyntheticKind::XorMulticlass);
    cfg.model.sigma_init = 0.0;
    cfg.variants = {variant};
    const auto rec = run_single(cfg);
    EXPECT_EQ(*rec.report.pairwise_kl, 0.0);
    EXPECT_EQ(*rec.report.disagreement, 0.0);

    auto reg = tiny_experiment(SyntheticKind::FriedmanRegression);
    reg.model.sigma_init = 0.0;
    reg.variants = {variant};
    EXPECT_EQ(*run_single(reg).report.ambiguity, 0.0);
  }
}

TEST(RunSingle, SingleMemberHasNoDiversity) {
  auto cfg = tiny_experiment(SyntheticKind::TwoGaussiansBinary);
  cfg.model.members = 1;
  const auto rec = run_single(cfg);
  EXPECT_FALSE(rec.report.pairwise_kl.has_value());
  EXPECT_FALSE(rec.report.disagreement.has_value());
  EXPECT_TRUE(rec.report.accuracy.has_value());
}

TEST(RunSingle, SameSeedSameRecord) {
  const auto cfg = tiny_experiment(SyntheticKind::FriedmanRegression);
  EXPECT_EQ(run_single(cfg), run_single(cfg));
}

TEST(Gap, TracesHaveCeilEpochsOverIntervalPoints) {
  auto cfg = tiny_experiment(SyntheticKind::TwoGaussiansBinary);
  cfg.train.max_epochs = 7;
  cfg.trace_interval = 3;
  cfg.seeds = {0, 1};
  const auto res = run_gap_experiment(cfg, load_dataset(cfg.dataset), 2);
  ASSERT_EQ(res.records.size(), 4u);
  for (const auto& r : res.records) {
    ASSERT_EQ(r.trace.size(), 3u);
    EXPECT_EQ(r.trace[0].epoch, 3u);
    EXPECT_EQ(r.trace[2].epoch, 7u);
    EXPECT_EQ(r.stopped_epoch, 7u);
    ASSERT_TRUE(r.initial_trace.has_value());
    EXPECT_GT(*r.initial_trace, 0.0);
  }
  EXPECT_EQ(res.records[0].variant, AdapterKind::MultiplicativeLowRank);
  EXPECT_EQ(res.records[2].variant, AdapterKind::AdditiveLowRank);
  const std::string traces = traces_to_csv(res.records);
  EXPECT_EQ(count_lines(traces), 1u + 4u * 4u);
}

TEST(Hpo, BudgetOneReturnsThatTrial) {
  const auto cfg = tiny_experiment(SyntheticKind::FriedmanRegression);
  const auto res = run_hpo(load_dataset(cfg.dataset), cfg.model, cfg.train, HpoSpace::standard(), 1, 3);
  ASSERT_EQ(res.trials.size(), 1u);
  EXPECT_EQ(res.best, 0u);
}

TEST(Hpo, SinglePointSpaceReturnsThatPoint) {
  const auto cfg = tiny_experiment(SyntheticKind::FriedmanRegression);
  HpoSpace space;
  space.params = {{"rank", HpoParam::Kind::Categorical, {4}, 0, 0, 1, false},
                  {"blocks", HpoParam::Kind::IntRange, {}, 2, 2, 1, false}};
  const auto res = run_hpo(load_dataset(cfg.dataset), cfg.model, cfg.train, space, 3, 1);
  EXPECT_EQ(res.trials[res.best].model.rank, 4u);
  EXPECT_EQ(res.trials[res.best].model.blocks, 2u);
}

TEST(Hpo, SamplesStayInsideTheStandardSpace) {
  const auto cfg = tiny_experiment(SyntheticKind::FriedmanRegression);
  HpoSpace space = HpoSpace::standard();
  space.validate();
  // Cheap trials: shrink width and blocks so sampling is what is exercised.
  for (auto& p : space.params) {
    if (p.name == "width") p = {"width", HpoParam::Kind::IntRange, {}, 16, 32, 16, false};
    if (p.name == "members") p.choices = {2, 4};
  }
  const auto res = run_hpo(load_dataset(cfg.dataset), cfg.model, cfg.train, space, 12, 9);
  for (const auto& t : res.trials) {
    EXPECT_GE(t.model.n_bins, 2u);
    EXPECT_LE(t.model.n_bins, 128u);
    EXPECT_GE(t.train.lr, 1e-4);
    EXPECT_LE(t.train.lr, 5e-3);
    EXPECT_TRUE(t.train.weight_decay == 0.0 || (t.train.weight_decay >= 1e-4 && t.train.weight_decay <= 0.1));
    EXPECT_LE(t.model.dropout, 0.5);
    EXPECT_GE(t.model.blocks, 1u);
    EXPECT_LE(t.model.blocks, 4u);
  }
}

TEST(Hpo, BestIsNoWorseThanMedianOnRegression) {
  auto cfg = tiny_experiment(SyntheticKind::FriedmanRegression);
  cfg.dataset.synthetic_rows = 300;
  cfg.train.max_epochs = 4;
  HpoSpace space = HpoSpace::standard();
  for (auto& p : space.params) {
    if (p.name == "width") p = {"width", HpoParam::Kind::IntRange, {}, 16, 64, 16, false};
    if (p.name == "members") p.choices = {2, 4};
  }
  const auto res = run_hpo(load_dataset(cfg.dataset), cfg.model, cfg.train, space, 20, 4);
  ASSERT_EQ(res.trials.size(), 20u);
  EXPECT_FALSE(res.higher_is_better);
  std::vector<double> rmse;
  for (const auto& t : res.trials) rmse.push_back(t.val_metric);
  std::sort(rmse.begin(), rmse.end());
  const double median = 0.5 * (rmse[9] + rmse[10]);
  EXPECT_LE(res.trials[res.best].val_metric, median);
  EXPECT_EQ(res.trials[res.best].val_metric, rmse.front());
}

}  // namespace
}  // namespace tabens
