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

// Command-line front end: training, diversity grids, axis sweeps, the
// multiplicative/additive gap experiment, random search, the expressivity
// check and metric recomputation from a predictions dump.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tabens/checkpoint.hpp"
#include "tabens/config.hpp"
#include "tabens/expressivity.hpp"
#include "tabens/harness.hpp"
#include "tabens/results_io.hpp"

namespace {

using namespace tabens;

struct CommonOptions {
  std::string config;
  std::string data;
  std::string schema;
  std::string seeds;
  std::string out;
  std::string format = "csv";
  std::size_t workers = 1;
};

void add_common(CLI::App* app, CommonOptions& o, bool needs_out) {
  app->add_option("--config", o.config, "Experiment config (JSON)");
  app->add_option("--data", o.data, "CSV file, or synthetic:<generator>");
  app->add_option("--schema", o.schema, "Schema sidecar for a CSV dataset");
  app->add_option("--seeds", o.seeds, "Comma-separated seeds, e.g. 0,1,2");
  auto* out = app->add_option("--out", o.out, "Output path");
  if (needs_out) out->required();
  app->add_option("--format", o.format, "Record format")->check(CLI::IsMember({"csv", "json-lines"}));
  app->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const unsigned long long v = std::stoull(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad seed '" + item + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw std::invalid_argument("--seeds is empty");
  return seeds;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) values.push_back(std::stod(item));
  }
  return values;
}

// Config file first, then command-line overrides. The dataset's task wins
// over the model config's.
std::pair<ExperimentConfig, TabularDataset> resolve(const CommonOptions& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_experiment(o.config);
  if (!o.data.empty()) {
    cfg.dataset = DatasetRef{};
    const std::string prefix = "synthetic:";
    if (o.data.rfind(prefix, 0) == 0) {
      cfg.dataset.synthetic = parse_synthetic_kind(o.data.substr(prefix.size()));
    } else {
      cfg.dataset.csv_path = o.data;
      cfg.dataset.schema_path = o.schema;
    }
  }
  if (!o.seeds.empty()) cfg.seeds = parse_seeds(o.seeds);
  TabularDataset ds = load_dataset(cfg.dataset);
  cfg.model.task = ds.task();
  return {cfg, std::move(ds)};
}

void write_records(const GridResult& result, const CommonOptions& o) {
  export_results(result, o.out, parse_export_format(o.format));
  std::cout << "wrote " << result.records.size() << " records to " << o.out << "\n";
}

void print_cells(const std::vector<CellAggregate>& cells) {
  const std::string metric = default_pivot_metric(cells);
  for (const auto& c : cells) {
    const auto mean = report_field(c.mean, metric);
    const auto sd = report_field(c.std, metric);
    std::printf("%s %s K=%zu r=%zu sigma=%g  %s=%.6g +- %.3g  score=%.6g\n", c.key.dataset.c_str(),
                std::string(to_string(c.key.variant)).c_str(), c.key.members, c.key.rank,
                c.key.sigma_init, metric.c_str(), mean.value_or(0.0), sd.value_or(0.0),
                c.mean.accuracy.value_or(c.mean.rmse.value_or(0.0)));
  }
}

int cmd_train(const CommonOptions& o) {
  auto [cfg, ds] = resolve(o);
  cfg.validate();
  ModelConfig mc = cfg.model;
  TrainConfig tc = cfg.train;
  mc.variant = cfg.variants.front();
  mc.seed = tc.seed = cfg.seeds.front();
  EnsembleModel model = build_model(mc, ds);
  FitOptions fo;
  fo.early_stopping = cfg.early_stopping;
  fo.restore_best = cfg.restore_best;
  const TrainReport report = fit(model, ds, tc, fo);
  save_checkpoint(model, o.out + ".ckpt.json");
  write_train_report(report, o.out + ".train.jsonl");
  const MemberPredictions preds = predict_rows(model, ds, ds.test);
  write_text_file(o.out + ".predictions.json", predictions_to_json(preds).dump() + "\n");
  std::optional<double> variance;
  if (!mc.task.is_classification() && ds.raw_train_target_variance() > 0.0) {
    variance = ds.raw_train_target_variance();
  }
  const auto metrics = metrics_to_json(preds, evaluate(preds, variance));
  write_text_file(o.out + ".metrics.json", metrics.dump(2) + "\n");
  std::cout << "best epoch " << report.best_epoch << " of " << report.stopped_epoch
            << ", validation " << report.best_val_metric << "\n"
            << metrics.dump(2) << "\n";
  return 0;
}

int cmd_grid(const CommonOptions& o) {
  auto [cfg, ds] = resolve(o);
  if (cfg.axes.empty()) cfg.axes = {{"rank", grid_ranks()}, {"sigma_init", grid_sigmas()}};
  const GridResult result = run_grid(cfg, ds, o.workers);
  write_records(result, o);
  print_cells(result.cells);
  return 0;
}

int cmd_axis_sweep(const CommonOptions& o, const std::string& axis, const std::string& values) {
  auto [cfg, ds] = resolve(o);
  std::vector<double> v = parse_values(values);
  if (v.empty()) v = (axis == "rank" || axis == "r") ? grid_ranks() : axis_sweep_sigmas();
  cfg.axes = {{axis, v}};
  const GridResult result = run_grid(cfg, ds, o.workers);
  write_records(result, o);
  print_cells(result.cells);
  return 0;
}

int cmd_gap(const CommonOptions& o) {
  auto [cfg, ds] = resolve(o);
  const GridResult result = run_gap_experiment(cfg, ds, o.workers);
  write_records(result, o);
  write_text_file(o.out + ".trace.csv", traces_to_csv(result.records));
  for (const auto& c : result.cells) {
    std::printf("%s end-of-training diversity %.6g\n", std::string(to_string(c.key.variant)).c_str(),
                report_field(c.mean, default_pivot_metric(result.cells)).value_or(0.0));
  }
  return 0;
}

int cmd_hpo(const CommonOptions& o, std::size_t budget, std::uint64_t seed, bool budget_set,
            bool seed_set) {
  auto [cfg, ds] = resolve(o);
  HpoSettings settings;
  if (!o.config.empty()) settings = read_hpo_settings(read_json_file(o.config));
  if (budget_set) settings.budget = budget;
  if (seed_set) settings.seed = seed;
  cfg.model.seed = cfg.train.seed = cfg.seeds.front();
  cfg.model.variant = cfg.variants.front();
  const HpoResult result = run_hpo(ds, cfg.model, cfg.train, settings.space, settings.budget, settings.seed);
  std::string log;
  for (const auto& t : result.trials) {
    nlohmann::json j = {{"trial", t.index},
                        {"model", to_json(t.model)},
                        {"train", to_json(t.train)},
                        {"val_metric", t.val_metric},
                        {"best_epoch", t.best_epoch},
                        {"best", t.index == result.best}};
    log += j.dump() + "\n";
  }
  write_text_file(o.out, log);
  const auto& best = result.trials[result.best];
  std::cout << "best trial " << best.index << " validation " << best.val_metric << "\n"
            << nlohmann::json{{"model", to_json(best.model)}, {"train", to_json(best.train)}}.dump(2)
            << "\n";
  return 0;
}

int cmd_expressivity(std::size_t trials, std::uint64_t seed) {
  bool all_ok = true;
  for (std::size_t t = 0; t < trials; ++t) {
    const ExpressivityVerdict v = expressivity_trial(seed, t);
    nlohmann::json j = {{"trial", v.trial},
                        {"m", v.m},
                        {"n", v.n},
                        {"K", v.members},
                        {"embed_max_rel_error", v.embed_max_rel_error},
                        {"embed_ok", v.embed_ok},
                        {"be_pair_bound", v.be_pair_bound},
                        {"counterexample_bound", v.counterexample_bound},
                        {"counterexample_determinant", v.counterexample_determinant},
                        {"verdict", v.ok() ? "pass" : "fail"}};
    std::cout << j.dump() << "\n";
    all_ok = all_ok && v.ok();
  }
  return all_ok ? 0 : 1;
}

int cmd_metrics(const std::string& predictions, const std::string& out, std::size_t bins,
                std::optional<double> variance) {
  const MemberPredictions preds =
      predictions_from_json(nlohmann::json::parse(read_text_file(predictions)));
  const auto metrics = metrics_to_json(preds, evaluate(preds, variance, bins));
  if (!out.empty()) write_text_file(out, metrics.dump(2) + "\n");
  std::cout << metrics.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank multiplicative ensembles for tabular data"};
  app.require_subcommand(1);

  CommonOptions train_o, grid_o, sweep_o, gap_o, hpo_o;
  auto* train = app.add_subcommand("train", "Train one model and evaluate it on the test split");
  add_common(train, train_o, true);

  auto* grid = app.add_subcommand("grid", "Diversity grid over the config axes (default r x sigma_init)");
  add_common(grid, grid_o, true);

  auto* sweep = app.add_subcommand("axis-sweep", "Sweep one configuration parameter");
  add_common(sweep, sweep_o, true);
  std::string axis = "sigma_init";
  std::string axis_values;
  sweep->add_option("--axis", axis, "Parameter to sweep (rank or sigma_init, or any config field)");
  sweep->add_option("--values", axis_values, "Comma-separated values");

  auto* gap = app.add_subcommand("gap", "Multiplicative vs additive diversity trace");
  add_common(gap, gap_o, true);

  auto* hpo = app.add_subcommand("hpo", "Seeded random hyperparameter search");
  add_common(hpo, hpo_o, true);
  std::size_t budget = 20;
  std::uint64_t hpo_seed = 0;
  auto* budget_opt = hpo->add_option("--budget", budget, "Number of trials");
  auto* seed_opt = hpo->add_option("--hpo-seed", hpo_seed, "Sampler seed");

  auto* expr = app.add_subcommand("expressivity-check", "Randomized layer-wise expressivity check");
  std::size_t trials = 100;
  std::uint64_t expr_seed = 0;
  expr->add_option("--trials", trials, "Number of trials");
  expr->add_option("--seed", expr_seed, "Seed");

  auto* metrics = app.add_subcommand("metrics", "Recompute metrics from a predictions dump");
  std::string predictions;
  std::string metrics_out;
  std::size_t bins = kDefaultEceBins;
  double variance = 0.0;
  metrics->add_option("--predictions", predictions, "Predictions dump (JSON)")->required();
  metrics->add_option("--out", metrics_out, "Metric dump path");
  metrics->add_option("--bins", bins, "ECE bins");
  auto* var_opt = metrics->add_option("--train-variance", variance,
                                      "Training target variance for normalized ambiguity");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(train_o);
    if (*grid) return cmd_grid(grid_o);
    if (*sweep) return cmd_axis_sweep(sweep_o, axis, axis_values);
    if (*gap) return cmd_gap(gap_o);
    if (*hpo) return cmd_hpo(hpo_o, budget, hpo_seed, budget_opt->count() > 0, seed_opt->count() > 0);
    if (*expr) return cmd_expressivity(trials, expr_seed);
    if (*metrics) {
      return cmd_metrics(predictions, metrics_out, bins,
                         var_opt->count() > 0 ? std::optional<double>(variance) : std::nullopt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
