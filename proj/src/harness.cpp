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

#include "tabens/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <stdexcept>
#include <thread>

namespace tabens {

TabularDataset load_dataset(const DatasetRef& ref) {
  TabularDataset ds;
  if (ref.synthetic) {
    ds = make_synthetic(*ref.synthetic, ref.synthetic_rows, ref.data_seed, ref.split);
  } else {
    if (ref.csv_path.empty() || ref.schema_path.empty()) {
      throw std::invalid_argument("dataset: need either a synthetic generator or csv and schema paths");
    }
    ds = load_csv(ref.csv_path, load_schema(ref.schema_path), ref.split);
  }
  if (ref.standardize) ds = standardize(std::move(ds));
  ds.name = dataset_name(ref);
  return ds;
}

std::string dataset_name(const DatasetRef& ref) {
  if (!ref.name.empty()) return ref.name;
  if (ref.synthetic) return std::string(to_string(*ref.synthetic));
  return std::filesystem::path(ref.csv_path).stem().string();
}

namespace {

enum class ParamTarget { Model, Train };

struct ParamInfo {
  const char* name;
  const char* alias;
  bool integral;
};

constexpr ParamInfo kParams[] = {
    {"members", "K", true},      {"rank", "r", true},          {"sigma_init", "", false},
    {"blocks", "L", true},       {"width", "d", true},         {"dropout", "p_drop", false},
    {"n_bins", "", true},        {"lr", "", false},            {"weight_decay", "wd", false},
    {"batch_size", "", true},    {"max_epochs", "", true},     {"patience", "", true},
    {"clip_norm", "", false},
};

const ParamInfo* find_param(const std::string& name) {
  for (const auto& p : kParams) {
    if (name == p.name || (*p.alias != '\0' && name == p.alias)) return &p;
  }
  return nullptr;
}

}  // namespace

bool is_config_parameter(const std::string& name) { return find_param(name) != nullptr; }

void apply_parameter(ModelConfig& model, TrainConfig& train, const std::string& name, double value) {
  const ParamInfo* info = find_param(name);
  if (info == nullptr) throw std::invalid_argument("unknown configuration parameter '" + name + "'");
  if (info->integral && (!(value >= 0.0) || value != std::floor(value))) {
    throw std::invalid_argument("parameter '" + name + "' needs a non-negative integer, got " +
                                std::to_string(value));
  }
  const std::string canonical = info->name;
  const auto as_size = static_cast<std::size_t>(value);
  if (canonical == "members") model.members = as_size;
  else if (canonical == "rank") model.rank = as_size;
  else if (canonical == "sigma_init") model.sigma_init = value;
  else if (canonical == "blocks") model.blocks = as_size;
  else if (canonical == "width") model.width = as_size;
  else if (canonical == "dropout") model.dropout = value;
  else if (canonical == "n_bins") model.n_bins = as_size;
  else if (canonical == "lr") train.lr = value;
  else if (canonical == "weight_decay") train.weight_decay = value;
  else if (canonical == "batch_size") train.batch_size = as_size;
  else if (canonical == "max_epochs") train.max_epochs = as_size;
  else if (canonical == "patience") train.patience = as_size;
  else if (canonical == "clip_norm") train.clip_norm = value;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("experiment: seeds must not be empty");
  if (variants.empty()) throw std::invalid_argument("experiment: variants must not be empty");
  if (epoch_trace && trace_interval == 0) {
    throw std::invalid_argument("experiment: trace_interval must be positive");
  }
  for (const auto& axis : axes) {
    if (!is_config_parameter(axis.parameter)) {
      throw std::invalid_argument("experiment: unknown axis parameter '" + axis.parameter + "'");
    }
    if (axis.values.empty()) {
      throw std::invalid_argument("experiment: axis '" + axis.parameter + "' has no values");
    }
  }
  for (const auto& cell : expand_grid(*this)) {
    cell.model.validate();
    cell.train.validate();
  }
}

namespace {

std::optional<double> trace_value(const EnsembleModel& model, const TabularDataset& ds,
                                  const Matrix& embedded_test) {
  if (model.config.members < 2) return std::nullopt;
  const auto preds =
      MemberPredictions::from(predict_embedded(model, embedded_test), ds.raw_target_rows(ds.test));
  return model.config.task.is_classification() ? pairwise_kl(preds) : ambiguity(preds);
}

}  // namespace

SweepRecord run_single(const TabularDataset& ds, const ModelConfig& model_cfg,
                       const TrainConfig& train, const RunOptions& options) {
  EnsembleModel model = build_model(model_cfg, ds);
  SweepRecord rec;
  rec.dataset = ds.name;
  rec.variant = model_cfg.variant;
  rec.members = model_cfg.members;
  rec.rank = model_cfg.rank;
  rec.sigma_init = model_cfg.sigma_init;
  rec.seed = model_cfg.seed;
  rec.blocks = model_cfg.blocks;
  rec.width = model_cfg.width;
  rec.dropout = model_cfg.dropout;
  rec.n_bins = model_cfg.n_bins;
  rec.lr = train.lr;
  rec.weight_decay = train.weight_decay;

  FitOptions fit_options;
  fit_options.early_stopping = options.early_stopping;
  fit_options.restore_best = options.restore_best;
  Matrix embedded_test;
  if (options.trace_interval > 0) {
    embedded_test = encode_batch(model.encoder, ds.feature_rows(ds.test));
    if (model_cfg.task.kind == TaskKind::Regression) {
      // Same scaler fit() installs, so the epoch-0 value is in target scale.
      model.output_scaler = ds.target_scaler.fitted
                                ? ds.target_scaler
                                : TargetScaler::fit(ds.target_rows(ds.train));
    }
    rec.initial_trace = trace_value(model, ds, embedded_test);
    const std::size_t every = options.trace_interval;
    const std::size_t last = train.max_epochs;
    fit_options.on_epoch_end = [&, every, last](std::size_t epoch, const EnsembleModel& m) {
      if (epoch % every == 0 || epoch == last) {
        if (auto v = trace_value(m, ds, embedded_test)) rec.trace.push_back({epoch, *v});
      }
    };
  }
  const TrainReport report = fit(model, ds, train, fit_options);
  rec.best_epoch = report.best_epoch;
  rec.stopped_epoch = report.stopped_epoch;

  const auto preds = predict_rows(model, ds, ds.test);
  std::optional<double> variance;
  if (!model_cfg.task.is_classification()) {
    const double v = ds.raw_train_target_variance();
    if (v > 0.0) variance = v;
  }
  rec.report = evaluate(preds, variance);
  return rec;
}

SweepRecord run_single(const ExperimentConfig& cfg) {
  cfg.validate();
  const TabularDataset ds = load_dataset(cfg.dataset);
  ModelConfig model = cfg.model;
  TrainConfig train = cfg.train;
  model.variant = cfg.variants.front();
  model.seed = cfg.seeds.front();
  train.seed = cfg.seeds.front();
  RunOptions options{cfg.early_stopping, cfg.restore_best, cfg.epoch_trace ? cfg.trace_interval : 0};
  return run_single(ds, model, train, options);
}

bool same_cell(const SweepRecord& a, const SweepRecord& b) {
  return a.dataset == b.dataset && a.variant == b.variant && a.members == b.members &&
         a.rank == b.rank && a.sigma_init == b.sigma_init && a.blocks == b.blocks &&
         a.width == b.width && a.dropout == b.dropout && a.n_bins == b.n_bins && a.lr == b.lr &&
         a.weight_decay == b.weight_decay;
}

namespace {

using ReportField = std::optional<double> DiversityReport::*;

constexpr ReportField kReportFields[] = {
    &DiversityReport::pairwise_kl, &DiversityReport::disagreement,
    &DiversityReport::ambiguity,   &DiversityReport::normalized_ambiguity,
    &DiversityReport::ece,         &DiversityReport::accuracy,
    &DiversityReport::rmse,
};

CellAggregate aggregate_cell(const std::vector<const SweepRecord*>& members) {
  CellAggregate cell;
  cell.key = *members.front();
  cell.key.seed = 0;
  cell.key.report = {};
  cell.key.best_epoch = 0;
  cell.key.stopped_epoch = 0;
  cell.key.initial_trace.reset();
  cell.key.trace.clear();
  cell.n_seeds = members.size();
  for (ReportField field : kReportFields) {
    std::vector<double> values;
    for (const SweepRecord* r : members) {
      if ((r->report.*field).has_value()) values.push_back(*(r->report.*field));
    }
    if (values.empty()) continue;
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    cell.mean.*field = mean;
    cell.std.*field = values.size() > 1 ? std::sqrt(sq / static_cast<double>(values.size() - 1)) : 0.0;
  }
  return cell;
}

}  // namespace

std::vector<CellAggregate> aggregate(const std::vector<SweepRecord>& records) {
  std::vector<std::vector<const SweepRecord*>> groups;
  for (const auto& r : records) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return same_cell(*g.front(), r); });
    if (it == groups.end()) {
      groups.push_back({&r});
    } else {
      it->push_back(&r);
    }
  }
  std::vector<CellAggregate> cells;
  cells.reserve(groups.size());
  for (const auto& g : groups) cells.push_back(aggregate_cell(g));
  return cells;
}

std::vector<GridCell> expand_grid(const ExperimentConfig& cfg) {
  std::vector<GridCell> cells;
  for (AdapterKind variant : cfg.variants) {
    std::vector<std::size_t> index(cfg.axes.size(), 0);
    bool done = false;
    while (!done) {
      for (std::uint64_t seed : cfg.seeds) {
        GridCell cell{cfg.model, cfg.train};
        cell.model.variant = variant;
        for (std::size_t a = 0; a < cfg.axes.size(); ++a) {
          apply_parameter(cell.model, cell.train, cfg.axes[a].parameter,
                          cfg.axes[a].values[index[a]]);
        }
        cell.model.seed = seed;
        cell.train.seed = seed;
        cells.push_back(cell);
      }
      // Odometer increment, last axis fastest.
      done = true;
      for (std::size_t a = cfg.axes.size(); a-- > 0;) {
        if (++index[a] < cfg.axes[a].values.size()) {
          done = false;
          break;
        }
        index[a] = 0;
      }
    }
  }
  return cells;
}

namespace {

std::vector<SweepRecord> run_cells(const std::vector<GridCell>& cells, const TabularDataset& ds,
                                   const RunOptions& options, std::size_t workers) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cells.size());
  std::vector<std::optional<SweepRecord>> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        results[i] = run_single(ds, cells[i].model, cells[i].train, options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::vector<SweepRecord> records;
  records.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    records.push_back(std::move(*results[i]));
  }
  return records;
}

}  // namespace

GridResult run_grid(const ExperimentConfig& cfg, const TabularDataset& ds, std::size_t workers) {
  cfg.validate();
  if (cfg.axes.empty()) throw std::invalid_argument("grid: at least one axis is required");
  const RunOptions options{cfg.early_stopping, cfg.restore_best,
                           cfg.epoch_trace ? cfg.trace_interval : 0};
  GridResult result;
  result.records = run_cells(expand_grid(cfg), ds, options, workers);
  result.cells = aggregate(result.records);
  return result;
}

GridResult run_grid(const ExperimentConfig& cfg, std::size_t workers) {
  return run_grid(cfg, load_dataset(cfg.dataset), workers);
}

std::vector<double> grid_ranks() { return {1, 2, 4, 8, 16}; }
std::vector<double> grid_sigmas() { return {0.1, 0.3, 0.5, 1.0, 2.0, 3.0}; }
std::vector<double> axis_sweep_sigmas() { return {0.1, 0.3, 0.5, 1.0, 2.0}; }

GridResult run_gap_experiment(const ExperimentConfig& cfg, const TabularDataset& ds,
                              std::size_t workers) {
  ExperimentConfig gap = cfg;
  gap.axes.clear();
  gap.variants = {AdapterKind::MultiplicativeLowRank, AdapterKind::AdditiveLowRank};
  gap.validate();
  if (gap.trace_interval == 0) throw std::invalid_argument("gap: trace_interval must be positive");
  const RunOptions options{false, false, gap.trace_interval};
  GridResult result;
  result.records = run_cells(expand_grid(gap), ds, options, workers);
  result.cells = aggregate(result.records);
  return result;
}

HpoSpace HpoSpace::standard() {
  using K = HpoParam::Kind;
  HpoSpace s;
  s.params = {
      {"members", K::Categorical, {16, 32}, 0, 0, 1, false},
      {"rank", K::Categorical, {1, 2, 4, 8, 16}, 0, 0, 1, false},
      {"sigma_init", K::Categorical, {0.1, 0.3, 0.5, 1.0}, 0, 0, 1, false},
      {"width", K::IntRange, {}, 64, 1024, 16, false},
      {"blocks", K::IntRange, {}, 1, 4, 1, false},
      {"lr", K::LogUniform, {}, 1e-4, 5e-3, 1, false},
      {"weight_decay", K::LogUniform, {}, 1e-4, 1e-1, 1, true},
      {"dropout", K::Uniform, {}, 0.0, 0.5, 1, true},
      {"n_bins", K::IntRange, {}, 2, 128, 1, false},
  };
  return s;
}

void HpoSpace::validate() const {
  for (const auto& p : params) {
    if (!is_config_parameter(p.name)) {
      throw std::invalid_argument("hpo: unknown parameter '" + p.name + "'");
    }
    switch (p.kind) {
      case HpoParam::Kind::Categorical:
        if (p.choices.empty()) throw std::invalid_argument("hpo: '" + p.name + "' has no choices");
        break;
      case HpoParam::Kind::IntRange:
        if (!(p.step > 0.0) || p.step != std::floor(p.step) || p.low != std::floor(p.low) ||
            p.high != std::floor(p.high)) {
          throw std::invalid_argument("hpo: '" + p.name + "' needs integral bounds and step");
        }
        [[fallthrough]];
      case HpoParam::Kind::Uniform:
        if (!(p.low <= p.high)) throw std::invalid_argument("hpo: '" + p.name + "' has an empty range");
        break;
      case HpoParam::Kind::LogUniform:
        if (!(p.low > 0.0 && p.low <= p.high)) {
          throw std::invalid_argument("hpo: '" + p.name + "' needs 0 < low <= high");
        }
        break;
    }
  }
}

namespace {

double sample_param(const HpoParam& p, Rng& rng) {
  if (p.zero_or && rng.below(2) == 0) return 0.0;
  switch (p.kind) {
    case HpoParam::Kind::Categorical:
      return p.choices[rng.below(p.choices.size())];
    case HpoParam::Kind::IntRange: {
      const auto count = static_cast<std::uint64_t>((p.high - p.low) / p.step) + 1;
      return p.low + p.step * static_cast<double>(rng.below(count));
    }
    case HpoParam::Kind::Uniform:
      return rng.uniform(p.low, p.high);
    case HpoParam::Kind::LogUniform:
      return std::exp(rng.uniform(std::log(p.low), std::log(p.high)));
  }
  return 0.0;
}

}  // namespace

HpoResult run_hpo(const TabularDataset& ds, const ModelConfig& base_model,
                  const TrainConfig& base_train, const HpoSpace& space, std::size_t budget,
                  std::uint64_t seed) {
  if (budget == 0) throw std::invalid_argument("hpo: budget must be >= 1");
  space.validate();
  HpoResult result;
  result.higher_is_better = higher_is_better(base_model.task);
  const Rng root(seed);
  for (std::size_t i = 0; i < budget; ++i) {
    Rng rng = root.fork(i);
    HpoTrial trial;
    trial.index = i;
    trial.model = base_model;
    trial.train = base_train;
    for (const auto& p : space.params) apply_parameter(trial.model, trial.train, p.name, sample_param(p, rng));
    EnsembleModel model = build_model(trial.model, ds);
    const TrainReport report = fit(model, ds, trial.train);
    trial.val_metric = report.best_val_metric;
    trial.best_epoch = report.best_epoch;
    const bool better = result.trials.empty() ||
                        (result.higher_is_better
                             ? trial.val_metric > result.trials[result.best].val_metric
                             : trial.val_metric < result.trials[result.best].val_metric);
    result.trials.push_back(trial);
    if (better) result.best = i;
  }
  return result;
}

}  // namespace tabens
