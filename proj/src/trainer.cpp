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

#include "tabens/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace tabens {

TargetScaler TargetScaler::fit(std::span<const double> train_targets) {
  TargetScaler s;
  s.fitted = true;
  if (train_targets.empty()) {
    s.degenerate = true;
    return s;
  }
  double mean = 0.0;
  for (double y : train_targets) mean += y;
  mean /= static_cast<double>(train_targets.size());
  double var = 0.0;
  for (double y : train_targets) var += (y - mean) * (y - mean);
  const double sd = std::sqrt(var / static_cast<double>(train_targets.size()));
  s.mean = mean;
  if (sd > 0.0) {
    s.std = sd;
  } else {
    s.degenerate = true;
  }
  return s;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("TrainConfig: " + msg); };
  if (!(lr >= 0.0)) fail("lr must be >= 0");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (batch_size == 0) fail("batch_size must be positive");
  if (max_epochs == 0) fail("max_epochs must be positive");
  if (!(clip_norm > 0.0)) fail("clip_norm must be positive");
  if (patience == 0) fail("patience must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("betas must be in [0, 1)");
  if (!(eps > 0.0)) fail("eps must be positive");
}

AdamState make_adam_state(std::span<const ParamSlot> params) {
  AdamState state;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.value->rows(), p.value->cols());
    state.second_moment.emplace_back(p.value->rows(), p.value->cols());
  }
  return state;
}

void adamw_step(std::span<const ParamSlot> params, AdamState& state, const TrainConfig& config) {
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw ShapeError("adamw_step: optimizer state does not match parameter count");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  const double decay = 1.0 - config.lr * config.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& theta = *params[i].value;
    const Matrix& g = *params[i].grad;
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    if (!theta.same_shape(g) || !theta.same_shape(m) || !theta.same_shape(v)) {
      throw ShapeError("adamw_step: shape mismatch for '" + params[i].name + "'");
    }
    auto td = theta.data();
    auto gd = g.data();
    auto md = m.data();
    auto vd = v.data();
    for (std::size_t j = 0; j < td.size(); ++j) {
      md[j] = config.beta1 * md[j] + (1.0 - config.beta1) * gd[j];
      vd[j] = config.beta2 * vd[j] + (1.0 - config.beta2) * gd[j] * gd[j];
      const double m_hat = md[j] / bias1;
      const double v_hat = vd[j] / bias2;
      td[j] *= decay;
      td[j] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

double global_grad_norm(std::span<const ParamSlot> params) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (double g : p.grad->data()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_gradients(std::span<const ParamSlot> params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (const auto& p : params) {
      for (double& g : p.grad->data()) g *= factor;
    }
  }
  return norm;
}

EnsembleModel build_model(const ModelConfig& config, const TabularDataset& ds) {
  config.validate();
  if (config.task != ds.task()) throw std::invalid_argument("build_model: task does not match dataset");
  PleEmbedding encoder =
      fit_feature_encoder(ds.features, ds.train, ds.feature_kinds, ds.cardinality, config.n_bins);
  Rng rng(config.seed);
  return init_model(config, std::move(encoder), rng);
}

MemberPredictions predict_rows_embedded(const EnsembleModel& model, const TabularDataset& ds,
                                        const Matrix& embedded_all,
                                        std::span<const std::size_t> rows) {
  Matrix batch(rows.size(), embedded_all.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = embedded_all.row(rows[i]);
    std::copy(src.begin(), src.end(), batch.row(i).begin());
  }
  return MemberPredictions::from(predict_embedded(model, batch), ds.raw_target_rows(rows));
}

MemberPredictions predict_rows(const EnsembleModel& model, const TabularDataset& ds,
                               std::span<const std::size_t> rows) {
  return MemberPredictions::from(predict(model, ds.feature_rows(rows)), ds.raw_target_rows(rows));
}

double evaluate_rows(const EnsembleModel& model, const TabularDataset& ds,
                     std::span<const std::size_t> rows) {
  return task_score(predict_rows(model, ds, rows));
}

TrainReport fit(EnsembleModel& model, const TabularDataset& ds, const TrainConfig& config,
                const FitOptions& options) {
  config.validate();
  if (ds.train.empty() || ds.val.empty()) throw std::invalid_argument("fit: empty train or validation split");
  const auto start = std::chrono::steady_clock::now();
  const Task task = model.config.task;

  // Working targets: z-scored for regression. A standardized dataset already
  // carries scaled targets and its scaler maps back to the original scale.
  std::vector<double> targets = ds.targets;
  if (task.kind == TaskKind::Regression) {
    if (ds.target_scaler.fitted) {
      model.output_scaler = ds.target_scaler;
    } else {
      model.output_scaler = TargetScaler::fit(ds.target_rows(ds.train));
      for (double& y : targets) y = model.output_scaler.scale(y);
    }
  }

  const Matrix embedded = encode_batch(model.encoder, ds.features);
  auto slots = parameter_slots(model);
  AdamState adam = make_adam_state(slots);
  Rng root(config.seed);
  Rng shuffle_rng = root.fork(1);
  Rng dropout_rng = root.fork(2);

  TrainReport report;
  report.higher_is_better = higher_is_better(task);
  const auto better = [&](double a, double b) { return report.higher_is_better ? a > b : a < b; };
  EnsembleModel best = model;
  std::size_t since_improvement = 0;

  std::vector<std::size_t> order = ds.train;
  const std::size_t n = order.size();
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    EpochRecord record;
    record.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t end = std::min(n, begin + config.batch_size);
      Matrix xb(end - begin, embedded.cols());
      std::vector<double> yb(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const auto src = embedded.row(order[i]);
        std::copy(src.begin(), src.end(), xb.row(i - begin).begin());
        yb[i - begin] = targets[order[i]];
      }
      zero_grad(model);
      auto fwd = forward_embedded(model, xb, true, &dropout_rng);
      const LossResult loss = member_loss(fwd.outputs, yb, task);
      backward(model, *fwd.cache, loss.output_grads);
      clip_gradients(slots, config.clip_norm);
      const double clipped = global_grad_norm(slots);
      record.max_clipped_grad_norm = std::max(record.max_clipped_grad_norm, clipped);
      adamw_step(slots, adam, config);
      loss_sum += loss.loss * static_cast<double>(end - begin);
    }
    record.train_loss = loss_sum / static_cast<double>(n);
    record.val_metric = task_score(predict_rows_embedded(model, ds, embedded, ds.val));
    report.max_clipped_grad_norm = std::max(report.max_clipped_grad_norm, record.max_clipped_grad_norm);
    report.epochs.push_back(record);
    report.stopped_epoch = epoch;

    if (report.best_epoch == 0 || better(record.val_metric, report.best_val_metric)) {
      report.best_epoch = epoch;
      report.best_val_metric = record.val_metric;
      since_improvement = 0;
      if (options.restore_best) best = model;
    } else {
      ++since_improvement;
    }
    if (options.on_epoch_end) options.on_epoch_end(epoch, model);
    if (options.early_stopping && since_improvement >= config.patience) {
      report.early_stopped = true;
      break;
    }
  }
  if (options.restore_best) model = std::move(best);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_train_report(const TrainReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_train_report: cannot open '" + path + "'");
  for (const auto& e : report.epochs) {
    nlohmann::json j = {{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_metric", e.val_metric},
                        {"max_clipped_grad_norm", e.max_clipped_grad_norm}};
    out << j.dump() << '\n';
  }
  nlohmann::json summary = {{"summary", true},
                            {"best_epoch", report.best_epoch},
                            {"best_val_metric", report.best_val_metric},
                            {"stopped_epoch", report.stopped_epoch},
                            {"early_stopped", report.early_stopped},
                            {"higher_is_better", report.higher_is_better},
                            {"max_clipped_grad_norm", report.max_clipped_grad_norm},
                            {"wall_seconds", report.wall_seconds}};
  out << summary.dump() << '\n';
}

}  // namespace tabens
