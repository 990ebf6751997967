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

#ifndef TABENS_TRAINER_HPP_
#define TABENS_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tabens/data.hpp"
#include "tabens/metrics.hpp"
#include "tabens/model.hpp"
#include "tabens/target_scaler.hpp"

namespace tabens {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 300;
  double clip_norm = 1.0;
  std::size_t patience = 16;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::size_t step = 0;
};

AdamState make_adam_state(std::span<const ParamSlot> params);

// AdamW with decoupled weight decay:
//   theta <- theta - lr * wd * theta
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
// with bias-corrected moments. Throws ShapeError if the state does not match.
void adamw_step(std::span<const ParamSlot> params, AdamState& state, const TrainConfig& config);

double global_grad_norm(std::span<const ParamSlot> params);

// Rescales every gradient by max_norm / norm when the global L2 norm exceeds
// max_norm. Returns the norm before clipping.
double clip_gradients(std::span<const ParamSlot> params, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_metric = 0.0;
  double max_clipped_grad_norm = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_metric = 0.0;
  std::size_t stopped_epoch = 0;
  bool early_stopped = false;
  bool higher_is_better = false;
  double wall_seconds = 0.0;
  // Largest global gradient norm seen after clipping, over all steps.
  double max_clipped_grad_norm = 0.0;
};

struct FitOptions {
  // Called after every epoch (1-based) with the current parameters.
  std::function<void(std::size_t, const EnsembleModel&)> on_epoch_end;
  bool early_stopping = true;
  bool restore_best = true;
};

// Fits the input encoder on the training rows and initializes a model with
// Rng(config.seed).
EnsembleModel build_model(const ModelConfig& config, const TabularDataset& ds);

// Predictions on `rows`, with regression outputs and targets in the original
// target scale.
MemberPredictions predict_rows(const EnsembleModel& model, const TabularDataset& ds,
                               std::span<const std::size_t> rows);
MemberPredictions predict_rows_embedded(const EnsembleModel& model, const TabularDataset& ds,
                                        const Matrix& embedded_all,
                                        std::span<const std::size_t> rows);

// RMSE (original scale) or accuracy on `rows`.
double evaluate_rows(const EnsembleModel& model, const TabularDataset& ds,
                     std::span<const std::size_t> rows);

// Seeded mini-batch AdamW with gradient clipping. After each epoch the
// validation metric is computed; training stops after `patience` epochs
// without strict improvement, and the best epoch's parameters are restored.
// Regression targets are trained in z-scored space; model.output_scaler is set
// so predictions come back in the original scale.
TrainReport fit(EnsembleModel& model, const TabularDataset& ds, const TrainConfig& config,
                const FitOptions& options = {});

// One JSON object per epoch, followed by a summary object.
void write_train_report(const TrainReport& report, const std::string& path);

}  // namespace tabens

#endif  // TABENS_TRAINER_HPP_
