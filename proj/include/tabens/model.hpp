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

#ifndef TABENS_MODEL_HPP_
#define TABENS_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabens/layers.hpp"
#include "tabens/numkernel.hpp"
#include "tabens/ple.hpp"
#include "tabens/rng.hpp"
#include "tabens/target_scaler.hpp"

namespace tabens {

enum class TaskKind { Regression, Binary, Multiclass };

struct Task {
  TaskKind kind = TaskKind::Regression;
  std::size_t n_classes = 0;  // Multiclass only

  static Task regression() { return {TaskKind::Regression, 0}; }
  static Task binary() { return {TaskKind::Binary, 2}; }
  static Task multiclass(std::size_t c) { return {TaskKind::Multiclass, c}; }

  bool is_classification() const { return kind != TaskKind::Regression; }
  // Width of each member's raw output: 1 for regression and binary (one logit).
  std::size_t output_width() const { return kind == TaskKind::Multiclass ? n_classes : 1; }
  // Width of the probability vectors handed to the metrics (2 for binary).
  std::size_t probability_width() const {
    return kind == TaskKind::Multiclass ? n_classes : (kind == TaskKind::Binary ? 2 : 1);
  }
  friend bool operator==(const Task&, const Task&) = default;
};

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

struct ModelConfig {
  Task task;
  std::size_t members = 32;    // K
  std::size_t rank = 4;        // r
  double sigma_init = 0.5;
  std::size_t blocks = 2;      // L
  std::size_t width = 256;     // d
  double dropout = 0.0;
  AdapterKind variant = AdapterKind::MultiplicativeLowRank;
  std::size_t n_bins = 16;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Shared input encoder, L ensemble blocks (linear -> ReLU -> dropout) and K
// member-specific heads.
struct EnsembleModel {
  ModelConfig config;
  PleEmbedding encoder;
  std::vector<EnsembleLinearParams> blocks;
  MemberHeads heads;
  // Maps regression outputs back to the original target scale.
  TargetScaler output_scaler;
};

// Named view of one trainable tensor and its gradient slot.
struct ParamSlot {
  std::string name;
  Matrix* value;
  Matrix* grad;
};

std::vector<ParamSlot> parameter_slots(EnsembleModel& model);
void zero_grad(EnsembleModel& model);
std::size_t parameter_count(const EnsembleModel& model);

// Shared weights and heads are Kaiming-uniform. All heads start as copies of
// one draw, so members differ at initialization only through their adapters.
// Low-rank adapters are N(0, sigma_init^2); Rank1Mask vectors are
// 1 + N(0, sigma_init^2). Biases start at zero.
EnsembleModel init_model(const ModelConfig& config, PleEmbedding encoder, Rng& rng);

struct ModelCache {
  std::vector<std::optional<LinearCache>> linear;
  std::vector<std::optional<ActivationCache>> activation;
  std::optional<MemberBatch> head_inputs;
};

struct ModelForward {
  MemberBatch outputs;  // K matrices of batch x output_width
  std::optional<ModelCache> cache;
};

// `x` holds raw feature rows; `embedded` rows already went through the encoder.
// dropout_rng may be null in evaluation mode.
ModelForward forward(const EnsembleModel& model, const Matrix& x, bool training,
                     Rng* dropout_rng = nullptr);
ModelForward forward_embedded(const EnsembleModel& model, const Matrix& embedded, bool training,
                              Rng* dropout_rng = nullptr);

// Accumulates into the gradient slots.
void backward(EnsembleModel& model, const ModelCache& cache, const MemberBatch& output_grads);

struct LossResult {
  double loss = 0.0;
  MemberBatch output_grads;
};

// (1/K) sum_k mean_batch loss(o_k, y): squared error, binary cross-entropy on
// a logit, or softmax cross-entropy. Class labels are stored as doubles and
// must be integers in range; otherwise std::out_of_range.
LossResult member_loss(const MemberBatch& outputs, std::span<const double> targets,
                       const Task& task);

struct EnsemblePrediction {
  Task task;
  // Per member: N x 1 scalars (regression) or N x C probabilities.
  MemberBatch members;
  // Mean over members, same shape as one member entry.
  Matrix mean;
};

EnsemblePrediction predictions_from_outputs(const MemberBatch& outputs, const Task& task);
// Evaluation-mode forward. Regression outputs are mapped through
// model.output_scaler into the original target scale.
EnsemblePrediction predict(const EnsembleModel& model, const Matrix& x);
EnsemblePrediction predict_embedded(const EnsembleModel& model, const Matrix& embedded);

}  // namespace tabens

#endif  // TABENS_MODEL_HPP_
