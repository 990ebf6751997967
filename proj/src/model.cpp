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

#include "tabens/model.hpp"

#include <cmath>
#include <stdexcept>

namespace tabens {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Regression:
      return "regression";
    case TaskKind::Binary:
      return "binary";
    case TaskKind::Multiclass:
      return "multiclass";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "regression") return TaskKind::Regression;
  if (name == "binary") return TaskKind::Binary;
  if (name == "multiclass") return TaskKind::Multiclass;
  throw std::invalid_argument("unknown task kind '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("ModelConfig: " + msg); };
  if (members < 1 || members > 128) fail("members (K) must be in [1, 128]");
  if (rank < 1 || rank > 64) fail("rank (r) must be in [1, 64]");
  if (!(sigma_init >= 0.0) || !std::isfinite(sigma_init)) fail("sigma_init must be >= 0");
  if (blocks < 1 || blocks > 4) fail("blocks (L) must be in [1, 4]");
  if (width < 1) fail("width (d) must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (n_bins < 2) fail("n_bins must be >= 2");
  if (task.kind == TaskKind::Multiclass && task.n_classes < 2) {
    fail("multiclass task needs n_classes >= 2");
  }
}

std::vector<ParamSlot> parameter_slots(EnsembleModel& model) {
  std::vector<ParamSlot> slots;
  for (std::size_t l = 0; l < model.blocks.size(); ++l) {
    auto& b = model.blocks[l];
    const std::string prefix = "block" + std::to_string(l) + ".";
    slots.push_back({prefix + "weight", &b.weight, &b.weight_grad});
    slots.push_back({prefix + "bias", &b.bias, &b.bias_grad});
    for (std::size_t k = 0; k < b.members; ++k) {
      const std::string m = std::to_string(k);
      slots.push_back({prefix + "adapter_out." + m, &b.adapter_out[k], &b.adapter_out_grad[k]});
      slots.push_back({prefix + "adapter_in." + m, &b.adapter_in[k], &b.adapter_in_grad[k]});
    }
  }
  for (std::size_t k = 0; k < model.heads.members(); ++k) {
    const std::string m = std::to_string(k);
    slots.push_back({"head.weight." + m, &model.heads.weight[k], &model.heads.weight_grad[k]});
    slots.push_back({"head.bias." + m, &model.heads.bias[k], &model.heads.bias_grad[k]});
  }
  return slots;
}

void zero_grad(EnsembleModel& model) {
  for (auto& b : model.blocks) zero_grad(b);
  zero_grad(model.heads);
}

std::size_t parameter_count(const EnsembleModel& model) {
  std::size_t n = 0;
  for (const auto& slot : parameter_slots(const_cast<EnsembleModel&>(model))) {
    n += slot.value->size();
  }
  return n;
}

EnsembleModel init_model(const ModelConfig& config, PleEmbedding encoder, Rng& rng) {
  config.validate();
  EnsembleModel model;
  model.config = config;
  model.encoder = std::move(encoder);
  const std::size_t d_emb = model.encoder.width();
  if (d_emb == 0) throw std::invalid_argument("init_model: encoder has zero width");

  std::size_t d_in = d_emb;
  for (std::size_t l = 0; l < config.blocks; ++l) {
    auto block = make_ensemble_linear(config.variant, d_in, config.width, config.members,
                                      config.rank);
    block.weight = kaiming_uniform(rng, config.width, d_in);
    const std::size_t w = block.adapter_width();
    for (std::size_t k = 0; k < config.members; ++k) {
      block.adapter_out[k] = sample_gaussian(rng, config.width, w, config.sigma_init);
      block.adapter_in[k] = sample_gaussian(rng, d_in, w, config.sigma_init);
      if (config.variant == AdapterKind::Rank1Mask) {
        block.adapter_out[k] = add_scalar(block.adapter_out[k], 1.0);
        block.adapter_in[k] = add_scalar(block.adapter_in[k], 1.0);
      }
    }
    model.blocks.push_back(std::move(block));
    d_in = config.width;
  }

  const std::size_t out = config.task.output_width();
  model.heads = make_member_heads(config.members, config.width, out);
  const Matrix head_weight = kaiming_uniform(rng, out, config.width);
  for (auto& w : model.heads.weight) w = head_weight;
  return model;
}

ModelForward forward_embedded(const EnsembleModel& model, const Matrix& embedded, bool training,
                              Rng* dropout_rng) {
  if (embedded.cols() != model.encoder.width()) {
    throw ShapeError("forward: embedded width " + std::to_string(embedded.cols()) +
                     " does not match encoder width " + std::to_string(model.encoder.width()));
  }
  Rng unused(0);
  Rng& rng = dropout_rng != nullptr ? *dropout_rng : unused;
  if (training && model.config.dropout > 0.0 && dropout_rng == nullptr) {
    throw std::invalid_argument("forward: training with dropout needs an Rng");
  }

  ModelForward result;
  if (training) result.cache.emplace();
  MemberBatch h(model.config.members, embedded);
  for (const auto& block : model.blocks) {
    auto lin = forward_ensemble_linear(block, h, training);
    auto act = relu_dropout(lin.outputs, model.config.dropout, training, rng);
    if (training) {
      result.cache->linear.push_back(std::move(lin.cache));
      result.cache->activation.push_back(std::move(act.cache));
    }
    h = std::move(act.outputs);
  }
  auto head = forward_heads(model.heads, h, training);
  if (training) result.cache->head_inputs = std::move(head.inputs);
  result.outputs = std::move(head.outputs);
  return result;
}

ModelForward forward(const EnsembleModel& model, const Matrix& x, bool training,
                     Rng* dropout_rng) {
  return forward_embedded(model, encode_batch(model.encoder, x), training, dropout_rng);
}

void backward(EnsembleModel& model, const ModelCache& cache, const MemberBatch& output_grads) {
  MemberBatch g = backward_heads(model.heads, cache.head_inputs, output_grads);
  for (std::size_t l = model.blocks.size(); l-- > 0;) {
    g = relu_dropout_backward(cache.activation[l], g);
    g = backward_ensemble_linear(model.blocks[l], cache.linear[l], g);
  }
}

namespace {

std::size_t class_label(double y, std::size_t n_classes) {
  if (!(y >= 0.0) || y != std::floor(y) || y >= static_cast<double>(n_classes)) {
    throw std::out_of_range("member_loss: label " + std::to_string(y) +
                            " out of class range [0, " + std::to_string(n_classes) + ")");
  }
  return static_cast<std::size_t>(y);
}

}  // namespace

LossResult member_loss(const MemberBatch& outputs, std::span<const double> targets,
                       const Task& task) {
  if (outputs.empty()) throw ShapeError("member_loss: no members");
  const std::size_t members = outputs.size();
  const std::size_t n = targets.size();
  const std::size_t width = task.output_width();
  for (const Matrix& o : outputs) {
    if (o.rows() != n || o.cols() != width) {
      throw ShapeError("member_loss: output shape " + o.shape_string() + " vs " +
                       std::to_string(n) + " targets of width " + std::to_string(width));
    }
  }
  if (task.kind == TaskKind::Binary) {
    for (double y : targets) class_label(y, 2);
  } else if (task.kind == TaskKind::Multiclass) {
    for (double y : targets) class_label(y, task.n_classes);
  }

  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(members));
  LossResult result;
  double total = 0.0;
  for (const Matrix& o : outputs) {
    Matrix g(n, width);
    double member_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = targets[i];
      switch (task.kind) {
        case TaskKind::Regression: {
          const double diff = o(i, 0) - y;
          member_total += diff * diff;
          g(i, 0) = 2.0 * diff * norm;
          break;
        }
        case TaskKind::Binary: {
          // BCE on a logit: softplus(z) - y z.
          const double z = o(i, 0);
          member_total += softplus(z) - y * z;
          g(i, 0) = (stable_sigmoid(z) - y) * norm;
          break;
        }
        case TaskKind::Multiclass: {
          const auto logits = o.row(i);
          const auto label = static_cast<std::size_t>(y);
          member_total += log_sum_exp(logits) - logits[label];
          const auto p = stable_softmax(logits);
          for (std::size_t c = 0; c < width; ++c) {
            g(i, c) = (p[c] - (c == label ? 1.0 : 0.0)) * norm;
          }
          break;
        }
      }
    }
    total += member_total / static_cast<double>(n);
    result.output_grads.push_back(std::move(g));
  }
  result.loss = total / static_cast<double>(members);
  return result;
}

EnsemblePrediction predictions_from_outputs(const MemberBatch& outputs, const Task& task) {
  if (outputs.empty()) throw ShapeError("predict: no members");
  EnsemblePrediction pred;
  pred.task = task;
  const std::size_t n = outputs.front().rows();
  const std::size_t width = task.probability_width();
  for (const Matrix& o : outputs) {
    Matrix p(n, width);
    for (std::size_t i = 0; i < n; ++i) {
      switch (task.kind) {
        case TaskKind::Regression:
          p(i, 0) = o(i, 0);
          break;
        case TaskKind::Binary: {
          const double s = stable_sigmoid(o(i, 0));
          p(i, 0) = 1.0 - s;
          p(i, 1) = s;
          break;
        }
        case TaskKind::Multiclass: {
          const auto sm = stable_softmax(o.row(i));
          for (std::size_t c = 0; c < width; ++c) p(i, c) = sm[c];
          break;
        }
      }
    }
    pred.members.push_back(std::move(p));
  }
  pred.mean = Matrix(n, width);
  for (const Matrix& p : pred.members) add_inplace(pred.mean, p);
  const double k = static_cast<double>(pred.members.size());
  for (double& v : pred.mean.data()) v /= k;
  return pred;
}

namespace {

MemberBatch to_target_scale(MemberBatch outputs, const EnsembleModel& model) {
  if (model.config.task.kind == TaskKind::Regression && model.output_scaler.fitted) {
    for (Matrix& o : outputs) {
      for (double& v : o.data()) v = model.output_scaler.unscale(v);
    }
  }
  return outputs;
}

}  // namespace

EnsemblePrediction predict_embedded(const EnsembleModel& model, const Matrix& embedded) {
  return predictions_from_outputs(
      to_target_scale(forward_embedded(model, embedded, false).outputs, model), model.config.task);
}

EnsemblePrediction predict(const EnsembleModel& model, const Matrix& x) {
  return predict_embedded(model, encode_batch(model.encoder, x));
}

}  // namespace tabens
