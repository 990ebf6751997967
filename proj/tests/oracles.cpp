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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tabens::oracle {

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("naive_matmul: shapes");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

std::size_t gaussian_rank(const Matrix& m, double tol) {
  Matrix a = m;
  double scale = 0.0;
  for (double v : a.data()) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0;
  std::size_t rank = 0;
  std::vector<bool> used(a.rows(), false);
  for (std::size_t col = 0; col < a.cols(); ++col) {
    std::size_t pivot = a.rows();
    double best = tol * scale;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      if (!used[i] && std::abs(a(i, col)) > best) {
        best = std::abs(a(i, col));
        pivot = i;
      }
    }
    if (pivot == a.rows()) continue;
    used[pivot] = true;
    ++rank;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      if (used[i]) continue;
      const double f = a(i, col) / a(pivot, col);
      for (std::size_t j = col; j < a.cols(); ++j) a(i, j) -= f * a(pivot, j);
    }
  }
  return rank;
}

Matrix effective_weight_entrywise(const EnsembleLinearParams& p, std::size_t member) {
  const Matrix& w = p.weight;
  const Matrix& a = p.adapter_out[member];
  const Matrix& b = p.adapter_in[member];
  Matrix out(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double ab = 0.0;
      for (std::size_t t = 0; t < a.cols(); ++t) ab += a(i, t) * b(j, t);
      switch (p.kind) {
        case AdapterKind::MultiplicativeLowRank:
          out(i, j) = w(i, j) * (1.0 + ab);
          break;
        case AdapterKind::AdditiveLowRank:
          out(i, j) = w(i, j) + ab;
          break;
        case AdapterKind::Rank1Mask:
          out(i, j) = w(i, j) * ab;
          break;
      }
    }
  }
  return out;
}

Matrix linear_output_entrywise(const EnsembleLinearParams& p, const Matrix& h, std::size_t member) {
  const Matrix wk = effective_weight_entrywise(p, member);
  Matrix z(h.rows(), wk.rows());
  for (std::size_t s = 0; s < h.rows(); ++s) {
    for (std::size_t o = 0; o < wk.rows(); ++o) {
      double acc = p.bias(0, o);
      for (std::size_t i = 0; i < wk.cols(); ++i) acc += h(s, i) * wk(o, i);
      z(s, o) = acc;
    }
  }
  return z;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

namespace {

double loss_at(const EnsembleModel& model, const Matrix& embedded, const std::vector<double>& y) {
  return member_loss(forward_embedded(model, embedded, false).outputs, y, model.config.task).loss;
}

}  // namespace

GradCheck check_gradients(EnsembleModel& model, const Matrix& embedded,
                          const std::vector<double>& targets, double eps) {
  zero_grad(model);
  Rng dropout_rng(0);
  auto fwd = forward_embedded(model, embedded, true, &dropout_rng);
  const LossResult loss = member_loss(fwd.outputs, targets, model.config.task);
  backward(model, *fwd.cache, loss.output_grads);

  GradCheck result;
  for (const ParamSlot& slot : parameter_slots(model)) {
    for (std::size_t i = 0; i < slot.value->size(); ++i) {
      double& theta = slot.value->data()[i];
      const double saved = theta;
      theta = saved + eps;
      const double plus = loss_at(model, embedded, targets);
      theta = saved - eps;
      const double minus = loss_at(model, embedded, targets);
      theta = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double err = relative_error(slot.grad->data()[i], numeric);
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = slot.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

double min_abs_preactivation(const EnsembleModel& model, const Matrix& embedded) {
  double smallest = INFINITY;
  std::vector<Matrix> h(model.config.members, embedded);
  for (const auto& block : model.blocks) {
    for (std::size_t k = 0; k < h.size(); ++k) {
      Matrix z = linear_output_entrywise(block, h[k], k);
      for (double& v : z.data()) {
        smallest = std::min(smallest, std::abs(v));
        v = std::max(v, 0.0);
      }
      h[k] = std::move(z);
    }
  }
  return smallest;
}

GradInstance gradient_instance(AdapterKind kind, const Task& task, std::uint64_t seed) {
  const Rng root(seed);
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng = root.fork(attempt);
    const Matrix x = sample_gaussian(rng, 16, 3, 1.0);
    std::vector<std::size_t> rows(16);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    PleEmbedding encoder =
        fit_feature_encoder(x, rows, std::vector<FeatureKind>(3, FeatureKind::Numeric), {}, 4);
    ModelConfig cfg;
    cfg.task = task;
    cfg.members = 3;
    cfg.rank = 2;
    cfg.blocks = 2;
    cfg.width = 8;
    cfg.sigma_init = 0.5;
    cfg.variant = kind;
    cfg.seed = seed;
    GradInstance inst{init_model(cfg, std::move(encoder), rng), Matrix(), {}};
    // Nonzero biases and distinct heads exercise every gradient path.
    for (auto& block : inst.model.blocks) block.bias = sample_gaussian(rng, 1, cfg.width, 0.1);
    for (std::size_t k = 0; k < cfg.members; ++k) {
      inst.model.heads.weight[k] = add(inst.model.heads.weight[k],
                                       sample_gaussian(rng, task.output_width(), cfg.width, 0.1));
      inst.model.heads.bias[k] = sample_gaussian(rng, 1, task.output_width(), 0.1);
    }
    inst.embedded = encode_batch(inst.model.encoder, x);
    for (std::size_t i = 0; i < 16; ++i) {
      inst.targets.push_back(task.kind == TaskKind::Regression
                                 ? rng.gaussian()
                                 : static_cast<double>(rng.below(task.kind == TaskKind::Binary ? 2 : task.n_classes)));
    }
    if (min_abs_preactivation(inst.model, inst.embedded) > 1e-3) return inst;
  }
}

double pairwise_kl_direct(const MemberPredictions& preds) {
  const std::size_t k = preds.members.size();
  const std::size_t n = preds.members.front().rows();
  const std::size_t c = preds.members.front().cols();
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      double pair = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        double kl_pq = 0.0, kl_qp = 0.0;
        for (std::size_t cl = 0; cl < c; ++cl) {
          const double p = std::max(preds.members[i](s, cl), 1e-12);
          const double q = std::max(preds.members[j](s, cl), 1e-12);
          kl_pq += p * std::log(p / q);
          kl_qp += q * std::log(q / p);
        }
        pair += 0.5 * (kl_pq + kl_qp);
      }
      total += pair / static_cast<double>(n);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

double ambiguity_direct(const MemberPredictions& preds) {
  const std::size_t k = preds.members.size();
  const std::size_t n = preds.members.front().rows();
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += preds.members[i](s, 0);
    mean /= static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
      total += (preds.members[i](s, 0) - mean) * (preds.members[i](s, 0) - mean);
    }
  }
  return total / static_cast<double>(n * k);
}

double ece_regrouped(const MemberPredictions& preds, std::size_t n_bins) {
  const std::size_t k = preds.members.size();
  const std::size_t n = preds.members.front().rows();
  const std::size_t c = preds.members.front().cols();
  const double m = static_cast<double>(n_bins);
  std::vector<double> conf(n);
  std::vector<double> correct(n);
  std::vector<std::size_t> bin(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> mean(c, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t cl = 0; cl < c; ++cl) mean[cl] += preds.members[i](s, cl);
    }
    std::size_t label = 0;
    for (std::size_t cl = 0; cl < c; ++cl) {
      mean[cl] /= static_cast<double>(k);
      if (mean[cl] > mean[label]) label = cl;
    }
    conf[s] = mean[label];
    correct[s] = static_cast<double>(label) == preds.targets[s] ? 1.0 : 0.0;
    bin[s] = n_bins - 1;
    for (std::size_t b = 0; b < n_bins; ++b) {
      if (conf[s] < static_cast<double>(b + 1) / m) {
        bin[s] = b;
        break;
      }
    }
  }
  double total = 0.0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    double conf_sum = 0.0, correct_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < n; ++s) {
      if (bin[s] != b) continue;
      conf_sum += conf[s];
      correct_sum += correct[s];
      ++count;
    }
    if (count == 0) continue;
    const double size = static_cast<double>(count);
    total += size / static_cast<double>(n) * std::abs(correct_sum / size - conf_sum / size);
  }
  return total;
}

MemberPredictions random_classification(Rng& rng, std::size_t members, std::size_t samples,
                                        std::size_t classes, double scale) {
  MemberPredictions p;
  p.task = classes == 2 ? Task::binary() : Task::multiclass(classes);
  for (std::size_t k = 0; k < members; ++k) {
    Matrix m(samples, classes);
    for (std::size_t s = 0; s < samples; ++s) {
      std::vector<double> e(classes);
      double sum = 0.0;
      for (auto& v : e) {
        v = std::exp(scale * rng.gaussian());
        sum += v;
      }
      for (std::size_t c = 0; c < classes; ++c) m(s, c) = e[c] / sum;
    }
    p.members.push_back(std::move(m));
  }
  for (std::size_t s = 0; s < samples; ++s) p.targets.push_back(static_cast<double>(rng.below(classes)));
  return p;
}

MemberPredictions random_regression(Rng& rng, std::size_t members, std::size_t samples) {
  MemberPredictions p;
  p.task = Task::regression();
  for (std::size_t k = 0; k < members; ++k) p.members.push_back(sample_gaussian(rng, samples, 1, 1.0));
  for (std::size_t s = 0; s < samples; ++s) p.targets.push_back(rng.gaussian());
  return p;
}

}  // namespace tabens::oracle
