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

#include "tabens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tabens {

namespace {

void require_classification(const MemberPredictions& preds, const char* what) {
  if (!preds.task.is_classification()) {
    throw std::invalid_argument(std::string(what) + " needs a classification task");
  }
}

void require_regression(const MemberPredictions& preds, const char* what) {
  if (preds.task.is_classification()) {
    throw std::invalid_argument(std::string(what) + " needs a regression task");
  }
}

void require_pairs(const MemberPredictions& preds, const char* what) {
  if (preds.ensemble_size() < 2) {
    throw std::invalid_argument(std::string(what) + " needs at least two members");
  }
}

double clamped_log(double p) { return std::log(std::max(p, kProbabilityFloor)); }

double pair_count(std::size_t k) { return static_cast<double>(k) * static_cast<double>(k - 1) / 2.0; }

}  // namespace

MemberPredictions MemberPredictions::from(const EnsemblePrediction& prediction,
                                          std::vector<double> targets) {
  MemberPredictions p;
  p.task = prediction.task;
  p.members = prediction.members;
  p.targets = std::move(targets);
  return p;
}

void MemberPredictions::validate() const {
  if (members.empty()) throw std::invalid_argument("MemberPredictions: no members");
  const std::size_t n = samples();
  const std::size_t width = task.probability_width();
  for (const Matrix& m : members) {
    if (m.rows() != n || m.cols() != width) {
      throw ShapeError("MemberPredictions: member shape " + m.shape_string());
    }
    if (task.is_classification()) {
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double v : m.row(i)) {
          if (!(v >= 0.0)) throw std::invalid_argument("MemberPredictions: negative probability");
          s += v;
        }
        if (std::abs(s - 1.0) > 1e-9) {
          throw std::invalid_argument("MemberPredictions: probabilities do not sum to 1");
        }
      }
    }
  }
  if (!targets.empty() && targets.size() != n) {
    throw ShapeError("MemberPredictions: target count does not match samples");
  }
}

Matrix MemberPredictions::ensemble_mean() const {
  Matrix mean(samples(), members.front().cols());
  for (const Matrix& m : members) add_inplace(mean, m);
  const double k = static_cast<double>(members.size());
  for (double& v : mean.data()) v /= k;
  return mean;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double pairwise_kl(const MemberPredictions& preds) {
  require_classification(preds, "pairwise_kl");
  require_pairs(preds, "pairwise_kl");
  const std::size_t k = preds.ensemble_size(), n = preds.samples();
  const std::size_t c = preds.members.front().cols();

  // Clamped logs once per member.
  std::vector<Matrix> logs;
  logs.reserve(k);
  for (const Matrix& m : preds.members) {
    Matrix l(n, c);
    for (std::size_t i = 0; i < m.size(); ++i) l.data()[i] = clamped_log(m.data()[i]);
    logs.push_back(std::move(l));
  }

  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      double pair = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        // 0.5 [KL(p||q) + KL(q||p)] = 0.5 sum (p - q)(log p - log q)
        double sym = 0.0;
        for (std::size_t cl = 0; cl < c; ++cl) {
          const double p = std::max(preds.members[i](s, cl), kProbabilityFloor);
          const double q = std::max(preds.members[j](s, cl), kProbabilityFloor);
          sym += (p - q) * (logs[i](s, cl) - logs[j](s, cl));
        }
        pair += 0.5 * sym;
      }
      total += pair / static_cast<double>(n);
    }
  }
  return total / pair_count(k);
}

double argmax_disagreement(const MemberPredictions& preds) {
  require_classification(preds, "argmax_disagreement");
  require_pairs(preds, "argmax_disagreement");
  const std::size_t k = preds.ensemble_size(), n = preds.samples();
  std::vector<std::vector<std::size_t>> labels(k, std::vector<std::size_t>(n));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t s = 0; s < n; ++s) labels[i][s] = argmax(preds.members[i].row(s));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      std::size_t differ = 0;
      for (std::size_t s = 0; s < n; ++s) differ += labels[i][s] != labels[j][s] ? 1 : 0;
      total += static_cast<double>(differ) / static_cast<double>(n);
    }
  }
  return total / pair_count(k);
}

double ambiguity(const MemberPredictions& preds) {
  require_regression(preds, "ambiguity");
  const std::size_t k = preds.ensemble_size(), n = preds.samples();
  // Deviations are taken relative to member 0, so identical members give
  // exactly zero.
  double total = 0.0;
  std::vector<double> offset(k);
  for (std::size_t s = 0; s < n; ++s) {
    const double base = preds.members[0](s, 0);
    double shift = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      offset[i] = preds.members[i](s, 0) - base;
      shift += offset[i];
    }
    shift /= static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double d = offset[i] - shift;
      total += d * d;
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(k));
}

KvAmbiguity kv_ambiguity(const MemberPredictions& preds, double train_target_variance) {
  if (!(train_target_variance > 0.0)) {
    throw std::invalid_argument("kv_ambiguity: training-target variance must be positive");
  }
  KvAmbiguity result;
  result.ambiguity = ambiguity(preds);
  result.normalized = result.ambiguity / train_target_variance;
  return result;
}

double kv_decomposition_check(const MemberPredictions& preds) {
  require_regression(preds, "kv_decomposition_check");
  const std::size_t k = preds.ensemble_size(), n = preds.samples();
  if (preds.targets.size() != n) throw ShapeError("kv_decomposition_check: targets");
  const Matrix mean = preds.ensemble_mean();
  const double kd = static_cast<double>(k);
  double worst = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double y = preds.targets[s];
    const double f_bar = mean(s, 0);
    double member_err = 0.0, amb = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double f = preds.members[i](s, 0);
      member_err += (f - y) * (f - y);
      amb += (f - f_bar) * (f - f_bar);
    }
    const double lhs = (f_bar - y) * (f_bar - y);
    const double rhs = member_err / kd - amb / kd;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

std::size_t confidence_bin(double confidence, std::size_t n_bins) {
  const double m = static_cast<double>(n_bins);
  if (!(confidence > 0.0)) return 0;
  if (confidence >= 1.0) return n_bins - 1;
  auto bin = static_cast<std::size_t>(std::floor(confidence * m));
  bin = std::min(bin, n_bins - 1);
  // Reconcile the product with the edge values m / M.
  while (bin > 0 && confidence < static_cast<double>(bin) / m) --bin;
  while (bin + 1 < n_bins && confidence >= static_cast<double>(bin + 1) / m) ++bin;
  return bin;
}

double ece(const MemberPredictions& preds, std::size_t n_bins) {
  require_classification(preds, "ece");
  if (n_bins == 0) throw std::invalid_argument("ece: n_bins must be positive");
  const std::size_t n = preds.samples();
  if (preds.targets.size() != n) throw ShapeError("ece: targets");
  if (n == 0) return 0.0;
  const Matrix mean = preds.ensemble_mean();
  std::vector<double> conf_sum(n_bins, 0.0), correct_sum(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto row = mean.row(s);
    const std::size_t label = argmax(row);
    const double conf = row[label];
    const std::size_t b = confidence_bin(conf, n_bins);
    conf_sum[b] += conf;
    correct_sum[b] += static_cast<double>(label) == preds.targets[s] ? 1.0 : 0.0;
    ++count[b];
  }
  double total = 0.0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (count[b] == 0) continue;
    const double size = static_cast<double>(count[b]);
    const double gap = std::abs(correct_sum[b] / size - conf_sum[b] / size);
    total += size / static_cast<double>(n) * gap;
  }
  return total;
}

bool higher_is_better(const Task& task) { return task.is_classification(); }

double task_score(const MemberPredictions& preds) {
  const std::size_t n = preds.samples();
  if (preds.targets.size() != n) throw ShapeError("task_score: targets");
  if (n == 0) throw std::invalid_argument("task_score: no samples");
  const Matrix mean = preds.ensemble_mean();
  if (!preds.task.is_classification()) {
    double sq = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double d = mean(s, 0) - preds.targets[s];
      sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(n));
  }
  std::size_t correct = 0;
  for (std::size_t s = 0; s < n; ++s) {
    correct += static_cast<double>(argmax(mean.row(s))) == preds.targets[s] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double relative_score_to_reference(double score, double ref_score, bool higher_is_better) {
  if (ref_score == 0.0) throw std::invalid_argument("relative_score_to_reference: zero reference");
  if (higher_is_better) return (score / ref_score - 1.0) * 100.0;
  if (score == 0.0) throw std::invalid_argument("relative_score_to_reference: zero score");
  return (ref_score / score - 1.0) * 100.0;
}

DiversityReport evaluate(const MemberPredictions& preds, std::optional<double> train_target_variance,
                         std::size_t n_bins) {
  preds.validate();
  DiversityReport report;
  const bool pairs = preds.ensemble_size() >= 2;
  if (preds.task.is_classification()) {
    if (pairs) {
      report.pairwise_kl = pairwise_kl(preds);
      report.disagreement = argmax_disagreement(preds);
    }
    report.ece = ece(preds, n_bins);
    report.accuracy = task_score(preds);
  } else {
    if (pairs) {
      report.ambiguity = ambiguity(preds);
      if (train_target_variance && *train_target_variance > 0.0) {
        report.normalized_ambiguity = *report.ambiguity / *train_target_variance;
      }
    }
    report.rmse = task_score(preds);
  }
  return report;
}

}  // namespace tabens
