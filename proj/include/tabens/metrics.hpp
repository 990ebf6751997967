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

#ifndef TABENS_METRICS_HPP_
#define TABENS_METRICS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tabens/model.hpp"
#include "tabens/numkernel.hpp"

namespace tabens {

// Probabilities below this are clamped before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr std::size_t kDefaultEceBins = 15;

// Per-member predictions on N samples. Classification members are N x C
// probability matrices (C = 2 for binary); regression members are N x 1 and
// must be in the original target scale.
struct MemberPredictions {
  Task task;
  std::vector<Matrix> members;
  std::vector<double> targets;

  static MemberPredictions from(const EnsemblePrediction& prediction,
                                std::vector<double> targets);

  std::size_t ensemble_size() const { return members.size(); }
  std::size_t samples() const { return members.empty() ? 0 : members.front().rows(); }
  // Shapes agree; probability rows are nonnegative and sum to 1 within 1e-9.
  void validate() const;
  // Mean over members (N x C or N x 1).
  Matrix ensemble_mean() const;
};

struct DiversityReport {
  std::optional<double> pairwise_kl;
  std::optional<double> disagreement;
  std::optional<double> ambiguity;
  std::optional<double> normalized_ambiguity;
  std::optional<double> ece;
  std::optional<double> accuracy;
  std::optional<double> rmse;

  friend bool operator==(const DiversityReport&, const DiversityReport&) = default;
};

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

// Mean over member pairs and samples of the symmetrized KL divergence.
// Throws std::invalid_argument for K < 2 or a regression task.
double pairwise_kl(const MemberPredictions& preds);

// Mean over member pairs of the fraction of samples with different argmax.
double argmax_disagreement(const MemberPredictions& preds);

// (1 / NK) sum_n sum_i (f_i - f_bar)^2.
double ambiguity(const MemberPredictions& preds);

struct KvAmbiguity {
  double ambiguity = 0.0;
  double normalized = 0.0;  // ambiguity / train_target_variance
};
// Throws std::invalid_argument when train_target_variance <= 0.
KvAmbiguity kv_ambiguity(const MemberPredictions& preds, double train_target_variance);

// Largest per-sample residual of
//   (f_bar - y)^2 = mean_k (f_k - y)^2 - mean_k (f_k - f_bar)^2.
double kv_decomposition_check(const MemberPredictions& preds);

// Bin index for a confidence in [0, 1]: bin m covers [m/M, (m+1)/M), with
// 1.0 placed in the last bin. Edges are the doubles m / M, so a confidence
// equal to an edge goes to the higher bin.
std::size_t confidence_bin(double confidence, std::size_t n_bins);

// Expected calibration error of the member-averaged probabilities.
double ece(const MemberPredictions& preds, std::size_t n_bins = kDefaultEceBins);

// RMSE of the ensemble mean (regression) or accuracy of its argmax.
double task_score(const MemberPredictions& preds);
bool higher_is_better(const Task& task);

// Signed percent improvement over a reference score:
// (score / ref - 1) * 100 if higher is better, else (ref / score - 1) * 100.
// Throws std::invalid_argument for a zero reference (or zero score when lower
// is better).
double relative_score_to_reference(double score, double ref_score, bool higher_is_better);

// Every metric defined for the task. Diversity fields stay empty when K < 2;
// normalized ambiguity needs a positive train_target_variance.
DiversityReport evaluate(const MemberPredictions& preds,
                         std::optional<double> train_target_variance = std::nullopt,
                         std::size_t n_bins = kDefaultEceBins);

}  // namespace tabens

#endif  // TABENS_METRICS_HPP_
