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
#include <numeric>

#include "oracles.hpp"
#include "tabens/metrics.hpp"

namespace tabens {
namespace {

MemberPredictions classification(std::vector<Matrix> members, std::vector<double> targets) {
  MemberPredictions p;
  const std::size_t c = members.front().cols();
  p.task = c == 2 ? Task::binary() : Task::multiclass(c);
  p.members = std::move(members);
  p.targets = std::move(targets);
  return p;
}

MemberPredictions regression(std::vector<std::vector<double>> members, std::vector<double> targets) {
  MemberPredictions p;
  p.task = Task::regression();
  for (const auto& m : members) p.members.push_back(Matrix::column(m));
  p.targets = std::move(targets);
  return p;
}

MemberPredictions permuted(const MemberPredictions& p, Rng& rng) {
  MemberPredictions q = p;
  for (std::size_t i = q.members.size(); i > 1; --i) std::swap(q.members[i - 1], q.members[rng.below(i)]);
  return q;
}

TEST(PairwiseKl, IdenticalMembersGiveZero) {
  const Matrix m = Matrix::from_rows({{0.3, 0.7}, {0.9, 0.1}});
  EXPECT_EQ(pairwise_kl(classification({m, m, m}, {0, 1})), 0.0);
}

TEST(PairwiseKl, ClosedFormPair) {
  const auto p = classification({Matrix::from_rows({{0.75, 0.25}}), Matrix::from_rows({{0.25, 0.75}})}, {0});
  EXPECT_NEAR(pairwise_kl(p), 0.5 * std::log(3.0), 1e-12);
}

TEST(PairwiseKl, AgreesWithDirectDefinitionAndIsNonnegative) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto p = oracle::random_classification(rng, 2 + rng.below(6), 1 + rng.below(20), 2 + rng.below(4), 3.0);
    const double kl = pairwise_kl(p);
    EXPECT_GE(kl, 0.0);
    EXPECT_NEAR(kl, oracle::pairwise_kl_direct(p), 1e-12 * std::max(1.0, kl));
  }
}

TEST(PairwiseKl, ZeroProbabilitiesAreClamped) {
  const auto p = classification({Matrix::from_rows({{1.0, 0.0}}), Matrix::from_rows({{0.0, 1.0}})}, {0});
  const double kl = pairwise_kl(p);
  EXPECT_TRUE(std::isfinite(kl));
  EXPECT_NEAR(kl, (1.0 - 1e-12) * std::log(1e12), 1e-9);
}

TEST(PairwiseKl, NeedsTwoMembers) {
  EXPECT_THROW(pairwise_kl(classification({Matrix::from_rows({{0.5, 0.5}})}, {0})), std::invalid_argument);
}

TEST(Disagreement, DirectCount) {
  const Matrix a = Matrix::from_rows({{0.9, 0.1}, {0.2, 0.8}, {0.3, 0.7}});
  const Matrix b = Matrix::from_rows({{0.6, 0.4}, {0.7, 0.3}, {0.1, 0.9}});
  EXPECT_DOUBLE_EQ(argmax_disagreement(classification({a, b}, {0, 0, 0})), 1.0 / 3.0);
}

TEST(Disagreement, IdenticalMembersAndMaximalCase) {
  const Matrix a = Matrix::from_rows({{0.9, 0.1}});
  EXPECT_EQ(argmax_disagreement(classification({a, a}, {0})), 0.0);
  const auto p = classification({Matrix::from_rows({{0.8, 0.1, 0.1}}), Matrix::from_rows({{0.1, 0.8, 0.1}}),
                                 Matrix::from_rows({{0.1, 0.1, 0.8}})},
                                {0});
  EXPECT_EQ(argmax_disagreement(p), 1.0);
}

TEST(Disagreement, TiesGoToLowestIndex) {
  EXPECT_EQ(argmax(std::vector<double>{0.4, 0.4, 0.2}), 0u);
  const auto p = classification({Matrix::from_rows({{0.5, 0.5}}), Matrix::from_rows({{0.6, 0.4}})}, {0});
  EXPECT_EQ(argmax_disagreement(p), 0.0);
}

TEST(Ambiguity, HandComputedAndIdentical) {
  EXPECT_EQ(ambiguity(regression({{1}, {3}}, {2})), 1.0);
  EXPECT_EQ(ambiguity(regression({{1, 2}, {1, 2}}, {0, 0})), 0.0);
  const KvAmbiguity kv = kv_ambiguity(regression({{1}, {3}}, {2}), 4.0);
  EXPECT_EQ(kv.ambiguity, 1.0);
  EXPECT_EQ(kv.normalized, 0.25);
  EXPECT_THROW(kv_ambiguity(regression({{1}, {3}}, {2}), 0.0), std::invalid_argument);
}

TEST(Ambiguity, AgreesWithDirectDefinition) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto p = oracle::random_regression(rng, 1 + rng.below(8), 1 + rng.below(30));
    EXPECT_NEAR(ambiguity(p), oracle::ambiguity_direct(p), 1e-13);
  }
}

TEST(KvDecomposition, HandExampleAndRandomInstances) {
  EXPECT_EQ(kv_decomposition_check(regression({{1}, {3}}, {2})), 0.0);
  EXPECT_EQ(kv_decomposition_check(regression({{1.5, -2}}, {0.5, 1})), 0.0);
  Rng rng(3);
  for (int t = 0; t < 1000; ++t) {
    const auto p = oracle::random_regression(rng, 1 + rng.below(16), 1 + rng.below(64));
    EXPECT_LT(kv_decomposition_check(p), 1e-10);
  }
}

TEST(Ece, SingleCorrectSample) {
  EXPECT_NEAR(ece(classification({Matrix::from_rows({{0.1, 0.9}})}, {1})), 0.1, 1e-15);
}

TEST(Ece, ConfidentAndCorrectIsZero) {
  EXPECT_EQ(ece(classification({Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}})}, {0, 1})), 0.0);
}

TEST(Ece, SharedBinHalfCorrect) {
  const auto p = classification({Matrix::from_rows({{0.6, 0.4}, {0.6, 0.4}})}, {0, 1});
  EXPECT_NEAR(ece(p), 0.1, 1e-15);
}

TEST(Ece, BoundaryGoesToHigherBinAndOneToLast) {
  EXPECT_EQ(confidence_bin(1.0 / 15.0, 15), 1u);
  EXPECT_EQ(confidence_bin(1.0, 15), 14u);
  EXPECT_EQ(confidence_bin(0.0, 15), 0u);
  for (std::size_t m = 1; m < 15; ++m) {
    const double edge = static_cast<double>(m) / 15.0;
    EXPECT_EQ(confidence_bin(edge, 15), m);
    EXPECT_EQ(confidence_bin(std::nextafter(edge, 0.0), 15), m - 1);
  }
}

TEST(Ece, EqualsRegroupingOracleExactly) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    auto p = oracle::random_classification(rng, 1 + rng.below(5), 1 + rng.below(200), 2 + rng.below(4), 2.0);
    const double value = ece(p);
    EXPECT_EQ(value, oracle::ece_regrouped(p, 15));
    EXPECT_GE(value, 0.0);
    EXPECT_LE(value, 1.0);
  }
}

TEST(TaskScore, RegressionAndClassification) {
  EXPECT_EQ(task_score(regression({{1, 2}}, {1, 2})), 0.0);
  EXPECT_EQ(task_score(regression({{1, 3}}, {2, 2})), 1.0);
  EXPECT_EQ(task_score(classification({Matrix::from_rows({{0.4, 0.6}, {0.6, 0.4}})}, {1, 0})), 1.0);
}

TEST(RelativeScore, SignCorrected) {
  EXPECT_EQ(relative_score_to_reference(0.8, 0.8, true), 0.0);
  EXPECT_NEAR(relative_score_to_reference(0.84, 0.80, true), 5.0, 1e-12);
  EXPECT_NEAR(relative_score_to_reference(0.95, 1.00, false), 100.0 / 95.0 * 100.0 - 100.0, 1e-12);
  EXPECT_THROW(relative_score_to_reference(1.0, 0.0, true), std::invalid_argument);
}

TEST(Metrics, InvariantUnderMemberPermutation) {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto c = oracle::random_classification(rng, 2 + rng.below(6), 10, 3);
    const auto cp = permuted(c, rng);
    EXPECT_NEAR(pairwise_kl(c), pairwise_kl(cp), 1e-12);
    EXPECT_NEAR(argmax_disagreement(c), argmax_disagreement(cp), 1e-12);
    EXPECT_NEAR(ece(c), ece(cp), 1e-12);
    const auto r = oracle::random_regression(rng, 2 + rng.below(6), 10);
    EXPECT_NEAR(ambiguity(r), ambiguity(permuted(r, rng)), 1e-12);
  }
}

TEST(Evaluate, FieldsPerTaskAndEnsembleSize) {
  Rng rng(6);
  const auto c = oracle::random_classification(rng, 3, 20, 2);
  const auto rc = evaluate(c);
  EXPECT_TRUE(rc.pairwise_kl && rc.disagreement && rc.ece && rc.accuracy);
  EXPECT_FALSE(rc.ambiguity || rc.rmse);
  const auto r = oracle::random_regression(rng, 3, 20);
  const auto rr = evaluate(r, 2.0);
  EXPECT_TRUE(rr.ambiguity && rr.normalized_ambiguity && rr.rmse);
  EXPECT_EQ(*rr.normalized_ambiguity, *rr.ambiguity / 2.0);
  const auto single = evaluate(oracle::random_classification(rng, 1, 20, 2));
  EXPECT_FALSE(single.pairwise_kl || single.disagreement);
  EXPECT_TRUE(single.accuracy.has_value());
}

TEST(MemberPredictions, ValidateRejectsBadProbabilities) {
  auto p = classification({Matrix::from_rows({{0.5, 0.6}})}, {0});
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace tabens
