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

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "tabens/numkernel.hpp"
#include "tabens/rng.hpp"

namespace tabens {
namespace {

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(matmul(a, Matrix::identity(2)), a);
}

TEST(Matmul, HandComputedColumnProduct) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(matmul(a, Matrix::column({1, 1})), Matrix::column({3, 7}));
}

TEST(Matmul, EmptyInnerDimensionGivesZeros) {
  const Matrix c = matmul(Matrix(3, 0), Matrix(0, 2));
  EXPECT_EQ(c, Matrix(3, 2));
}

TEST(Matmul, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
}

TEST(Matmul, AgreesWithNaiveTripleLoopBitwise) {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = sample_gaussian(rng, 1 + rng.below(9), 1 + rng.below(9), 1.0);
    const Matrix b = sample_gaussian(rng, a.cols(), 1 + rng.below(9), 1.0);
    EXPECT_EQ(matmul(a, b), oracle::naive_matmul(a, b));
    EXPECT_EQ(matmul_nt(a, transpose(b)), oracle::naive_matmul(a, b));
    EXPECT_EQ(matmul_tn(transpose(a), b), oracle::naive_matmul(a, b));
  }
}

TEST(Matmul, AssociativeOnRandomTriples) {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const Matrix a = sample_gaussian(rng, 4, 4, 1.0);
    const Matrix b = sample_gaussian(rng, 4, 4, 1.0);
    const Matrix c = sample_gaussian(rng, 4, 4, 1.0);
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    EXPECT_LT(frobenius_norm(subtract(left, right)), 1e-10 * frobenius_norm(left));
  }
}

TEST(Hadamard, HandComputed) {
  EXPECT_EQ(hadamard(Matrix::from_rows({{2, 2}, {1, 1}}), Matrix::from_rows({{1, 2}, {3, 4}})),
            Matrix::from_rows({{2, 4}, {3, 4}}));
}

TEST(Hadamard, OnesIsBitwiseIdentityAndZerosAnnihilate) {
  Rng rng(3);
  const Matrix a = sample_gaussian(rng, 5, 6, 2.0);
  EXPECT_EQ(hadamard(a, Matrix::ones(5, 6)), a);
  EXPECT_EQ(hadamard(a, Matrix(5, 6)), Matrix(5, 6));
  EXPECT_THROW(hadamard(a, Matrix(6, 5)), ShapeError);
}

TEST(ElementwiseDivide, SelfQuotientIsOnes) {
  Rng rng(5);
  const Matrix a = add_scalar(sample_gaussian(rng, 3, 4, 0.1), 2.0);
  EXPECT_EQ(elementwise_divide(a, a), Matrix::ones(3, 4));
}

TEST(ElementwiseDivide, CounterexampleBlock) {
  const Matrix w1 = Matrix::from_rows({{2, 1}, {1, 2}});
  EXPECT_EQ(elementwise_divide(w1, Matrix::ones(2, 2)), w1);
}

TEST(ElementwiseDivide, ZeroDenominatorNamesEntry) {
  Matrix b = Matrix::ones(2, 3);
  b(1, 2) = 0.0;
  try {
    elementwise_divide(Matrix::ones(2, 3), b);
    FAIL() << "expected SingularEntryError";
  } catch (const SingularEntryError& e) {
    EXPECT_EQ(e.row(), 1u);
    EXPECT_EQ(e.col(), 2u);
  }
}

TEST(ElementwiseDivide, UndoesHadamard) {
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const Matrix a = add_scalar(sample_gaussian(rng, 4, 4, 0.2), 1.0);
    const Matrix b = sample_gaussian(rng, 4, 4, 1.0);
    const Matrix back = elementwise_divide(hadamard(a, b), a);
    EXPECT_LE(max_abs(subtract(back, b)), 1e-12);
  }
}

TEST(SampleGaussian, ZeroSigmaIsExactlyZero) {
  Rng rng(1);
  EXPECT_EQ(sample_gaussian(rng, 3, 7, 0.0), Matrix(3, 7));
}

TEST(SampleGaussian, NegativeSigmaThrows) {
  Rng rng(1);
  EXPECT_THROW(sample_gaussian(rng, 2, 2, -0.1), std::invalid_argument);
}

TEST(SampleGaussian, MomentsOverAMillionDraws) {
  Rng rng(2024);
  const Matrix m = sample_gaussian(rng, 1000, 1000, 1.0);
  const double mean = std::accumulate(m.data().begin(), m.data().end(), 0.0) / 1e6;
  double var = 0.0;
  for (double v : m.data()) var += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(std::sqrt(var / 1e6), 1.0, 0.01);
}

TEST(SampleGaussian, SameSeedSameMatrix) {
  Rng a(42), b(42);
  EXPECT_EQ(sample_gaussian(a, 8, 8, 0.5), sample_gaussian(b, 8, 8, 0.5));
}

TEST(KaimingUniform, SingleEntryWithinBound) {
  Rng rng(0);
  EXPECT_LE(std::abs(kaiming_uniform(rng, 1, 1)(0, 0)), std::sqrt(6.0));
}

TEST(KaimingUniform, BoundHoldsOverSeeds) {
  const double bound = std::sqrt(6.0 / 64.0);
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    Rng rng(seed);
    EXPECT_LE(max_abs(kaiming_uniform(rng, 64, 64)), bound);
  }
}

TEST(KaimingUniform, SameSeedSameMatrix) {
  Rng a(3), b(3);
  EXPECT_EQ(kaiming_uniform(a, 16, 9), kaiming_uniform(b, 16, 9));
}

TEST(Rng, ForkedStreamsDifferAndDoNotAdvanceParent) {
  Rng parent(5);
  const auto before = parent.counter();
  Rng s1 = parent.fork(1), s2 = parent.fork(2);
  EXPECT_EQ(parent.counter(), before);
  EXPECT_NE(s1.next_u64(), s2.next_u64());
}

TEST(Rng, BelowStaysInRange) {
  Rng rng(8);
  for (int i = 0; i < 10000; ++i) EXPECT_LT(rng.below(7), 7u);
}

TEST(StableSoftmax, SymmetricLogits) {
  const auto p = stable_softmax(std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(StableSoftmax, LargeLogitDoesNotOverflow) {
  const auto p = stable_softmax(std::vector<double>{1000.0, 0.0});
  EXPECT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  EXPECT_GE(p[1], 0.0);
  EXPECT_LT(p[1], 1e-300);
}

TEST(StableSoftmax, LogThreeGivesThreeQuarters) {
  const auto p = stable_softmax(std::vector<double>{std::log(3.0), 0.0});
  EXPECT_NEAR(p[0], 0.75, 1e-15);
  EXPECT_NEAR(p[1], 0.25, 1e-15);
}

TEST(StableSoftmax, SumsToOneAndRejectsNonFinite) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> logits(1 + rng.below(10));
    for (double& v : logits) v = 20.0 * rng.gaussian();
    const auto p = stable_softmax(logits);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  }
  EXPECT_THROW(stable_softmax(std::vector<double>{NAN, 0.0}), std::domain_error);
  EXPECT_THROW(stable_softmax(std::vector<double>{INFINITY, 0.0}), std::domain_error);
}

TEST(StablePrimitives, SigmoidAndSoftplusExtremes) {
  EXPECT_DOUBLE_EQ(stable_sigmoid(0.0), 0.5);
  EXPECT_NEAR(stable_sigmoid(800.0), 1.0, 1e-15);
  EXPECT_GE(stable_sigmoid(-800.0), 0.0);
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
  EXPECT_NEAR(log_sum_exp(std::vector<double>{1000.0, 1000.0}), 1000.0 + std::log(2.0), 1e-12);
}

TEST(NumericalRank, OuterProductIsRankOne) {
  Rng rng(6);
  const Matrix u = add_scalar(sample_gaussian(rng, 5, 1, 0.3), 1.0);
  const Matrix v = add_scalar(sample_gaussian(rng, 4, 1, 0.3), 1.0);
  EXPECT_EQ(numerical_rank(outer(u, v)), 1u);
}

TEST(NumericalRank, ZeroMatrixIsRankZero) { EXPECT_EQ(numerical_rank(Matrix(4, 3)), 0u); }

TEST(NumericalRank, MaskResidualHasRankAtMostTwo) {
  Rng rng(12);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t m = 2 + rng.below(7), n = 2 + rng.below(7);
    const Matrix s = add_scalar(sample_gaussian(rng, m, 1, 1.0), 0.5);
    const Matrix r = add_scalar(sample_gaussian(rng, n, 1, 1.0), 0.5);
    EXPECT_LE(numerical_rank(add_scalar(outer(s, r), -1.0)), 2u);
  }
}

TEST(NumericalRank, LowRankProductsAgreeWithEliminationOracle) {
  Rng rng(13);
  for (int t = 0; t < 300; ++t) {
    const std::size_t m = 1 + rng.below(8), n = 1 + rng.below(8), r = 1 + rng.below(5);
    const Matrix prod = matmul_nt(sample_gaussian(rng, m, r, 1.0), sample_gaussian(rng, n, r, 1.0));
    const std::size_t rank = numerical_rank(prod, 1e-9);
    EXPECT_LE(rank, std::min({r, m, n}));
    EXPECT_EQ(rank, oracle::gaussian_rank(prod, 1e-9));
  }
}

}  // namespace
}  // namespace tabens
