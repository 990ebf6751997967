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

#ifndef TABENS_EXPRESSIVITY_HPP_
#define TABENS_EXPRESSIVITY_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tabens/numkernel.hpp"
#include "tabens/rng.hpp"

namespace tabens {

// Rank-1 mask parameterization: W_k = W ⊙ (s_k r_k^T). All entries of W, s_k
// and r_k must be nonzero.
struct BeParams {
  Matrix weight;              // m x n
  std::vector<Matrix> s;      // m x 1 per member
  std::vector<Matrix> r;      // n x 1 per member

  std::size_t members() const { return s.size(); }
  // Throws ShapeError on inconsistent shapes, SingularEntryError on a zero entry.
  void validate() const;
};

// Identity-residual low-rank parameterization: W_k = W ⊙ (1 + A_k B_k^T).
struct LomeParams {
  Matrix weight;              // m x n
  std::vector<Matrix> a;      // m x rank per member
  std::vector<Matrix> b;      // n x rank per member
  std::size_t rank = 0;

  std::size_t members() const { return a.size(); }
  void validate() const;
};

Matrix be_effective_weight(const BeParams& be, std::size_t member);
Matrix lome_effective_weight(const LomeParams& lome, std::size_t member);

struct InfeasibleRankError : std::domain_error {
  InfeasibleRankError(std::size_t rank, std::size_t target);
  std::size_t rank;
  std::size_t target;
};

struct Factorization {
  Matrix a;  // m x r
  Matrix b;  // n x r
};

// A B^T = M with A, B of width r; columns past the numerical rank are zero.
// Pivoted cross elimination: take the largest residual entry (i, j), emit
// column j and row i / pivot, deflate. Throws InfeasibleRankError when
// numerical_rank(M) > r.
Factorization rank_factorize_padded(const Matrix& m, std::size_t r);

// Each member's mask residual s_k r_k^T - 1 has rank <= 2, so it factors
// exactly at any r >= 2. Throws std::invalid_argument for r < 2.
LomeParams embed_be_into_lome(const BeParams& be, std::size_t r);

struct MinorWitness {
  std::size_t row0 = 0, row1 = 0;
  std::size_t col0 = 0, col1 = 0;
  double determinant = 0.0;
};

struct RatioRankResult {
  std::size_t rank_lower_bound = 1;
  std::optional<MinorWitness> witness;
};

inline constexpr double kMinorTolerance = 1e-9;

// Q = w1 ⊘ w2. A minor [i, i'] x [j, j'] vanishes when
//   |Q_ij Q_i'j' - Q_ij' Q_i'j| <= tol * max(|Q_ij Q_i'j'|, |Q_ij' Q_i'j|).
// Returns bound 1 when every minor vanishes, else bound 2 and the first
// nonvanishing minor in lexicographic (row0, row1, col0, col1) order.
// Throws SingularEntryError if w2 has a zero entry.
RatioRankResult ratio_rank_witness(const Matrix& w1, const Matrix& w2,
                                   double tol = kMinorTolerance);

// Two members over shared `weight`: member 0 has residual e1 f1^T + e2 f2^T,
// member 1 has zero adapters. Requires m, n, r >= 2 and nonzero weight.
LomeParams build_counterexample(const Matrix& weight, std::size_t r);

// Entries of magnitude in [0.5, 2] with random sign.
BeParams sample_be_params(Rng& rng, std::size_t m, std::size_t n, std::size_t members);
Matrix sample_nonzero_matrix(Rng& rng, std::size_t rows, std::size_t cols);

struct ExpressivityVerdict {
  std::size_t trial = 0;
  std::size_t m = 0, n = 0, members = 0;
  double embed_max_rel_error = 0.0;
  bool embed_ok = false;
  std::size_t counterexample_bound = 0;
  double counterexample_determinant = 0.0;
  bool counterexample_ok = false;
  std::size_t be_pair_bound = 0;  // ratio bound on two members of the BE sample
  bool be_pair_ok = false;

  bool ok() const { return embed_ok && counterexample_ok && be_pair_ok; }
};

// One randomized check of both directions: embed a random rank-1-mask
// ensemble (m, n in [2, 8], K in [2, 4]) at r = 2, and certify the
// counterexample over a random nonzero weight.
ExpressivityVerdict expressivity_trial(std::uint64_t seed, std::size_t trial);

}  // namespace tabens

#endif  // TABENS_EXPRESSIVITY_HPP_
