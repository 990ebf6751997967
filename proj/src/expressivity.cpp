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

#include "tabens/expressivity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tabens {

namespace {

void require_nonzero(const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m(i, j) == 0.0) throw SingularEntryError(i, j);
    }
  }
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + m.shape_string());
  }
}

}  // namespace

void BeParams::validate() const {
  if (s.size() != r.size()) throw ShapeError("BeParams: s and r member counts differ");
  require_nonzero(weight);
  for (std::size_t k = 0; k < s.size(); ++k) {
    require_shape(s[k], weight.rows(), 1, "BeParams.s");
    require_shape(r[k], weight.cols(), 1, "BeParams.r");
    require_nonzero(s[k]);
    require_nonzero(r[k]);
  }
}

void LomeParams::validate() const {
  if (a.size() != b.size()) throw ShapeError("LomeParams: a and b member counts differ");
  for (std::size_t k = 0; k < a.size(); ++k) {
    require_shape(a[k], weight.rows(), rank, "LomeParams.a");
    require_shape(b[k], weight.cols(), rank, "LomeParams.b");
  }
}

Matrix be_effective_weight(const BeParams& be, std::size_t member) {
  if (member >= be.members()) throw std::out_of_range("be_effective_weight: member out of range");
  return hadamard(be.weight, matmul_nt(be.s[member], be.r[member]));
}

Matrix lome_effective_weight(const LomeParams& lome, std::size_t member) {
  if (member >= lome.members()) throw std::out_of_range("lome_effective_weight: member out of range");
  return hadamard(lome.weight, add_scalar(matmul_nt(lome.a[member], lome.b[member]), 1.0));
}

InfeasibleRankError::InfeasibleRankError(std::size_t rank_, std::size_t target_)
    : std::domain_error("rank_factorize_padded: numerical rank " + std::to_string(rank_) +
                        " exceeds target rank " + std::to_string(target_)),
      rank(rank_),
      target(target_) {}

Factorization rank_factorize_padded(const Matrix& m, std::size_t r) {
  const std::size_t rho = numerical_rank(m);
  if (rho > r) throw InfeasibleRankError(rho, r);
  Factorization f{Matrix(m.rows(), r), Matrix(m.cols(), r)};
  const double scale = max_abs(m);
  if (scale == 0.0) return f;

  Matrix residual = m;
  for (std::size_t t = 0; t < r; ++t) {
    std::size_t pi = 0, pj = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < residual.rows(); ++i) {
      for (std::size_t j = 0; j < residual.cols(); ++j) {
        if (std::abs(residual(i, j)) > best) {
          best = std::abs(residual(i, j));
          pi = i;
          pj = j;
        }
      }
    }
    // Remaining entries are rounding noise of the exact residual.
    if (best <= 1e-15 * scale) break;
    const double pivot = residual(pi, pj);
    for (std::size_t i = 0; i < m.rows(); ++i) f.a(i, t) = residual(i, pj);
    for (std::size_t j = 0; j < m.cols(); ++j) f.b(j, t) = residual(pi, j) / pivot;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) residual(i, j) -= f.a(i, t) * f.b(j, t);
    }
  }
  return f;
}

LomeParams embed_be_into_lome(const BeParams& be, std::size_t r) {
  if (r < 2) throw std::invalid_argument("embed_be_into_lome: r must be >= 2");
  be.validate();
  LomeParams lome;
  lome.weight = be.weight;
  lome.rank = r;
  for (std::size_t k = 0; k < be.members(); ++k) {
    const Matrix residual = add_scalar(matmul_nt(be.s[k], be.r[k]), -1.0);
    Factorization f = rank_factorize_padded(residual, r);
    lome.a.push_back(std::move(f.a));
    lome.b.push_back(std::move(f.b));
  }
  return lome;
}

RatioRankResult ratio_rank_witness(const Matrix& w1, const Matrix& w2, double tol) {
  const Matrix q = elementwise_divide(w1, w2);
  RatioRankResult result;
  for (std::size_t i0 = 0; i0 < q.rows(); ++i0) {
    for (std::size_t i1 = i0 + 1; i1 < q.rows(); ++i1) {
      for (std::size_t j0 = 0; j0 < q.cols(); ++j0) {
        for (std::size_t j1 = j0 + 1; j1 < q.cols(); ++j1) {
          const double p = q(i0, j0) * q(i1, j1);
          const double c = q(i0, j1) * q(i1, j0);
          const double det = p - c;
          if (std::abs(det) > tol * std::max(std::abs(p), std::abs(c))) {
            result.rank_lower_bound = 2;
            result.witness = MinorWitness{i0, i1, j0, j1, det};
            return result;
          }
        }
      }
    }
  }
  return result;
}

LomeParams build_counterexample(const Matrix& weight, std::size_t r) {
  if (weight.rows() < 2 || weight.cols() < 2 || r < 2) {
    throw std::invalid_argument("build_counterexample: m, n and r must all be >= 2");
  }
  require_nonzero(weight);
  LomeParams lome;
  lome.weight = weight;
  lome.rank = r;
  Matrix a(weight.rows(), r);
  Matrix b(weight.cols(), r);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  b(0, 0) = 1.0;
  b(1, 1) = 1.0;
  lome.a = {a, Matrix(weight.rows(), r)};
  lome.b = {b, Matrix(weight.cols(), r)};
  return lome;
}

Matrix sample_nonzero_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data()) {
    const double magnitude = rng.uniform(0.5, 2.0);
    v = rng.below(2) == 0 ? magnitude : -magnitude;
  }
  return m;
}

BeParams sample_be_params(Rng& rng, std::size_t m, std::size_t n, std::size_t members) {
  BeParams be;
  be.weight = sample_nonzero_matrix(rng, m, n);
  for (std::size_t k = 0; k < members; ++k) {
    be.s.push_back(sample_nonzero_matrix(rng, m, 1));
    be.r.push_back(sample_nonzero_matrix(rng, n, 1));
  }
  return be;
}

ExpressivityVerdict expressivity_trial(std::uint64_t seed, std::size_t trial) {
  Rng rng = Rng(seed).fork(trial);
  ExpressivityVerdict v;
  v.trial = trial;
  v.m = 2 + rng.below(7);
  v.n = 2 + rng.below(7);
  v.members = 2 + rng.below(3);

  const BeParams be = sample_be_params(rng, v.m, v.n, v.members);
  const LomeParams lome = embed_be_into_lome(be, 2);
  for (std::size_t k = 0; k < v.members; ++k) {
    const Matrix target = be_effective_weight(be, k);
    const double err = frobenius_norm(subtract(lome_effective_weight(lome, k), target)) /
                       frobenius_norm(target);
    v.embed_max_rel_error = std::max(v.embed_max_rel_error, err);
  }
  v.embed_ok = v.embed_max_rel_error < 1e-9;

  const RatioRankResult be_pair =
      ratio_rank_witness(be_effective_weight(be, 0), be_effective_weight(be, 1));
  v.be_pair_bound = be_pair.rank_lower_bound;
  v.be_pair_ok = be_pair.rank_lower_bound == 1;

  const LomeParams ce = build_counterexample(sample_nonzero_matrix(rng, v.m, v.n), 2);
  const RatioRankResult witness =
      ratio_rank_witness(lome_effective_weight(ce, 0), lome_effective_weight(ce, 1));
  v.counterexample_bound = witness.rank_lower_bound;
  v.counterexample_determinant = witness.witness ? witness.witness->determinant : 0.0;
  v.counterexample_ok = witness.rank_lower_bound == 2;
  return v;
}

}  // namespace tabens
