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

#ifndef TABENS_LAYERS_HPP_
#define TABENS_LAYERS_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabens/numkernel.hpp"
#include "tabens/rng.hpp"

namespace tabens {

// How a member's effective weight is derived from the shared weight W.
//   MultiplicativeLowRank: W_k = W ⊙ (1 + A_k B_k^T)
//   AdditiveLowRank:       W_k = W + A_k B_k^T
//   Rank1Mask:             W_k = W ⊙ (s_k r_k^T)
enum class AdapterKind { MultiplicativeLowRank, AdditiveLowRank, Rank1Mask };

std::string_view to_string(AdapterKind kind);
// Accepts "multiplicative", "additive", "rank1" (and the enum spellings).
AdapterKind parse_adapter_kind(std::string_view name);

// One batch per member; every member batch has the same number of rows.
using MemberBatch = std::vector<Matrix>;

// Shared weight and bias plus per-member adapters. For the low-rank kinds,
// adapter_out[k] is A_k (d_out x r) and adapter_in[k] is B_k (d_in x r). For
// Rank1Mask they hold s_k (d_out x 1) and r_k (d_in x 1).
struct EnsembleLinearParams {
  AdapterKind kind = AdapterKind::MultiplicativeLowRank;
  std::size_t members = 1;
  std::size_t rank = 1;
  Matrix weight;  // d_out x d_in
  Matrix bias;    // 1 x d_out
  std::vector<Matrix> adapter_out;
  std::vector<Matrix> adapter_in;

  Matrix weight_grad;
  Matrix bias_grad;
  std::vector<Matrix> adapter_out_grad;
  std::vector<Matrix> adapter_in_grad;

  std::size_t d_in() const { return weight.cols(); }
  std::size_t d_out() const { return weight.rows(); }
  std::size_t adapter_width() const { return kind == AdapterKind::Rank1Mask ? 1 : rank; }
};

// All-zero parameters (and gradients) of the right shapes. Adapters of a
// Rank1Mask layer start at ones so that the layer is the shared linear map.
EnsembleLinearParams make_ensemble_linear(AdapterKind kind, std::size_t d_in,
                                          std::size_t d_out, std::size_t members,
                                          std::size_t rank);

// Throws ShapeError if any adapter or gradient slot has the wrong shape.
void validate_shapes(const EnsembleLinearParams& p);
void zero_grad(EnsembleLinearParams& p);

// The multiplicative mask 1 + A_k B_k^T (or s_k r_k^T). Additive layers have no
// mask; calling this on one throws std::logic_error.
Matrix adapter_mask(const EnsembleLinearParams& p, std::size_t member);

// Materialized W_k. Throws std::out_of_range for member >= K.
Matrix effective_weight(const EnsembleLinearParams& p, std::size_t member);

enum class ForwardPath {
  // One product with the materialized W_k per member.
  Materialized,
  // Never forms W_k: for the multiplicative kind,
  //   z = W h + sum_t a_t ⊙ (W (b_t ⊙ h)) + bias.
  Factored,
};

struct LinearCache {
  MemberBatch inputs;
  std::vector<Matrix> effective;  // W_k
  std::vector<Matrix> masks;      // empty for the additive kind
};

struct LinearForward {
  MemberBatch outputs;
  std::optional<LinearCache> cache;  // present iff training
};

// z_k = h_k W_k^T + bias for every member. Inputs are batch x d_in.
LinearForward forward_ensemble_linear(const EnsembleLinearParams& p, const MemberBatch& inputs,
                                      bool training,
                                      ForwardPath path = ForwardPath::Materialized);

// Accumulates parameter gradients into p's gradient slots and returns the
// gradient with respect to each member's input. Throws std::logic_error when
// the cache is missing.
MemberBatch backward_ensemble_linear(EnsembleLinearParams& p,
                                     const std::optional<LinearCache>& cache,
                                     const MemberBatch& upstream);

// ReLU followed by inverted dropout. The cached mask already folds in the
// ReLU indicator and the 1/(1-p) scale.
struct ActivationCache {
  MemberBatch masks;
};

struct ActivationForward {
  MemberBatch outputs;
  std::optional<ActivationCache> cache;
};

// Masks are drawn independently per member. Throws std::invalid_argument
// unless 0 <= p_drop < 1.
ActivationForward relu_dropout(const MemberBatch& z, double p_drop, bool training, Rng& rng);
MemberBatch relu_dropout_backward(const std::optional<ActivationCache>& cache,
                                  const MemberBatch& upstream);

// Independent dense output head per member: o_k = h_k V_k^T + c_k.
struct MemberHeads {
  std::vector<Matrix> weight;  // out x d
  std::vector<Matrix> bias;    // 1 x out
  std::vector<Matrix> weight_grad;
  std::vector<Matrix> bias_grad;

  std::size_t members() const { return weight.size(); }
};

MemberHeads make_member_heads(std::size_t members, std::size_t d_in, std::size_t d_out);
void zero_grad(MemberHeads& heads);

struct HeadForward {
  MemberBatch outputs;
  std::optional<MemberBatch> inputs;  // cached iff training
};

HeadForward forward_heads(const MemberHeads& heads, const MemberBatch& inputs, bool training);
MemberBatch backward_heads(MemberHeads& heads, const std::optional<MemberBatch>& inputs,
                           const MemberBatch& upstream);

}  // namespace tabens

#endif  // TABENS_LAYERS_HPP_
