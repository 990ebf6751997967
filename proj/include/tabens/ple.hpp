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

#ifndef TABENS_PLE_HPP_
#define TABENS_PLE_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "tabens/numkernel.hpp"

namespace tabens {

enum class FeatureKind { Numeric, Categorical };

// Piecewise-linear encoding of one numeric feature. With edges
// b_0 < b_1 < ... < b_T the encoding has T components,
//   e_t(x) = clamp((x - b_{t-1}) / (b_t - b_{t-1}), 0, 1).
// A feature whose training values are constant keeps a single edge and is
// encoded as one pass-through component x - b_0.
struct PleFeature {
  std::vector<double> edges;

  bool degenerate() const { return edges.size() < 2; }
  std::size_t width() const { return degenerate() ? 1 : edges.size() - 1; }
};

// Input encoder shared by all members: PLE for numeric columns, one-hot for
// categorical columns. A categorical column with vocabulary size V has V + 1
// one-hot slots; slot V is the unknown bucket, which training rows never use.
struct PleEmbedding {
  std::vector<FeatureKind> layout;       // kind of each input column
  std::vector<PleFeature> numeric;       // one per numeric column, in order
  std::vector<std::size_t> cardinality;  // one per categorical column, in order

  std::size_t input_width() const { return layout.size(); }
  std::size_t width() const;
};

// Empirical quantiles (linear interpolation between order statistics) at
// levels t / n_bins, t = 0..n_bins, with repeated edges collapsed.
// Throws std::invalid_argument for n_bins < 2 or an empty feature column.
PleFeature fit_ple_feature(std::span<const double> train_values, std::size_t n_bins);

// Numeric-only embedding, one entry of `train_values` per feature.
PleEmbedding fit_ple(const std::vector<std::vector<double>>& train_values, std::size_t n_bins);

// Full encoder from a feature matrix whose categorical columns hold integer
// codes in [0, cardinality]. Only `train_rows` contribute to the edges.
PleEmbedding fit_feature_encoder(const Matrix& features, std::span<const std::size_t> train_rows,
                                 const std::vector<FeatureKind>& layout,
                                 const std::vector<std::size_t>& cardinality,
                                 std::size_t n_bins);

// Values outside the training range clamp; categorical codes outside
// [0, cardinality) land in the unknown bucket.
std::vector<double> encode_ple(const PleEmbedding& embedding, std::span<const double> x);
Matrix encode_batch(const PleEmbedding& embedding, const Matrix& x);

}  // namespace tabens

#endif  // TABENS_PLE_HPP_
