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

#include "tabens/ple.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tabens {

std::size_t PleEmbedding::width() const {
  std::size_t w = 0;
  for (const auto& f : numeric) w += f.width();
  for (std::size_t c : cardinality) w += c + 1;
  return w;
}

PleFeature fit_ple_feature(std::span<const double> train_values, std::size_t n_bins) {
  if (n_bins < 2) throw std::invalid_argument("fit_ple: n_bins must be >= 2");
  if (train_values.empty()) throw std::invalid_argument("fit_ple: empty feature column");
  std::vector<double> sorted(train_values.begin(), train_values.end());
  std::sort(sorted.begin(), sorted.end());
  const double last = static_cast<double>(sorted.size() - 1);

  PleFeature feature;
  for (std::size_t t = 0; t <= n_bins; ++t) {
    const double pos = last * static_cast<double>(t) / static_cast<double>(n_bins);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    double edge = sorted[lo];
    if (frac > 0.0 && lo + 1 < sorted.size()) edge += frac * (sorted[lo + 1] - sorted[lo]);
    if (feature.edges.empty() || edge > feature.edges.back()) feature.edges.push_back(edge);
  }
  return feature;
}

PleEmbedding fit_ple(const std::vector<std::vector<double>>& train_values, std::size_t n_bins) {
  PleEmbedding e;
  for (const auto& column : train_values) {
    e.layout.push_back(FeatureKind::Numeric);
    e.numeric.push_back(fit_ple_feature(column, n_bins));
  }
  return e;
}

PleEmbedding fit_feature_encoder(const Matrix& features, std::span<const std::size_t> train_rows,
                                 const std::vector<FeatureKind>& layout,
                                 const std::vector<std::size_t>& cardinality,
                                 std::size_t n_bins) {
  if (layout.size() != features.cols()) {
    throw ShapeError("fit_feature_encoder: layout does not match feature columns");
  }
  PleEmbedding e;
  e.layout = layout;
  e.cardinality = cardinality;
  std::size_t n_cat = 0;
  std::vector<double> column(train_rows.size());
  for (std::size_t j = 0; j < layout.size(); ++j) {
    if (layout[j] == FeatureKind::Categorical) {
      ++n_cat;
      continue;
    }
    for (std::size_t i = 0; i < train_rows.size(); ++i) column[i] = features(train_rows[i], j);
    e.numeric.push_back(fit_ple_feature(column, n_bins));
  }
  if (n_cat != cardinality.size()) {
    throw ShapeError("fit_feature_encoder: cardinality count does not match categorical columns");
  }
  return e;
}

namespace {

void encode_into(const PleEmbedding& e, std::span<const double> x, double* out) {
  std::size_t num = 0, cat = 0;
  for (std::size_t j = 0; j < e.layout.size(); ++j) {
    if (e.layout[j] == FeatureKind::Numeric) {
      const PleFeature& f = e.numeric[num++];
      if (f.degenerate()) {
        *out++ = x[j] - f.edges.front();
        continue;
      }
      for (std::size_t t = 1; t < f.edges.size(); ++t) {
        const double v = (x[j] - f.edges[t - 1]) / (f.edges[t] - f.edges[t - 1]);
        *out++ = std::clamp(v, 0.0, 1.0);
      }
    } else {
      const std::size_t card = e.cardinality[cat++];
      std::size_t code = card;
      if (x[j] >= 0.0 && x[j] < static_cast<double>(card)) code = static_cast<std::size_t>(x[j]);
      for (std::size_t c = 0; c <= card; ++c) *out++ = c == code ? 1.0 : 0.0;
    }
  }
}

}  // namespace

std::vector<double> encode_ple(const PleEmbedding& embedding, std::span<const double> x) {
  if (x.size() != embedding.input_width()) {
    throw ShapeError("encode_ple: expected " + std::to_string(embedding.input_width()) +
                     " features, got " + std::to_string(x.size()));
  }
  std::vector<double> out(embedding.width());
  encode_into(embedding, x, out.data());
  return out;
}

Matrix encode_batch(const PleEmbedding& embedding, const Matrix& x) {
  if (x.cols() != embedding.input_width()) {
    throw ShapeError("encode_batch: expected " + std::to_string(embedding.input_width()) +
                     " features, got " + std::to_string(x.cols()));
  }
  Matrix out(x.rows(), embedding.width());
  for (std::size_t i = 0; i < x.rows(); ++i) encode_into(embedding, x.row(i), out.row(i).data());
  return out;
}

}  // namespace tabens
