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

#include "tabens/layers.hpp"

#include <stdexcept>

namespace tabens {

namespace {

// Multiplies column j of m by v[j] (v is a column vector of length m.cols()).
Matrix scale_columns(const Matrix& m, const Matrix& v, std::size_t v_col) {
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] *= v(j, v_col);
  }
  return out;
}

void check_member_batch(const MemberBatch& batch, std::size_t members, std::size_t width,
                        const char* what) {
  if (batch.size() != members) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(members) +
                     " member batches, got " + std::to_string(batch.size()));
  }
  for (const Matrix& m : batch) {
    if (m.cols() != width || m.rows() != batch.front().rows()) {
      throw ShapeError(std::string(what) + ": member batch has shape " + m.shape_string() +
                       ", expected width " + std::to_string(width));
    }
  }
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + " has shape " + m.shape_string() + ", expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

std::string_view to_string(AdapterKind kind) {
  switch (kind) {
    case AdapterKind::MultiplicativeLowRank:
      return "multiplicative";
    case AdapterKind::AdditiveLowRank:
      return "additive";
    case AdapterKind::Rank1Mask:
      return "rank1";
  }
  return "unknown";
}

AdapterKind parse_adapter_kind(std::string_view name) {
  if (name == "multiplicative" || name == "MultiplicativeLowRank") {
    return AdapterKind::MultiplicativeLowRank;
  }
  if (name == "additive" || name == "AdditiveLowRank") return AdapterKind::AdditiveLowRank;
  if (name == "rank1" || name == "Rank1Mask") return AdapterKind::Rank1Mask;
  throw std::invalid_argument("unknown adapter kind '" + std::string(name) + "'");
}

EnsembleLinearParams make_ensemble_linear(AdapterKind kind, std::size_t d_in, std::size_t d_out,
                                          std::size_t members, std::size_t rank) {
  if (members == 0) throw std::invalid_argument("ensemble linear: members must be >= 1");
  if (kind != AdapterKind::Rank1Mask && rank == 0) {
    throw std::invalid_argument("ensemble linear: rank must be >= 1");
  }
  EnsembleLinearParams p;
  p.kind = kind;
  p.members = members;
  p.rank = kind == AdapterKind::Rank1Mask ? 1 : rank;
  p.weight = Matrix(d_out, d_in);
  p.bias = Matrix(1, d_out);
  p.weight_grad = Matrix(d_out, d_in);
  p.bias_grad = Matrix(1, d_out);
  const std::size_t width = p.adapter_width();
  const double fill = kind == AdapterKind::Rank1Mask ? 1.0 : 0.0;
  for (std::size_t k = 0; k < members; ++k) {
    p.adapter_out.emplace_back(d_out, width, fill);
    p.adapter_in.emplace_back(d_in, width, fill);
    p.adapter_out_grad.emplace_back(d_out, width);
    p.adapter_in_grad.emplace_back(d_in, width);
  }
  return p;
}

void validate_shapes(const EnsembleLinearParams& p) {
  const std::size_t w = p.adapter_width();
  require_shape(p.bias, 1, p.d_out(), "bias");
  require_shape(p.weight_grad, p.d_out(), p.d_in(), "weight grad");
  require_shape(p.bias_grad, 1, p.d_out(), "bias grad");
  if (p.adapter_out.size() != p.members || p.adapter_in.size() != p.members ||
      p.adapter_out_grad.size() != p.members || p.adapter_in_grad.size() != p.members) {
    throw ShapeError("ensemble linear: adapter count does not match member count");
  }
  for (std::size_t k = 0; k < p.members; ++k) {
    require_shape(p.adapter_out[k], p.d_out(), w, "adapter_out");
    require_shape(p.adapter_in[k], p.d_in(), w, "adapter_in");
    require_shape(p.adapter_out_grad[k], p.d_out(), w, "adapter_out grad");
    require_shape(p.adapter_in_grad[k], p.d_in(), w, "adapter_in grad");
  }
}

void zero_grad(EnsembleLinearParams& p) {
  p.weight_grad.fill(0.0);
  p.bias_grad.fill(0.0);
  for (auto& g : p.adapter_out_grad) g.fill(0.0);
  for (auto& g : p.adapter_in_grad) g.fill(0.0);
}

Matrix adapter_mask(const EnsembleLinearParams& p, std::size_t member) {
  if (member >= p.members) throw std::out_of_range("adapter_mask: member index out of range");
  const Matrix residual = matmul_nt(p.adapter_out[member], p.adapter_in[member]);
  switch (p.kind) {
    case AdapterKind::MultiplicativeLowRank:
      return add_scalar(residual, 1.0);
    case AdapterKind::Rank1Mask:
      return residual;
    case AdapterKind::AdditiveLowRank:
      break;
  }
  throw std::logic_error("adapter_mask: additive layers have no multiplicative mask");
}

Matrix effective_weight(const EnsembleLinearParams& p, std::size_t member) {
  if (member >= p.members) {
    throw std::out_of_range("effective_weight: member " + std::to_string(member) +
                            " out of range for K=" + std::to_string(p.members));
  }
  if (p.kind == AdapterKind::AdditiveLowRank) {
    return add(p.weight, matmul_nt(p.adapter_out[member], p.adapter_in[member]));
  }
  return hadamard(p.weight, adapter_mask(p, member));
}

namespace {

Matrix factored_member_forward(const EnsembleLinearParams& p, std::size_t k, const Matrix& h) {
  const Matrix& a = p.adapter_out[k];
  const Matrix& b = p.adapter_in[k];
  const Matrix wt = transpose(p.weight);
  switch (p.kind) {
    case AdapterKind::MultiplicativeLowRank: {
      Matrix z = matmul(h, wt);
      for (std::size_t t = 0; t < p.rank; ++t) {
        const Matrix y = matmul(scale_columns(h, b, t), wt);
        add_inplace(z, scale_columns(y, a, t));
      }
      return z;
    }
    case AdapterKind::AdditiveLowRank: {
      Matrix z = matmul(h, wt);
      add_inplace(z, matmul_nt(matmul(h, b), a));
      return z;
    }
    case AdapterKind::Rank1Mask:
      return scale_columns(matmul(scale_columns(h, b, 0), wt), a, 0);
  }
  throw std::logic_error("unreachable");
}

}  // namespace

LinearForward forward_ensemble_linear(const EnsembleLinearParams& p, const MemberBatch& inputs,
                                      bool training, ForwardPath path) {
  check_member_batch(inputs, p.members, p.d_in(), "forward_ensemble_linear");
  LinearForward result;
  result.outputs.reserve(p.members);
  if (training) {
    result.cache.emplace();
    result.cache->inputs = inputs;
  }
  for (std::size_t k = 0; k < p.members; ++k) {
    Matrix z;
    if (path == ForwardPath::Factored) {
      z = factored_member_forward(p, k, inputs[k]);
      if (training) {
        if (p.kind != AdapterKind::AdditiveLowRank) {
          result.cache->masks.push_back(adapter_mask(p, k));
        }
        result.cache->effective.push_back(effective_weight(p, k));
      }
    } else {
      Matrix wk;
      if (p.kind == AdapterKind::AdditiveLowRank) {
        wk = effective_weight(p, k);
      } else {
        Matrix mask = adapter_mask(p, k);
        wk = hadamard(p.weight, mask);
        if (training) result.cache->masks.push_back(std::move(mask));
      }
      z = matmul_nt(inputs[k], wk);
      if (training) result.cache->effective.push_back(std::move(wk));
    }
    add_row_inplace(z, p.bias);
    result.outputs.push_back(std::move(z));
  }
  return result;
}

MemberBatch backward_ensemble_linear(EnsembleLinearParams& p,
                                     const std::optional<LinearCache>& cache,
                                     const MemberBatch& upstream) {
  if (!cache) throw std::logic_error("backward_ensemble_linear: no cache (forward not in training mode)");
  check_member_batch(upstream, p.members, p.d_out(), "backward_ensemble_linear");
  MemberBatch input_grads;
  input_grads.reserve(p.members);
  for (std::size_t k = 0; k < p.members; ++k) {
    const Matrix& g = upstream[k];
    const Matrix& h = cache->inputs[k];
    // Gradient with respect to the materialized member weight.
    const Matrix dwk = matmul_tn(g, h);
    add_inplace(p.bias_grad, column_sums(g));
    switch (p.kind) {
      case AdapterKind::AdditiveLowRank:
        add_inplace(p.weight_grad, dwk);
        add_inplace(p.adapter_out_grad[k], matmul(dwk, p.adapter_in[k]));
        add_inplace(p.adapter_in_grad[k], matmul_tn(dwk, p.adapter_out[k]));
        break;
      case AdapterKind::MultiplicativeLowRank:
      case AdapterKind::Rank1Mask: {
        add_inplace(p.weight_grad, hadamard(dwk, cache->masks[k]));
        const Matrix dmask = hadamard(dwk, p.weight);
        add_inplace(p.adapter_out_grad[k], matmul(dmask, p.adapter_in[k]));
        add_inplace(p.adapter_in_grad[k], matmul_tn(dmask, p.adapter_out[k]));
        break;
      }
    }
    input_grads.push_back(matmul(g, cache->effective[k]));
  }
  return input_grads;
}

ActivationForward relu_dropout(const MemberBatch& z, double p_drop, bool training, Rng& rng) {
  if (!(p_drop >= 0.0 && p_drop < 1.0)) {
    throw std::invalid_argument("relu_dropout: p_drop must lie in [0, 1)");
  }
  ActivationForward result;
  result.outputs.reserve(z.size());
  if (training) result.cache.emplace();
  const double keep_scale = 1.0 / (1.0 - p_drop);
  for (const Matrix& zk : z) {
    Matrix out(zk.rows(), zk.cols());
    Matrix mask;
    if (training) mask = Matrix(zk.rows(), zk.cols());
    auto zd = zk.data();
    auto od = out.data();
    for (std::size_t i = 0; i < zd.size(); ++i) {
      double m = zd[i] > 0.0 ? 1.0 : 0.0;
      if (training && p_drop > 0.0) {
        // The draw happens for every unit so the stream does not depend on signs.
        m = rng.uniform() < p_drop ? 0.0 : m * keep_scale;
      }
      od[i] = m == 0.0 ? 0.0 : zd[i] * m;
      if (training) mask.data()[i] = m;
    }
    result.outputs.push_back(std::move(out));
    if (training) result.cache->masks.push_back(std::move(mask));
  }
  return result;
}

MemberBatch relu_dropout_backward(const std::optional<ActivationCache>& cache,
                                  const MemberBatch& upstream) {
  if (!cache) throw std::logic_error("relu_dropout_backward: no cache");
  if (cache->masks.size() != upstream.size()) throw ShapeError("relu_dropout_backward: member count");
  MemberBatch grads;
  grads.reserve(upstream.size());
  for (std::size_t k = 0; k < upstream.size(); ++k) {
    grads.push_back(hadamard(upstream[k], cache->masks[k]));
  }
  return grads;
}

MemberHeads make_member_heads(std::size_t members, std::size_t d_in, std::size_t d_out) {
  MemberHeads heads;
  for (std::size_t k = 0; k < members; ++k) {
    heads.weight.emplace_back(d_out, d_in);
    heads.bias.emplace_back(1, d_out);
    heads.weight_grad.emplace_back(d_out, d_in);
    heads.bias_grad.emplace_back(1, d_out);
  }
  return heads;
}

void zero_grad(MemberHeads& heads) {
  for (auto& g : heads.weight_grad) g.fill(0.0);
  for (auto& g : heads.bias_grad) g.fill(0.0);
}

HeadForward forward_heads(const MemberHeads& heads, const MemberBatch& inputs, bool training) {
  if (heads.members() == 0) throw ShapeError("forward_heads: no heads");
  check_member_batch(inputs, heads.members(), heads.weight.front().cols(), "forward_heads");
  HeadForward result;
  result.outputs.reserve(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Matrix o = matmul_nt(inputs[k], heads.weight[k]);
    add_row_inplace(o, heads.bias[k]);
    result.outputs.push_back(std::move(o));
  }
  if (training) result.inputs = inputs;
  return result;
}

MemberBatch backward_heads(MemberHeads& heads, const std::optional<MemberBatch>& inputs,
                           const MemberBatch& upstream) {
  if (!inputs) throw std::logic_error("backward_heads: no cache");
  MemberBatch grads;
  grads.reserve(upstream.size());
  for (std::size_t k = 0; k < upstream.size(); ++k) {
    add_inplace(heads.weight_grad[k], matmul_tn(upstream[k], (*inputs)[k]));
    add_inplace(heads.bias_grad[k], column_sums(upstream[k]));
    grads.push_back(matmul(upstream[k], heads.weight[k]));
  }
  return grads;
}

}  // namespace tabens
