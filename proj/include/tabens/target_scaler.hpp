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

#ifndef TABENS_TARGET_SCALER_HPP_
#define TABENS_TARGET_SCALER_HPP_

#include <span>
#include <vector>

namespace tabens {

// z-scoring of regression targets with statistics from the training split.
// A constant training target leaves the scaler as the identity and sets
// `degenerate`.
struct TargetScaler {
  double mean = 0.0;
  double std = 1.0;  // population standard deviation
  bool degenerate = false;
  bool fitted = false;

  static TargetScaler fit(std::span<const double> train_targets);

  double scale(double y) const { return fitted ? (y - mean) / std : y; }
  double unscale(double z) const { return fitted ? z * std + mean : z; }
  // Variance of the raw training targets (std^2), 0 when degenerate.
  double variance() const { return degenerate ? 0.0 : std * std; }

  friend bool operator==(const TargetScaler&, const TargetScaler&) = default;
};

}  // namespace tabens

#endif  // TABENS_TARGET_SCALER_HPP_
