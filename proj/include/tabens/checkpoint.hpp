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

#ifndef TABENS_CHECKPOINT_HPP_
#define TABENS_CHECKPOINT_HPP_

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "tabens/model.hpp"

namespace tabens {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint layout (JSON):
//   {"format": "tabens-checkpoint", "version": 1,
//    "config": {...}, "encoder": {...}, "output_scaler": {...},
//    "parameters": {"<slot name>": {"rows": R, "cols": C, "data": [...]}, ...}}
// Slot names are those of parameter_slots(). Doubles are written in shortest
// round-trip form, so save followed by load is bit-exact.
nlohmann::json checkpoint_to_json(const EnsembleModel& model);
EnsembleModel checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const EnsembleModel& model, const std::string& path);
EnsembleModel load_checkpoint(const std::string& path);

}  // namespace tabens

#endif  // TABENS_CHECKPOINT_HPP_
