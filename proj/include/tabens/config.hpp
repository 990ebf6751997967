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

#ifndef TABENS_CONFIG_HPP_
#define TABENS_CONFIG_HPP_

#include <string>

#include "json.hpp"
#include "tabens/harness.hpp"

namespace tabens {

// JSON mirrors of the configuration types, field for field. Readers reject
// unknown keys with ConfigError and keep defaults for missing keys.
//
// Experiment file layout:
//   {"dataset": {"name", "csv", "schema", "synthetic", "synthetic_rows",
//                "data_seed", "standardize",
//                "split": {"train", "val", "test", "seed",
//                          "train_index_file", "val_index_file", "test_index_file"}},
//    "model": {"task", "n_classes", "members", "rank", "sigma_init", "blocks",
//              "width", "dropout", "variant", "n_bins", "seed"},
//    "train": {"lr", "weight_decay", "batch_size", "max_epochs", "clip_norm",
//              "patience", "beta1", "beta2", "eps", "seed"},
//    "axes": [{"parameter": "rank", "values": [1, 2]}],
//    "seeds": [0, 1], "variants": ["multiplicative"],
//    "epoch_trace": false, "trace_interval": 5,
//    "early_stopping": true, "restore_best": true,
//    "hpo": {"budget": 20, "seed": 0, "space": [...]}}
// The "hpo" block is optional and read separately by read_hpo_settings.

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

nlohmann::json to_json(const ModelConfig& config);
nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const SplitSpec& split);
nlohmann::json to_json(const DatasetRef& ref);
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const HpoSpace& space);

ModelConfig model_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);
SplitSpec split_from_json(const nlohmann::json& j);
DatasetRef dataset_ref_from_json(const nlohmann::json& j);
ExperimentConfig experiment_from_json(const nlohmann::json& j);
HpoSpace hpo_space_from_json(const nlohmann::json& j);

struct HpoSettings {
  HpoSpace space = HpoSpace::standard();
  std::size_t budget = 20;
  std::uint64_t seed = 0;
};
HpoSettings read_hpo_settings(const nlohmann::json& experiment);

// Parses and validates; relative dataset paths resolve against the file's
// directory.
nlohmann::json read_json_file(const std::string& path);
ExperimentConfig load_experiment(const std::string& path);

}  // namespace tabens

#endif  // TABENS_CONFIG_HPP_
