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

#include "tabens/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "tabens/config.hpp"

namespace tabens {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from_json(const json& j, const std::string& name) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw CheckpointError("checkpoint: size mismatch in '" + name + "'");
  return Matrix(rows, cols, std::move(data));
}

json encoder_to_json(const PleEmbedding& e) {
  json layout = json::array();
  for (FeatureKind k : e.layout) layout.push_back(k == FeatureKind::Numeric ? "numeric" : "categorical");
  json numeric = json::array();
  for (const auto& f : e.numeric) numeric.push_back(f.edges);
  return {{"layout", layout}, {"numeric_edges", numeric}, {"cardinality", e.cardinality}};
}

PleEmbedding encoder_from_json(const json& j) {
  PleEmbedding e;
  for (const auto& k : j.at("layout")) {
    const auto s = k.get<std::string>();
    if (s == "numeric") {
      e.layout.push_back(FeatureKind::Numeric);
    } else if (s == "categorical") {
      e.layout.push_back(FeatureKind::Categorical);
    } else {
      throw CheckpointError("checkpoint: unknown feature kind '" + s + "'");
    }
  }
  for (const auto& edges : j.at("numeric_edges")) e.numeric.push_back({edges.get<std::vector<double>>()});
  e.cardinality = j.at("cardinality").get<std::vector<std::size_t>>();
  return e;
}

}  // namespace

json checkpoint_to_json(const EnsembleModel& model) {
  json params = json::object();
  for (const auto& slot : parameter_slots(const_cast<EnsembleModel&>(model))) {
    params[slot.name] = matrix_to_json(*slot.value);
  }
  const auto& s = model.output_scaler;
  return {{"format", "tabens-checkpoint"},
          {"version", kCheckpointVersion},
          {"config", to_json(model.config)},
          {"encoder", encoder_to_json(model.encoder)},
          {"output_scaler",
           {{"mean", s.mean}, {"std", s.std}, {"degenerate", s.degenerate}, {"fitted", s.fitted}}},
          {"parameters", params}};
}

EnsembleModel checkpoint_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "tabens-checkpoint") {
      throw CheckpointError("checkpoint: not a tabens checkpoint");
    }
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
    }
    const ModelConfig config = model_config_from_json(j.at("config"));
    PleEmbedding encoder = encoder_from_json(j.at("encoder"));
    // Shapes come from a fresh initialization; values are then overwritten.
    Rng rng(0);
    EnsembleModel model = init_model(config, std::move(encoder), rng);
    const auto& s = j.at("output_scaler");
    model.output_scaler.mean = s.at("mean").get<double>();
    model.output_scaler.std = s.at("std").get<double>();
    model.output_scaler.degenerate = s.at("degenerate").get<bool>();
    model.output_scaler.fitted = s.at("fitted").get<bool>();

    const auto& params = j.at("parameters");
    const auto slots = parameter_slots(model);
    if (params.size() != slots.size()) throw CheckpointError("checkpoint: parameter count mismatch");
    for (const auto& slot : slots) {
      if (!params.contains(slot.name)) throw CheckpointError("checkpoint: missing '" + slot.name + "'");
      Matrix m = matrix_from_json(params[slot.name], slot.name);
      if (!m.same_shape(*slot.value)) {
        throw CheckpointError("checkpoint: shape mismatch for '" + slot.name + "'");
      }
      *slot.value = std::move(m);
    }
    return model;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
}

void save_checkpoint(const EnsembleModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CheckpointError("checkpoint: cannot open '" + path + "' for writing");
  out << checkpoint_to_json(model).dump() << '\n';
  if (!out) throw CheckpointError("checkpoint: write failed for '" + path + "'");
}

EnsembleModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("checkpoint: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: parse error: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace tabens
