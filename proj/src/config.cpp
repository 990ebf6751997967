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

#include "tabens/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace tabens {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected an object");
  for (const auto& item : j.items()) {
    if (!allowed.contains(item.key())) throw ConfigError(what + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// nlohmann type errors become ConfigError so callers see one error type.
template <typename F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

std::string hpo_kind_name(HpoParam::Kind kind) {
  switch (kind) {
    case HpoParam::Kind::Categorical:
      return "categorical";
    case HpoParam::Kind::IntRange:
      return "int";
    case HpoParam::Kind::Uniform:
      return "uniform";
    case HpoParam::Kind::LogUniform:
      return "loguniform";
  }
  return "unknown";
}

HpoParam::Kind parse_hpo_kind(const std::string& name) {
  if (name == "categorical") return HpoParam::Kind::Categorical;
  if (name == "int") return HpoParam::Kind::IntRange;
  if (name == "uniform") return HpoParam::Kind::Uniform;
  if (name == "loguniform") return HpoParam::Kind::LogUniform;
  throw ConfigError("hpo: unknown distribution '" + name + "'");
}

}  // namespace

json to_json(const ModelConfig& c) {
  return {{"task", std::string(to_string(c.task.kind))},
          {"n_classes", c.task.n_classes},
          {"members", c.members},
          {"rank", c.rank},
          {"sigma_init", c.sigma_init},
          {"blocks", c.blocks},
          {"width", c.width},
          {"dropout", c.dropout},
          {"variant", std::string(to_string(c.variant))},
          {"n_bins", c.n_bins},
          {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j) {
  return guarded("model config", [&] {
    reject_unknown_keys(j,
                        {"task", "n_classes", "members", "rank", "sigma_init", "blocks", "width",
                         "dropout", "variant", "n_bins", "seed"},
                        "model config");
    ModelConfig c;
    try {
      if (j.contains("task")) c.task.kind = parse_task_kind(j["task"].get<std::string>());
      if (j.contains("variant")) c.variant = parse_adapter_kind(j["variant"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("model config: ") + e.what());
    }
    read(j, "n_classes", c.task.n_classes);
    if (c.task.kind == TaskKind::Binary) c.task.n_classes = 2;
    if (c.task.kind == TaskKind::Regression) c.task.n_classes = 0;
    read(j, "members", c.members);
    read(j, "rank", c.rank);
    read(j, "sigma_init", c.sigma_init);
    read(j, "blocks", c.blocks);
    read(j, "width", c.width);
    read(j, "dropout", c.dropout);
    read(j, "n_bins", c.n_bins);
    read(j, "seed", c.seed);
    return c;
  });
}

json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"clip_norm", c.clip_norm},
          {"patience", c.patience},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  return guarded("train config", [&] {
    reject_unknown_keys(j,
                        {"lr", "weight_decay", "batch_size", "max_epochs", "clip_norm", "patience",
                         "beta1", "beta2", "eps", "seed"},
                        "train config");
    TrainConfig c;
    read(j, "lr", c.lr);
    read(j, "weight_decay", c.weight_decay);
    read(j, "batch_size", c.batch_size);
    read(j, "max_epochs", c.max_epochs);
    read(j, "clip_norm", c.clip_norm);
    read(j, "patience", c.patience);
    read(j, "beta1", c.beta1);
    read(j, "beta2", c.beta2);
    read(j, "eps", c.eps);
    read(j, "seed", c.seed);
    return c;
  });
}

json to_json(const SplitSpec& s) {
  json j = {{"train", s.train}, {"val", s.val}, {"test", s.test}, {"seed", s.seed}};
  if (s.train_index_file) j["train_index_file"] = *s.train_index_file;
  if (s.val_index_file) j["val_index_file"] = *s.val_index_file;
  if (s.test_index_file) j["test_index_file"] = *s.test_index_file;
  return j;
}

SplitSpec split_from_json(const json& j) {
  return guarded("split", [&] {
    reject_unknown_keys(j,
                        {"train", "val", "test", "seed", "train_index_file", "val_index_file",
                         "test_index_file"},
                        "split");
    SplitSpec s;
    read(j, "train", s.train);
    read(j, "val", s.val);
    read(j, "test", s.test);
    read(j, "seed", s.seed);
    if (j.contains("train_index_file")) s.train_index_file = j["train_index_file"].get<std::string>();
    if (j.contains("val_index_file")) s.val_index_file = j["val_index_file"].get<std::string>();
    if (j.contains("test_index_file")) s.test_index_file = j["test_index_file"].get<std::string>();
    return s;
  });
}

json to_json(const DatasetRef& r) {
  json j = {{"name", r.name},
            {"csv", r.csv_path},
            {"schema", r.schema_path},
            {"synthetic_rows", r.synthetic_rows},
            {"data_seed", r.data_seed},
            {"standardize", r.standardize},
            {"split", to_json(r.split)}};
  if (r.synthetic) j["synthetic"] = std::string(to_string(*r.synthetic));
  return j;
}

DatasetRef dataset_ref_from_json(const json& j) {
  return guarded("dataset", [&] {
    reject_unknown_keys(j,
                        {"name", "csv", "schema", "synthetic", "synthetic_rows", "data_seed",
                         "standardize", "split"},
                        "dataset");
    DatasetRef r;
    read(j, "name", r.name);
    read(j, "csv", r.csv_path);
    read(j, "schema", r.schema_path);
    if (j.contains("synthetic")) {
      try {
        r.synthetic = parse_synthetic_kind(j["synthetic"].get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("dataset: ") + e.what());
      }
    }
    read(j, "synthetic_rows", r.synthetic_rows);
    read(j, "data_seed", r.data_seed);
    read(j, "standardize", r.standardize);
    if (j.contains("split")) r.split = split_from_json(j["split"]);
    return r;
  });
}

json to_json(const HpoSpace& space) {
  json params = json::array();
  for (const auto& p : space.params) {
    json e = {{"name", p.name}, {"kind", hpo_kind_name(p.kind)}, {"zero_or", p.zero_or}};
    if (p.kind == HpoParam::Kind::Categorical) {
      e["choices"] = p.choices;
    } else {
      e["low"] = p.low;
      e["high"] = p.high;
      if (p.kind == HpoParam::Kind::IntRange) e["step"] = p.step;
    }
    params.push_back(e);
  }
  return params;
}

HpoSpace hpo_space_from_json(const json& j) {
  return guarded("hpo space", [&] {
    if (!j.is_array()) throw ConfigError("hpo space: expected an array");
    HpoSpace space;
    for (const auto& e : j) {
      reject_unknown_keys(e, {"name", "kind", "choices", "low", "high", "step", "zero_or"},
                          "hpo parameter");
      HpoParam p;
      p.name = e.at("name").get<std::string>();
      p.kind = parse_hpo_kind(e.at("kind").get<std::string>());
      read(e, "choices", p.choices);
      read(e, "low", p.low);
      read(e, "high", p.high);
      read(e, "step", p.step);
      read(e, "zero_or", p.zero_or);
      space.params.push_back(std::move(p));
    }
    try {
      space.validate();
    } catch (const std::invalid_argument& err) {
      throw ConfigError(err.what());
    }
    return space;
  });
}

json to_json(const ExperimentConfig& c) {
  json axes = json::array();
  for (const auto& a : c.axes) axes.push_back({{"parameter", a.parameter}, {"values", a.values}});
  json variants = json::array();
  for (AdapterKind v : c.variants) variants.push_back(std::string(to_string(v)));
  return {{"dataset", to_json(c.dataset)},
          {"model", to_json(c.model)},
          {"train", to_json(c.train)},
          {"axes", axes},
          {"seeds", c.seeds},
          {"variants", variants},
          {"epoch_trace", c.epoch_trace},
          {"trace_interval", c.trace_interval},
          {"early_stopping", c.early_stopping},
          {"restore_best", c.restore_best}};
}

ExperimentConfig experiment_from_json(const json& j) {
  return guarded("experiment", [&] {
    reject_unknown_keys(j,
                        {"dataset", "model", "train", "axes", "seeds", "variants", "epoch_trace",
                         "trace_interval", "early_stopping", "restore_best", "hpo"},
                        "experiment");
    ExperimentConfig c;
    if (j.contains("dataset")) c.dataset = dataset_ref_from_json(j["dataset"]);
    if (j.contains("model")) c.model = model_config_from_json(j["model"]);
    if (j.contains("train")) c.train = train_config_from_json(j["train"]);
    if (j.contains("axes")) {
      c.axes.clear();
      for (const auto& a : j["axes"]) {
        reject_unknown_keys(a, {"parameter", "values"}, "axis");
        c.axes.push_back({a.at("parameter").get<std::string>(),
                          a.at("values").get<std::vector<double>>()});
      }
    }
    read(j, "seeds", c.seeds);
    if (j.contains("variants")) {
      c.variants.clear();
      try {
        for (const auto& v : j["variants"]) c.variants.push_back(parse_adapter_kind(v.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("experiment: ") + e.what());
      }
    }
    read(j, "epoch_trace", c.epoch_trace);
    read(j, "trace_interval", c.trace_interval);
    read(j, "early_stopping", c.early_stopping);
    read(j, "restore_best", c.restore_best);
    return c;
  });
}

HpoSettings read_hpo_settings(const json& experiment) {
  HpoSettings s;
  if (!experiment.contains("hpo")) return s;
  return guarded("hpo", [&] {
    const json& h = experiment["hpo"];
    reject_unknown_keys(h, {"budget", "seed", "space"}, "hpo");
    read(h, "budget", s.budget);
    read(h, "seed", s.seed);
    if (h.contains("space")) s.space = hpo_space_from_json(h["space"]);
    return s;
  });
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

ExperimentConfig load_experiment(const std::string& path) {
  ExperimentConfig c = experiment_from_json(read_json_file(path));
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  resolve(c.dataset.csv_path);
  resolve(c.dataset.schema_path);
  for (auto* f : {&c.dataset.split.train_index_file, &c.dataset.split.val_index_file,
                  &c.dataset.split.test_index_file}) {
    if (*f) resolve(**f);
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config '") + path + "': " + e.what());
  }
  return c;
}

}  // namespace tabens
