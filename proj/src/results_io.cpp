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

#include "tabens/results_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tabens {

using nlohmann::json;

ExportFormat parse_export_format(std::string_view name) {
  if (name == "csv") return ExportFormat::Csv;
  if (name == "json-lines") return ExportFormat::JsonLines;
  throw std::invalid_argument("unknown format '" + std::string(name) + "' (csv, json-lines)");
}

namespace {

constexpr const char* kMetricNames[] = {"pairwise_kl", "disagreement",         "ambiguity",
                                        "normalized_ambiguity", "ece", "accuracy", "rmse"};

using ReportField = std::optional<double> DiversityReport::*;
constexpr ReportField kMetricFields[] = {
    &DiversityReport::pairwise_kl, &DiversityReport::disagreement,
    &DiversityReport::ambiguity,   &DiversityReport::normalized_ambiguity,
    &DiversityReport::ece,         &DiversityReport::accuracy,
    &DiversityReport::rmse,
};
constexpr std::size_t kMetricCount = std::size(kMetricNames);

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_real(*v) : std::string(); }

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cells.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back() += c;
    }
  }
  return cells;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

double parse_real(const std::string& s, const char* column) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::invalid_argument(std::string("results: bad value '") + s + "' in column " + column);
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s, const char* column) {
  char* end = nullptr;
  const std::uint64_t v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || s.front() == '-') {
    throw std::invalid_argument(std::string("results: bad integer '") + s + "' in column " + column);
  }
  return v;
}

std::optional<double> parse_opt(const std::string& s, const char* column) {
  if (s.empty()) return std::nullopt;
  return parse_real(s, column);
}

std::string cell_key_csv(const SweepRecord& r) {
  return quote(r.dataset) + "," + std::string(to_string(r.variant)) + "," +
         std::to_string(r.members) + "," + std::to_string(r.rank) + "," + fmt_real(r.sigma_init);
}

std::string cell_rest_csv(const SweepRecord& r) {
  return std::to_string(r.blocks) + "," + std::to_string(r.width) + "," + fmt_real(r.dropout) +
         "," + std::to_string(r.n_bins) + "," + fmt_real(r.lr) + "," + fmt_real(r.weight_decay);
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json report_to_json(const DiversityReport& r) {
  json j = json::object();
  for (std::size_t m = 0; m < kMetricCount; ++m) j[kMetricNames[m]] = opt_json(r.*kMetricFields[m]);
  return j;
}

}  // namespace

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> columns = [] {
    std::vector<std::string> c = {"dataset", "variant", "K", "r", "sigma_init", "seed"};
    for (const char* m : kMetricNames) c.emplace_back(m);
    for (const char* e : {"L", "d", "dropout", "n_bins", "lr", "weight_decay", "best_epoch",
                          "stopped_epoch"}) {
      c.emplace_back(e);
    }
    return c;
  }();
  return columns;
}

std::string records_to_csv(const std::vector<SweepRecord>& records) {
  std::string out;
  const auto& cols = record_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const auto& r : records) {
    out += cell_key_csv(r) + "," + std::to_string(r.seed);
    for (ReportField f : kMetricFields) out += "," + fmt_opt(r.report.*f);
    out += "," + cell_rest_csv(r) + "," + std::to_string(r.best_epoch) + "," +
           std::to_string(r.stopped_epoch) + "\n";
  }
  return out;
}

std::vector<SweepRecord> parse_records_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw std::invalid_argument("results: empty CSV");
  const auto& cols = record_columns();
  if (split_csv_line(lines.front()) != cols) throw std::invalid_argument("results: unexpected CSV header");
  std::vector<SweepRecord> records;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto c = split_csv_line(lines[l]);
    if (c.size() != cols.size()) {
      throw std::invalid_argument("results: row " + std::to_string(l) + " has " +
                                  std::to_string(c.size()) + " cells");
    }
    SweepRecord r;
    r.dataset = c[0];
    r.variant = parse_adapter_kind(c[1]);
    r.members = parse_uint(c[2], "K");
    r.rank = parse_uint(c[3], "r");
    r.sigma_init = parse_real(c[4], "sigma_init");
    r.seed = parse_uint(c[5], "seed");
    for (std::size_t m = 0; m < kMetricCount; ++m) r.report.*kMetricFields[m] = parse_opt(c[6 + m], kMetricNames[m]);
    std::size_t i = 6 + kMetricCount;
    r.blocks = parse_uint(c[i++], "L");
    r.width = parse_uint(c[i++], "d");
    r.dropout = parse_real(c[i++], "dropout");
    r.n_bins = parse_uint(c[i++], "n_bins");
    r.lr = parse_real(c[i++], "lr");
    r.weight_decay = parse_real(c[i++], "weight_decay");
    r.best_epoch = parse_uint(c[i++], "best_epoch");
    r.stopped_epoch = parse_uint(c[i++], "stopped_epoch");
    records.push_back(std::move(r));
  }
  return records;
}

std::string records_to_json_lines(const std::vector<SweepRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json trace = json::array();
    for (const auto& p : r.trace) trace.push_back({p.epoch, p.value});
    json j = {{"dataset", r.dataset},
              {"variant", std::string(to_string(r.variant))},
              {"K", r.members},
              {"r", r.rank},
              {"sigma_init", r.sigma_init},
              {"seed", r.seed},
              {"metrics", report_to_json(r.report)},
              {"L", r.blocks},
              {"d", r.width},
              {"dropout", r.dropout},
              {"n_bins", r.n_bins},
              {"lr", r.lr},
              {"weight_decay", r.weight_decay},
              {"best_epoch", r.best_epoch},
              {"stopped_epoch", r.stopped_epoch},
              {"initial_trace", opt_json(r.initial_trace)},
              {"trace", trace}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<SweepRecord> parse_records_json_lines(std::string_view text) {
  std::vector<SweepRecord> records;
  try {
    for (std::string_view line : lines_of(text)) {
      const json j = json::parse(line);
      SweepRecord r;
      r.dataset = j.at("dataset").get<std::string>();
      r.variant = parse_adapter_kind(j.at("variant").get<std::string>());
      r.members = j.at("K").get<std::size_t>();
      r.rank = j.at("r").get<std::size_t>();
      r.sigma_init = j.at("sigma_init").get<double>();
      r.seed = j.at("seed").get<std::uint64_t>();
      const json& m = j.at("metrics");
      for (std::size_t k = 0; k < kMetricCount; ++k) r.report.*kMetricFields[k] = opt_from_json(m.at(kMetricNames[k]));
      r.blocks = j.at("L").get<std::size_t>();
      r.width = j.at("d").get<std::size_t>();
      r.dropout = j.at("dropout").get<double>();
      r.n_bins = j.at("n_bins").get<std::size_t>();
      r.lr = j.at("lr").get<double>();
      r.weight_decay = j.at("weight_decay").get<double>();
      r.best_epoch = j.at("best_epoch").get<std::size_t>();
      r.stopped_epoch = j.at("stopped_epoch").get<std::size_t>();
      r.initial_trace = opt_from_json(j.at("initial_trace"));
      for (const auto& p : j.at("trace")) r.trace.push_back({p.at(0).get<std::size_t>(), p.at(1).get<double>()});
      records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("results: bad json-lines record: ") + e.what());
  }
  return records;
}

std::string aggregates_to_csv(const std::vector<CellAggregate>& cells) {
  std::string out = "dataset,variant,K,r,sigma_init,L,d,dropout,n_bins,lr,weight_decay,n_seeds";
  for (const char* m : kMetricNames) out += std::string(",") + m + "_mean," + m + "_std";
  out += '\n';
  for (const auto& c : cells) {
    out += cell_key_csv(c.key) + "," + cell_rest_csv(c.key) + "," + std::to_string(c.n_seeds);
    for (ReportField f : kMetricFields) out += "," + fmt_opt(c.mean.*f) + "," + fmt_opt(c.std.*f);
    out += '\n';
  }
  return out;
}

std::optional<double> report_field(const DiversityReport& report, std::string_view metric) {
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    if (metric == kMetricNames[m]) return report.*kMetricFields[m];
  }
  throw std::invalid_argument("unknown metric '" + std::string(metric) + "'");
}

std::string default_pivot_metric(const std::vector<CellAggregate>& cells) {
  for (const auto& c : cells) {
    if (c.mean.pairwise_kl) return "pairwise_kl";
  }
  return "ambiguity";
}

std::vector<Pivot> make_pivots(const std::vector<CellAggregate>& cells, const std::string& metric) {
  report_field({}, metric);  // validates the name
  std::vector<Pivot> pivots;
  for (const auto& c : cells) {
    auto it = std::find_if(pivots.begin(), pivots.end(), [&](const Pivot& p) {
      return p.dataset == c.key.dataset && p.variant == c.key.variant;
    });
    if (it == pivots.end()) {
      pivots.push_back({c.key.dataset, c.key.variant, metric, {}, {}, {}});
      it = std::prev(pivots.end());
    }
    it->ranks.push_back(c.key.rank);
    it->sigmas.push_back(c.key.sigma_init);
  }
  for (auto& p : pivots) {
    std::sort(p.ranks.begin(), p.ranks.end());
    p.ranks.erase(std::unique(p.ranks.begin(), p.ranks.end()), p.ranks.end());
    std::sort(p.sigmas.begin(), p.sigmas.end());
    p.sigmas.erase(std::unique(p.sigmas.begin(), p.sigmas.end()), p.sigmas.end());
    p.values.assign(p.ranks.size(), std::vector<std::optional<double>>(p.sigmas.size()));
    for (const auto& c : cells) {
      if (c.key.dataset != p.dataset || c.key.variant != p.variant) continue;
      const auto i = static_cast<std::size_t>(
          std::lower_bound(p.ranks.begin(), p.ranks.end(), c.key.rank) - p.ranks.begin());
      const auto j = static_cast<std::size_t>(
          std::lower_bound(p.sigmas.begin(), p.sigmas.end(), c.key.sigma_init) - p.sigmas.begin());
      // Cells differing on other axes collapse; the first one wins.
      if (!p.values[i][j]) p.values[i][j] = report_field(c.mean, metric);
    }
  }
  return pivots;
}

std::string pivots_to_csv(const std::vector<Pivot>& pivots) {
  std::string out;
  for (std::size_t b = 0; b < pivots.size(); ++b) {
    const auto& p = pivots[b];
    if (b) out += '\n';
    out += "# dataset=" + p.dataset + " variant=" + std::string(to_string(p.variant)) +
           " metric=" + p.metric + "\n";
    out += "r";
    for (double s : p.sigmas) out += "," + fmt_real(s);
    out += '\n';
    for (std::size_t i = 0; i < p.ranks.size(); ++i) {
      out += std::to_string(p.ranks[i]);
      for (const auto& v : p.values[i]) out += "," + fmt_opt(v);
      out += '\n';
    }
  }
  return out;
}

std::string traces_to_csv(const std::vector<SweepRecord>& records) {
  std::string out = "dataset,variant,K,r,sigma_init,seed,epoch,value\n";
  for (const auto& r : records) {
    const std::string prefix = cell_key_csv(r) + "," + std::to_string(r.seed) + ",";
    if (r.initial_trace) out += prefix + "0," + fmt_real(*r.initial_trace) + "\n";
    for (const auto& p : r.trace) out += prefix + std::to_string(p.epoch) + "," + fmt_real(p.value) + "\n";
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExportError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw ExportError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void export_results(const GridResult& result, const std::string& path, ExportFormat format) {
  if (result.records.empty()) throw ExportError("export: no records");
  write_text_file(path, format == ExportFormat::Csv ? records_to_csv(result.records)
                                                    : records_to_json_lines(result.records));
  write_text_file(path + ".aggregate.csv", aggregates_to_csv(result.cells));
  write_text_file(path + ".pivot.csv",
                  pivots_to_csv(make_pivots(result.cells, default_pivot_metric(result.cells))));
}

json predictions_to_json(const MemberPredictions& preds) {
  json members = json::array();
  for (const Matrix& m : preds.members) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
      rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    members.push_back(rows);
  }
  return {{"schema_version", kResultsSchemaVersion},
          {"task", std::string(to_string(preds.task.kind))},
          {"n_classes", preds.task.n_classes},
          {"targets", preds.targets},
          {"members", members}};
}

MemberPredictions predictions_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kResultsSchemaVersion) {
      throw std::invalid_argument("predictions: unsupported schema_version");
    }
    MemberPredictions p;
    p.task.kind = parse_task_kind(j.at("task").get<std::string>());
    p.task.n_classes = j.value("n_classes", std::size_t{0});
    if (p.task.kind == TaskKind::Binary) p.task.n_classes = 2;
    p.targets = j.at("targets").get<std::vector<double>>();
    for (const auto& member : j.at("members")) {
      const auto rows = member.get<std::vector<std::vector<double>>>();
      const std::size_t width = rows.empty() ? p.task.probability_width() : rows.front().size();
      Matrix m(rows.size(), width);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != width) throw ShapeError("predictions: ragged member rows");
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
      }
      p.members.push_back(std::move(m));
    }
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("predictions: malformed dump: ") + e.what());
  }
}

json metrics_to_json(const MemberPredictions& preds, const DiversityReport& report) {
  return {{"schema_version", kResultsSchemaVersion},
          {"members", preds.ensemble_size()},
          {"samples", preds.samples()},
          {"metrics", report_to_json(report)}};
}

}  // namespace tabens
