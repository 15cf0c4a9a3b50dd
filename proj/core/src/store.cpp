// Copyright 2026 The vbt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vbt/store.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vbt/error.hpp"

namespace vbt {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ComputeError("cannot write " + path);
  return f;
}

}  // namespace

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_frame_csv(const std::string& path, const FrameFeatureMap& map,
                     const FeatureCatalog& catalog, int sample_rate_hz) {
  if (map.values.cols() != catalog.entries().size()) {
    throw ValidationError("frame map width does not match the catalog");
  }
  std::ofstream f = open_out(path);
  for (std::size_t i = 0; i < catalog.entries().size(); ++i) {
    f << (i ? "," : "") << catalog.entries()[i].name;
  }
  f << '\n';
  for (std::size_t r = 0; r < map.values.rows(); ++r) {
    for (std::size_t c = 0; c < map.values.cols(); ++c) {
      f << (c ? "," : "") << format_value(map.values.at(r, c));
    }
    f << '\n';
  }

  nlohmann::json meta;
  meta["recording_id"] = map.source_id;
  meta["sample_rate_hz"] = sample_rate_hz;
  meta["n_frames"] = map.values.rows();
  meta["catalog_hash"] = map.catalog_hash;
  std::ofstream m = open_out(path + ".meta.json");
  m << meta.dump(2) << '\n';
}

FrameFeatureMap read_frame_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open frame CSV: " + path);
  std::string line;
  if (!std::getline(f, line)) throw ValidationError("empty frame CSV: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);

  FrameFeatureMap map;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      throw ValidationError("ragged row in frame CSV: " + path);
    }
    for (const std::string& s : fields) values.push_back(std::stod(s));
    ++rows;
  }
  if (rows == 0) throw ValidationError("frame CSV has no rows: " + path);
  map.values = Matrix(rows, header.size());
  map.values.data() = std::move(values);

  // sidecar carries identity; fall back to the standard catalog when the
  // header matches it
  std::ifstream m(path + ".meta.json");
  if (m) {
    nlohmann::json meta;
    m >> meta;
    map.source_id = meta.value("recording_id", "");
    map.catalog_hash = meta.value("catalog_hash", "");
  } else {
    const FeatureCatalog& catalog = FeatureCatalog::standard();
    if (header.size() != catalog.entries().size()) {
      throw ValidationError("frame CSV has no sidecar and a non-standard header: " + path);
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] != catalog.entries()[i].name) {
        throw ValidationError("frame CSV header mismatch at column " + std::to_string(i) +
                              ": " + path);
      }
    }
    map.catalog_hash = catalog.hash();
  }
  return map;
}

void write_global_csv(const std::string& path, const std::vector<GlobalFeatureVector>& vectors,
                      const GlobalFeatureSchema& schema) {
  std::ofstream f = open_out(path);
  f << "recording_id";
  for (const std::string& n : schema.names()) f << ',' << n;
  f << '\n';
  for (const GlobalFeatureVector& v : vectors) {
    if (v.values.size() != schema.size()) {
      throw ValidationError("global vector size does not match the schema");
    }
    f << v.source_id;
    for (double x : v.values) f << ',' << format_value(x);
    f << '\n';
  }
}

std::vector<GlobalFeatureVector> read_global_csv(const std::string& path,
                                                 const GlobalFeatureSchema& schema) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open global CSV: " + path);
  std::string line;
  if (!std::getline(f, line)) throw ValidationError("empty global CSV: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);
  if (header.size() != schema.size() + 1 || header[0] != "recording_id") {
    throw ValidationError("global CSV header does not match the schema: " + path);
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (header[i + 1] != schema.names()[i]) {
      throw ValidationError("global CSV header mismatch at column " + std::to_string(i + 1) +
                            ": " + path);
    }
  }
  std::vector<GlobalFeatureVector> out;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) throw ValidationError("ragged global CSV row: " + path);
    GlobalFeatureVector v;
    v.source_id = fields[0];
    v.values.reserve(schema.size());
    for (std::size_t i = 1; i < fields.size(); ++i) v.values.push_back(std::stod(fields[i]));
    out.push_back(std::move(v));
  }
  return out;
}

void write_group_index_json(const std::string& path, const GlobalFeatureSchema& schema) {
  nlohmann::json j;
  j["catalog_hash"] = schema.catalog_hash();
  nlohmann::json idx = nlohmann::json::object();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    idx[schema.names()[i]] = schema.groups()[i];
  }
  j["groups"] = idx;
  std::ofstream f = open_out(path);
  f << j.dump(2) << '\n';
}

void write_selection_csv(const std::string& path, const FeatureSelection& sel,
                         const std::vector<std::string>& names,
                         const std::vector<std::string>& groups) {
  std::ofstream f = open_out(path);
  f << "feature,group,t_paired,p_paired,t_indep,p_indep,in_A,in_B\n";
  auto contains = [](const std::vector<std::size_t>& xs, std::size_t v) {
    for (std::size_t x : xs) {
      if (x == v) return true;
    }
    return false;
  };
  for (const FeatureTestRow& row : sel.per_feature) {
    const std::size_t j = row.feature;
    f << (j < names.size() ? names[j] : std::to_string(j)) << ','
      << (j < groups.size() ? groups[j] : "") << ',' << format_value(row.paired.t) << ','
      << format_value(row.paired.p_two_sided) << ',' << format_value(row.independent.t) << ','
      << format_value(row.independent.p_two_sided) << ','
      << (contains(sel.paired_set, j) ? 1 : 0) << ','
      << (contains(sel.independent_set, j) ? 1 : 0) << '\n';
  }
}

void write_tally_csv(const std::string& path, const std::vector<GroupTally>& tallies) {
  std::ofstream f = open_out(path);
  f << "group,total,paired_selected,paired_pct,independent_selected,independent_pct\n";
  for (const GroupTally& t : tallies) {
    f << t.group << ',' << t.total << ',' << t.paired_selected << ','
      << format_value(t.paired_pct) << ',' << t.independent_selected << ','
      << format_value(t.independent_pct) << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows) {
  std::ofstream f = open_out(path);
  f << "patient,visit,timestamp,score,gold\n";
  for (const TrajectoryRow& r : rows) {
    f << r.patient_id << ',' << r.visit << ',' << format_value(r.timestamp) << ','
      << format_value(r.score) << ',' << r.gold << '\n';
  }
}

void write_metrics_json(const std::string& path, const MetricReport& report, double auroc,
                        bool has_auroc) {
  nlohmann::json j;
  j["accuracy"] = report.accuracy;
  j["precision"] = report.precision;
  j["sensitivity"] = report.sensitivity;
  j["specificity"] = report.specificity;
  j["macro_f1"] = report.macro_f1;
  nlohmann::json flags = nlohmann::json::array();
  if (report.degenerate_precision) flags.push_back("precision_degenerate");
  if (report.degenerate_sensitivity) flags.push_back("sensitivity_degenerate");
  if (report.degenerate_specificity) flags.push_back("specificity_degenerate");
  j["flags"] = flags;
  if (has_auroc) j["auroc"] = auroc;
  std::ofstream f = open_out(path);
  f << j.dump(2) << '\n';
}

void write_roc_csv(const std::string& path, const RocCurve& curve) {
  std::ofstream f = open_out(path);
  f << "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < curve.fpr.size(); ++i) {
    f << format_value(curve.thresholds[i]) << ',' << format_value(curve.fpr[i]) << ','
      << format_value(curve.tpr[i]) << '\n';
  }
}

}  // namespace vbt
