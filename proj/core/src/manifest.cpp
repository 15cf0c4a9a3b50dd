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

#include "vbt/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vbt/error.hpp"

namespace vbt {
namespace {

const std::set<std::string> kTasks = {"a", "u", "i", "pg", "mm", "mlh", "count"};
const std::set<std::string> kSplits = {"train", "test", "followup"};
const std::set<std::string> kStates = {"decompensated", "post_treatment", "stable",
                                       "readmitted", ""};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

DatasetManifest DatasetManifest::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open manifest: " + path);
  DatasetManifest manifest;
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line != "patient_id,timestamp_days,state,task,split,path") {
        throw ValidationError("manifest header mismatch in " + path);
      }
      continue;
    }
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 6) {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": need 6 fields");
    }
    ManifestEntry e;
    e.patient_id = fields[0];
    try {
      e.timestamp_days = std::stod(fields[1]);
    } catch (const std::exception&) {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": bad timestamp");
    }
    e.state = fields[2];
    e.task = fields[3];
    e.split = fields[4];
    e.path = fields[5];
    manifest.entries.push_back(std::move(e));
  }
  manifest.validate();
  return manifest;
}

void DatasetManifest::validate() const {
  std::map<std::string, double> last_stamp;
  std::map<std::string, std::set<std::string>> patient_splits;
  for (const ManifestEntry& e : entries) {
    if (e.patient_id.empty()) throw ValidationError("manifest: empty patient id");
    if (!kTasks.count(e.task)) throw ValidationError("manifest: unknown task tag '" + e.task + "'");
    if (!kSplits.count(e.split)) throw ValidationError("manifest: unknown split '" + e.split + "'");
    if (!kStates.count(e.state)) throw ValidationError("manifest: unknown state '" + e.state + "'");
    auto it = last_stamp.find(e.patient_id);
    if (it != last_stamp.end() && !(e.timestamp_days > it->second)) {
      throw ValidationError("manifest: timestamps not strictly increasing for patient " +
                            e.patient_id);
    }
    last_stamp[e.patient_id] = e.timestamp_days;
    patient_splits[e.patient_id].insert(e.split);
  }
  for (const auto& [pid, splits] : patient_splits) {
    if (splits.count("train") && splits.count("test")) {
      throw ValidationError("manifest: patient " + pid + " appears in both train and test");
    }
  }
}

void DatasetManifest::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw ComputeError("cannot write manifest: " + path);
  f << "patient_id,timestamp_days,state,task,split,path\n";
  char buf[64];
  for (const ManifestEntry& e : entries) {
    std::snprintf(buf, sizeof(buf), "%.10g", e.timestamp_days);
    f << e.patient_id << ',' << buf << ',' << e.state << ',' << e.task << ',' << e.split << ','
      << e.path << '\n';
  }
}

std::vector<std::string> DatasetManifest::patients_in_split(const std::string& split) const {
  std::vector<std::string> out;
  for (const ManifestEntry& e : entries) {
    if (e.split == split && std::find(out.begin(), out.end(), e.patient_id) == out.end()) {
      out.push_back(e.patient_id);
    }
  }
  return out;
}

std::vector<ManifestEntry> DatasetManifest::entries_for_patient(
    const std::string& patient_id) const {
  std::vector<ManifestEntry> out;
  for (const ManifestEntry& e : entries) {
    if (e.patient_id == patient_id) out.push_back(e);
  }
  return out;
}

}  // namespace vbt
