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

#ifndef VBT_MANIFEST_HPP_
#define VBT_MANIFEST_HPP_

#include <string>
#include <vector>

namespace vbt {

// One recording row: CSV columns
// patient_id,timestamp_days,state,task,split,path
struct ManifestEntry {
  std::string patient_id;
  double timestamp_days = 0.0;
  std::string state;  // decompensated | post_treatment | stable | readmitted | ""
  std::string task;   // a | u | i | pg | mm | mlh | count
  std::string split;  // train | test | followup
  std::string path;   // audio file or frame-feature CSV
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  // Parses and validates: known task tags and splits, strictly increasing
  // per-patient timestamps, train/test subject-disjoint.
  static DatasetManifest load(const std::string& path);
  void save(const std::string& path) const;
  void validate() const;

  std::vector<std::string> patients_in_split(const std::string& split) const;
  std::vector<ManifestEntry> entries_for_patient(const std::string& patient_id) const;
};

}  // namespace vbt

#endif  // VBT_MANIFEST_HPP_
