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
//
// On-disk feature stores and report files. Frame store: one CSV per
// recording (header = catalog names) plus a JSON sidecar with the recording
// id, sample rate and catalog hash. Global store: one CSV for the corpus
// plus a JSON group index.

#ifndef VBT_STORE_HPP_
#define VBT_STORE_HPP_

#include <string>
#include <vector>

#include "vbt/frame_features.hpp"
#include "vbt/global_features.hpp"
#include "vbt/metrics.hpp"
#include "vbt/screening.hpp"
#include "vbt/trajectory.hpp"

namespace vbt {

void write_frame_csv(const std::string& path, const FrameFeatureMap& map,
                     const FeatureCatalog& catalog = FeatureCatalog::standard(),
                     int sample_rate_hz = 0);
FrameFeatureMap read_frame_csv(const std::string& path);

void write_global_csv(const std::string& path, const std::vector<GlobalFeatureVector>& vectors,
                      const GlobalFeatureSchema& schema = GlobalFeatureSchema::standard());
std::vector<GlobalFeatureVector> read_global_csv(
    const std::string& path, const GlobalFeatureSchema& schema = GlobalFeatureSchema::standard());

void write_group_index_json(const std::string& path,
                            const GlobalFeatureSchema& schema = GlobalFeatureSchema::standard());

// Selection report: feature,group,t_paired,p_paired,t_indep,p_indep,in_A,in_B
void write_selection_csv(const std::string& path, const FeatureSelection& sel,
                         const std::vector<std::string>& names,
                         const std::vector<std::string>& groups);
void write_tally_csv(const std::string& path, const std::vector<GroupTally>& tallies);

// Trajectory report: patient,visit,timestamp,score,gold
struct TrajectoryRow {
  std::string patient_id;
  int visit = 0;
  double timestamp = 0.0;
  double score = 0.0;
  std::string gold;  // empty when absent
};
void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows);

void write_metrics_json(const std::string& path, const MetricReport& report, double auroc,
                        bool has_auroc);
void write_roc_csv(const std::string& path, const RocCurve& curve);

// Deterministic float formatting shared by every report writer.
std::string format_value(double v);

}  // namespace vbt

#endif  // VBT_STORE_HPP_
