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

#ifndef VBT_GLOBAL_FEATURES_HPP_
#define VBT_GLOBAL_FEATURES_HPP_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "vbt/frame_features.hpp"

namespace vbt {

inline constexpr int kNumFunctionals = 17;

// Fixed-order statistics collapsing one descriptor trajectory to 17 numbers.
extern const std::array<const char*, kNumFunctionals> kFunctionalNames;

// mean, stddev, skewness, kurtosis, min, max, range, q1, q2, q3, iqr,
// pctl1, pctl99, slope, slope residual, mean-crossing rate, fraction above
// mean + stddev. Trajectories shorter than 2 give 0 for spread/slope terms.
std::array<double, kNumFunctionals> apply_functionals(std::span<const double> traj);

// Linear-interpolated percentile of an unsorted sequence, q in [0, 100].
double percentile(std::span<const double> values, double q);

// Per-recording global feature vector with the 11-group index.
struct GlobalFeatureVector {
  std::vector<double> values;
  std::string source_id;
};

class GlobalFeatureSchema {
 public:
  // Schema induced by a frame catalog: one trajectory per descriptor column
  // plus first-order frame differences of the 26 RASTA band columns, each
  // expanded with the 17 functionals.
  static const GlobalFeatureSchema& standard();

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  // Group labels "G1".."G11" aligned with names().
  const std::vector<std::string>& groups() const { return groups_; }
  const std::string& catalog_hash() const { return catalog_hash_; }
  std::vector<std::size_t> indices_in_group(const std::string& group) const;

 private:
  GlobalFeatureSchema(const FeatureCatalog& catalog);
  std::vector<std::string> names_;
  std::vector<std::string> groups_;
  std::string catalog_hash_;
};

// Group of a source descriptor id under the global taxonomy ("G1".."G11").
std::string global_group_of_lld(int lld_id);

GlobalFeatureVector build_global_vector(const FrameFeatureMap& map);

}  // namespace vbt

#endif  // VBT_GLOBAL_FEATURES_HPP_
