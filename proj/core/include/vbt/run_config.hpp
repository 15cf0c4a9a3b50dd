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

#ifndef VBT_RUN_CONFIG_HPP_
#define VBT_RUN_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "vbt/cohort.hpp"
#include "vbt/pse.hpp"
#include "vbt/trajectory.hpp"

namespace vbt {

// Run configuration parsed from a TOML-style text file: [section] headers,
// key = value lines, # comments. Values: integers, floats, booleans, quoted
// strings and flat [a, b, c] arrays. Unknown sections or keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  int eval_seeds = 5;  // training runs reported as mean +/- stddev

  PseConfig pse;
  CohortConfig cohort;
  FnnConfig fnn;
  AggregationParams aggregation;
  bool bt_soft_counts = false;
  double screening_alpha = 0.05;
  std::string global_csv;  // optional: global feature store for merge modes

  static RunConfig load(const std::string& path);
  static RunConfig parse(const std::string& text, const std::string& origin = "<memory>");
  // Serializes every resolved value; written next to outputs for provenance.
  std::string to_toml() const;
};

}  // namespace vbt

#endif  // VBT_RUN_CONFIG_HPP_
