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

#ifndef VBT_TRAJECTORY_HPP_
#define VBT_TRAJECTORY_HPP_

#include <span>
#include <string>
#include <vector>

#include "vbt/dsp.hpp"

namespace vbt {

// One pairwise comparison outcome between visits i < j of a patient;
// y_hat >= 0.5 reads "deteriorated by visit j".
struct PairwiseOutcome {
  std::string patient_id;
  int i = 0;
  int j = 0;
  double y_hat = 0.5;
};

// Decay-weighted aggregation parameters: weights exp(-theta * dt) normalized
// over predecessors, mapped by sigmoid(phi1 * s + phi0).
struct AggregationParams {
  double theta = 0.0;
  double phi0 = -2.0;
  double phi1 = 4.0;
};

struct TrajectoryEstimate {
  std::string patient_id;
  std::vector<int> visit_index;   // targets j >= 1
  std::vector<double> scores;     // in [0, 1]
  AggregationParams params;
};

// Aggregates a patient's outcomes into per-visit scores. `timestamps` are the
// visit times in days; every target visit j in [1, T) must have at least one
// outcome with i < j.
TrajectoryEstimate aggregate_scores(std::span<const PairwiseOutcome> outcomes,
                                    std::span<const double> timestamps,
                                    const AggregationParams& params);

struct GoldLabel {
  std::string patient_id;
  int visit_index = 0;
  double value = 0.0;  // in [0, 1]
};

enum class CalibrationLoss { kBce, kMse };

struct CalibrationResult {
  AggregationParams params;
  double final_loss = 0.0;
  int iterations = 0;
  bool saturated = false;  // degenerate fit (all labels equal)
  std::vector<double> loss_curve;
};

// Fits (theta, phi) by full-batch gradient descent with halving line search
// through the aggregation; the loss never increases across iterations.
CalibrationResult fit_calibration(
    std::span<const PairwiseOutcome> outcomes,
    const std::vector<std::pair<std::string, std::vector<double>>>& patient_timestamps,
    std::span<const GoldLabel> gold, CalibrationLoss loss = CalibrationLoss::kBce,
    int max_iterations = 500, AggregationParams init = {});

struct RankResult {
  std::vector<double> strengths;  // positive, normalized so sum(log pi) = 0
  int iterations = 0;
  bool converged = false;
};

// Bradley-Terry strengths by minorization-maximization over a K x K win-count
// matrix (win_counts[k][l] = wins of k over l). The comparison graph must be
// connected; disconnected graphs raise ValidationError naming the components.
RankResult bradley_terry_strengths(const Matrix& win_counts, double tol = 1e-10,
                                   int max_iterations = 10000);

}  // namespace vbt

#endif  // VBT_TRAJECTORY_HPP_
