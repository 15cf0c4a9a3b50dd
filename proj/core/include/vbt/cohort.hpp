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
// Synthetic longitudinal cohorts with controllable inter-individual
// heterogeneity, analytic Bayes yardsticks, and the cross-sectional FNN
// baseline.

#ifndef VBT_COHORT_HPP_
#define VBT_COHORT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "vbt/metrics.hpp"
#include "vbt/pse.hpp"

namespace vbt {

struct CohortConfig {
  int n_patients = 200;
  int visits_per_patient = 2;  // visit 0 = admission (severity 1), 1 = discharge (0)
  int global_feature_dim = 0;  // 0 = derived from the schema; otherwise validated
  int frame_channels = kNumFrameFeatures;
  int frames_per_visit = 60;
  double sigma_between = 2.5;      // per-channel patient baseline stddev
  double sigma_within = 0.4;       // AR(1) innovation stddev
  double ar_coefficient = 0.9;
  double delta = 1.0;              // condition effect along the unit direction
  double affected_fraction = 0.1;  // fraction of channels the effect touches
  double rehosp_probability = 0.2; // severity draw for follow-up visits
  std::uint64_t seed = 1;
};

// Ground-truth direction for a visit pair: 1 when severity increases
// (deterioration), 0 when it decreases. Equal-severity pairs are omitted.
struct PairDirection {
  std::string patient_id;
  int patient_index = 0;
  int i = 0;
  int j = 0;
  int deterioration = 0;
};

struct SyntheticCohort {
  CohortConfig config;
  std::vector<PatientTimeline> timelines;
  std::vector<std::vector<int>> severity;  // [patient][visit]
  std::vector<PairDirection> pair_labels;
};

SyntheticCohort generate_cohort(const CohortConfig& cfg);

// The unit-norm effect direction over channels (first ceil(rho * C) channels).
std::vector<double> effect_direction(const CohortConfig& cfg);

struct BayesReference {
  double sigma_v = 0.0;  // per-visit projected noise stddev implied by the generator
  double cross_sectional_accuracy = 0.5;
  double paired_accuracy = 0.5;
  bool degenerate = false;  // sigma_v = 0
};

// Closed-form optimal accuracies for the generator's observation model:
// cross-sectional Phi(delta / (2 sqrt(sigma_b^2 + sigma_v^2))), paired
// Phi(delta / (sqrt(2) sigma_v)).
BayesReference bayes_reference_accuracies(const CohortConfig& cfg);

// Inverse helper: innovation stddev that makes the per-visit projected noise
// equal sigma_v for the given frame count and AR coefficient.
double sigma_within_for_visit_noise(double sigma_v, int frames, double ar = 0.9);

double standard_normal_cdf(double x);

// Subject-disjoint split of patient indices (shuffled by seed).
struct SubjectSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
SubjectSplit split_subjects(std::size_t n_patients, double train_fraction, std::uint64_t seed);

struct FnnConfig {
  int hidden = 64;
  double lr = 1e-3;
  int epochs = 150;
  int batch_size = 32;
  double weight_decay = 3e-3;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  bool shuffle_labels = false;  // null-control mode
  // Paired-test screening on the training split before fitting (the same
  // selection step the baseline pipeline applies); 0 disables it.
  double screen_alpha = 0.05;
};

struct FnnResult {
  MetricReport report;       // on held-out patients
  double test_accuracy = 0.0;
  double train_accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

// Two-layer FNN (tanh hidden, sigmoid output) trained on single-visit global
// vectors to predict the binary state; evaluated subject-disjoint.
FnnResult cross_sectional_fnn(const SyntheticCohort& cohort, const FnnConfig& cfg);

struct PairwiseEvalResult {
  double accuracy = 0.0;
  MetricReport report;
  double auroc = 0.5;
  std::size_t n_samples = 0;
};

// Evaluates compare_visits against the cohort's ground-truth directions over
// the given patients, presenting every labeled pair in both orders.
PairwiseEvalResult evaluate_pse_pairwise(const SyntheticCohort& cohort,
                                         const std::vector<std::size_t>& patient_indices,
                                         const PseModel& model);

}  // namespace vbt

#endif  // VBT_COHORT_HPP_
