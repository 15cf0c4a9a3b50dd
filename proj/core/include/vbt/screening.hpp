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

#ifndef VBT_SCREENING_HPP_
#define VBT_SCREENING_HPP_

#include <span>
#include <string>
#include <vector>

#include "vbt/dsp.hpp"

namespace vbt {

// Mean absolute Pearson correlation across sample matrices.
struct CorrelationMatrix {
  Matrix values;  // F x F, entries in [0, 1], unit diagonal
  std::size_t n_samples_averaged = 0;
  std::vector<std::string> notes;  // zero-variance columns encountered
};

// Each sample is a T x F matrix (T observations of F variables, T >= 2).
// Per sample: absolute Pearson correlations, with zero-variance columns
// contributing 0 off-diagonal; entries averaged across samples and the
// diagonal forced to 1.
CorrelationMatrix mean_abs_correlation(std::span<const Matrix> samples);

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p_two_sided = 1.0;
  bool degenerate = false;  // zero variance with unequal means
};

// Pooled-variance two-sample t-test; dof = n_p + n_n - 2.
TTestResult independent_t_test(std::span<const double> p_obs, std::span<const double> n_obs);

// Paired t-test on differences post - pre; dof = n - 1.
TTestResult paired_t_test(std::span<const double> pre_obs, std::span<const double> post_obs);

// Two-sided Student-t p-value via the regularized incomplete beta function.
double student_t_p_value(double t, double dof);

// Numerically stable regularized incomplete beta I_x(a, b) (continued
// fraction), exposed because screening tests pin it against quadrature.
double regularized_incomplete_beta(double a, double b, double x);

struct FeatureTestRow {
  std::size_t feature = 0;
  TTestResult paired;
  TTestResult independent;
};

struct FeatureSelection {
  std::vector<std::size_t> paired_set;       // "HF-voice A" under the figure labelling
  std::vector<std::size_t> independent_set;  // "HF-voice B"
  double alpha = 0.05;
  std::vector<FeatureTestRow> per_feature;
};

// Rows = patients (aligned across states), columns = global features.
// Selects features with p < alpha under each test.
FeatureSelection select_hf_voice_sets(const Matrix& pre_state, const Matrix& post_state,
                                      double alpha = 0.05);

struct GroupTally {
  std::string group;
  std::size_t total = 0;
  std::size_t paired_selected = 0;
  std::size_t independent_selected = 0;
  double paired_pct = 0.0;
  double independent_pct = 0.0;
};

// Per-group selection counts and percentages against a group label per
// feature column.
std::vector<GroupTally> tally_selection_by_group(const FeatureSelection& sel,
                                                 std::span<const std::string> feature_groups);

}  // namespace vbt

#endif  // VBT_SCREENING_HPP_
