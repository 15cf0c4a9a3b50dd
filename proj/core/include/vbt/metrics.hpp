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

#ifndef VBT_METRICS_HPP_
#define VBT_METRICS_HPP_

#include <span>
#include <vector>

namespace vbt {

struct ConfusionCounts {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long total() const { return tp + fp + tn + fn; }
};

ConfusionCounts confusion_counts(std::span<const int> preds, std::span<const int> labels);

struct MetricReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double macro_f1 = 0.0;
  bool degenerate_precision = false;    // no predicted positives
  bool degenerate_sensitivity = false;  // no actual positives
  bool degenerate_specificity = false;  // no actual negatives
};

// Accuracy / precision / sensitivity / specificity from counts; degenerate
// denominators yield 0 plus a flag (macro_f1 is left 0 here).
MetricReport classification_metrics(const ConfusionCounts& c);

// Mean over both classes of 2PR/(P+R), each class treated as positive in
// turn; a class with P+R = 0 contributes 0.
double macro_f1(std::span<const int> preds, std::span<const int> labels);

// Convenience: counts -> full report including macro_f1.
MetricReport evaluate_binary(std::span<const int> preds, std::span<const int> labels);

struct RocCurve {
  std::vector<double> fpr;  // starts at 0, ends at 1
  std::vector<double> tpr;
  std::vector<double> thresholds;  // +inf sentinel first
  double auroc = 0.5;
};

// Threshold sweep over unique scores (predict positive when score >=
// threshold); AUROC by trapezoid, which equals the Mann-Whitney pair
// statistic with ties counted 1/2.
RocCurve roc_auroc(std::span<const double> scores, std::span<const int> labels);

}  // namespace vbt

#endif  // VBT_METRICS_HPP_
