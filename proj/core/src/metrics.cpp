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

#include "vbt/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "vbt/error.hpp"

namespace vbt {

ConfusionCounts confusion_counts(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size() || preds.empty()) {
    throw ValidationError("confusion_counts: sequences must be non-empty and equal length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] != 0;
    const bool y = labels[i] != 0;
    if (p && y) ++c.tp;
    else if (p && !y) ++c.fp;
    else if (!p && !y) ++c.tn;
    else ++c.fn;
  }
  return c;
}

MetricReport classification_metrics(const ConfusionCounts& c) {
  MetricReport r;
  const long total = c.total();
  r.accuracy = total > 0 ? static_cast<double>(c.tp + c.tn) / static_cast<double>(total) : 0.0;
  if (c.tp + c.fp > 0) {
    r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  } else {
    r.degenerate_precision = true;
  }
  if (c.tp + c.fn > 0) {
    r.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  } else {
    r.degenerate_sensitivity = true;
  }
  if (c.tn + c.fp > 0) {
    r.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  } else {
    r.degenerate_specificity = true;
  }
  return r;
}

double macro_f1(std::span<const int> preds, std::span<const int> labels) {
  const ConfusionCounts c = confusion_counts(preds, labels);
  auto f1 = [](long tp, long fp, long fn) {
    const double p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  };
  // class 1 as positive, then class 0 as positive
  return 0.5 * (f1(c.tp, c.fp, c.fn) + f1(c.tn, c.fn, c.fp));
}

MetricReport evaluate_binary(std::span<const int> preds, std::span<const int> labels) {
  MetricReport r = classification_metrics(confusion_counts(preds, labels));
  r.macro_f1 = macro_f1(preds, labels);
  return r;
}

RocCurve roc_auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw ValidationError("roc_auroc: sequences must be non-empty and equal length");
  }
  long n_pos = 0, n_neg = 0;
  for (int y : labels) (y != 0 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) {
    throw ValidationError("roc_auroc: both classes must be present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());

  double auc = 0.0;
  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    long d_tp = 0, d_fp = 0;
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] != 0 ? d_tp : d_fp)++;
      ++i;
    }
    const double tpr0 = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double fpr0 = static_cast<double>(fp) / static_cast<double>(n_neg);
    tp += d_tp;
    fp += d_fp;
    const double tpr1 = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double fpr1 = static_cast<double>(fp) / static_cast<double>(n_neg);
    auc += (fpr1 - fpr0) * 0.5 * (tpr0 + tpr1);  // trapezoid; ties counted 1/2
    curve.fpr.push_back(fpr1);
    curve.tpr.push_back(tpr1);
    curve.thresholds.push_back(threshold);
  }
  curve.auroc = auc;
  return curve;
}

}  // namespace vbt
