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

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vbt/error.hpp"
#include "vbt/metrics.hpp"

using namespace vbt;

TEST_CASE("confusion: exact counts and inversion symmetry") {
  const std::vector<int> preds = {1, 1, 0, 0};
  const std::vector<int> labels = {1, 1, 0, 0};
  const ConfusionCounts c = confusion_counts(preds, labels);
  CHECK(c.tp == 2);
  CHECK(c.tn == 2);
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);

  std::vector<int> inverted = preds;
  for (int& p : inverted) p = 1 - p;
  const ConfusionCounts inv = confusion_counts(inverted, labels);
  CHECK(inv.tp == c.fn + 0);
  CHECK(inv.fp == c.tn);
  CHECK(inv.fn == c.tp);
  CHECK(inv.tn == c.fp);
}

TEST_CASE("confusion: random case equals the loop-count oracle") {
  vbt::Rng rng(8);
  std::vector<int> preds(100), labels(100);
  for (int i = 0; i < 100; ++i) {
    preds[static_cast<std::size_t>(i)] = rng.bernoulli(0.4) ? 1 : 0;
    labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
  }
  const ConfusionCounts c = confusion_counts(preds, labels);
  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (int i = 0; i < 100; ++i) {
    const bool p = preds[static_cast<std::size_t>(i)] != 0;
    const bool y = labels[static_cast<std::size_t>(i)] != 0;
    tp += p && y;
    fp += p && !y;
    tn += !p && !y;
    fn += !p && y;
  }
  CHECK(c.tp == tp);
  CHECK(c.fp == fp);
  CHECK(c.tn == tn);
  CHECK(c.fn == fn);
  CHECK(c.total() == 100);
  CHECK_THROWS_AS(confusion_counts(std::vector<int>{1}, std::vector<int>{1, 0}),
                  ValidationError);
}

TEST_CASE("metrics: tp=3 fp=1 tn=4 fn=2 substitution") {
  const MetricReport r = classification_metrics({3, 1, 4, 2});
  CHECK(r.accuracy == doctest::Approx(0.7));
  CHECK(r.precision == doctest::Approx(0.75));
  CHECK(r.sensitivity == doctest::Approx(0.6));
  CHECK(r.specificity == doctest::Approx(0.8));
}

TEST_CASE("metrics: all correct gives ones; degenerate denominators flag") {
  const MetricReport perfect = classification_metrics({5, 0, 5, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.sensitivity == 1.0);
  CHECK(perfect.specificity == 1.0);

  const MetricReport no_pos = classification_metrics({0, 0, 4, 0});
  CHECK(no_pos.degenerate_precision);
  CHECK(no_pos.degenerate_sensitivity);
  CHECK(no_pos.precision == 0.0);
}

TEST_CASE("metrics: random counts match the formula oracle") {
  vbt::Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    ConfusionCounts c;
    c.tp = static_cast<long>(rng.uniform_index(20)) + 1;
    c.fp = static_cast<long>(rng.uniform_index(20)) + 1;
    c.tn = static_cast<long>(rng.uniform_index(20)) + 1;
    c.fn = static_cast<long>(rng.uniform_index(20)) + 1;
    const MetricReport r = classification_metrics(c);
    REQUIRE(r.accuracy == doctest::Approx(static_cast<double>(c.tp + c.tn) /
                                          static_cast<double>(c.total())));
    REQUIRE(r.precision ==
            doctest::Approx(static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp)));
    REQUIRE(r.sensitivity ==
            doctest::Approx(static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn)));
    REQUIRE(r.specificity ==
            doctest::Approx(static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp)));
  }
}

TEST_CASE("macro-f1: perfect is 1; all-positive on balanced labels is 1/3") {
  const std::vector<int> labels = {1, 1, 0, 0};
  CHECK(macro_f1(labels, labels) == doctest::Approx(1.0));
  const std::vector<int> all_pos = {1, 1, 1, 1};
  CHECK(macro_f1(all_pos, labels) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("macro-f1: random case matches per-class recomputation") {
  vbt::Rng rng(5);
  std::vector<int> preds(60), labels(60);
  for (int i = 0; i < 60; ++i) {
    preds[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
    labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.4) ? 1 : 0;
  }
  const ConfusionCounts c = confusion_counts(preds, labels);
  auto class_f1 = [](double tp, double fp, double fn) {
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  };
  const double want =
      0.5 * (class_f1(static_cast<double>(c.tp), static_cast<double>(c.fp),
                      static_cast<double>(c.fn)) +
             class_f1(static_cast<double>(c.tn), static_cast<double>(c.fn),
                      static_cast<double>(c.fp)));
  CHECK(macro_f1(preds, labels) == doctest::Approx(want).epsilon(1e-12));
  CHECK(macro_f1(preds, labels) <= 1.0);
}

TEST_CASE("roc: perfectly separating scores give auroc 1") {
  const std::vector<double> scores = {0.9, 0.8, 0.2, 0.1};
  const std::vector<int> labels = {1, 1, 0, 0};
  const RocCurve c = roc_auroc(scores, labels);
  CHECK(c.auroc == doctest::Approx(1.0));
  CHECK(c.fpr.front() == 0.0);
  CHECK(c.tpr.front() == 0.0);
  CHECK(c.fpr.back() == 1.0);
  CHECK(c.tpr.back() == 1.0);
}

TEST_CASE("roc: identical scores for all give auroc 0.5") {
  const std::vector<double> scores = {0.5, 0.5, 0.5, 0.5};
  const std::vector<int> labels = {1, 0, 1, 0};
  CHECK(roc_auroc(scores, labels).auroc == doctest::Approx(0.5));
}

TEST_CASE("roc: trapezoid auroc equals brute-force pair counting to 1e-12") {
  vbt::Rng rng(7);
  std::vector<double> scores(50);
  std::vector<int> labels(50);
  for (int i = 0; i < 50; ++i) {
    // quantized scores force ties across the set
    scores[static_cast<std::size_t>(i)] = std::floor(rng.uniform() * 10.0) / 10.0;
    labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.45) ? 1 : 0;
  }
  const RocCurve c = roc_auroc(scores, labels);

  // Mann-Whitney pair statistic with ties counted one half
  double wins = 0.0;
  long pairs = 0;
  for (int i = 0; i < 50; ++i) {
    if (labels[static_cast<std::size_t>(i)] != 1) continue;
    for (int j = 0; j < 50; ++j) {
      if (labels[static_cast<std::size_t>(j)] != 0) continue;
      ++pairs;
      if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(j)]) {
        wins += 1.0;
      } else if (scores[static_cast<std::size_t>(i)] == scores[static_cast<std::size_t>(j)]) {
        wins += 0.5;
      }
    }
  }
  REQUIRE(pairs > 0);
  CHECK(std::abs(c.auroc - wins / static_cast<double>(pairs)) <= 1e-12);
}

TEST_CASE("roc: auroc invariant under strictly increasing transforms") {
  vbt::Rng rng(9);
  std::vector<double> scores(40);
  std::vector<int> labels(40);
  for (int i = 0; i < 40; ++i) {
    scores[static_cast<std::size_t>(i)] = rng.normal();
    labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
  }
  const double base = roc_auroc(scores, labels).auroc;
  std::vector<double> warped = scores;
  for (double& s : warped) s = std::exp(2.0 * s) + 5.0;
  CHECK(roc_auroc(warped, labels).auroc == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("roc: curve is monotone pointwise; single-class input rejected") {
  vbt::Rng rng(10);
  std::vector<double> scores(30);
  std::vector<int> labels(30);
  for (int i = 0; i < 30; ++i) {
    scores[static_cast<std::size_t>(i)] = rng.uniform();
    labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
  }
  const RocCurve c = roc_auroc(scores, labels);
  for (std::size_t i = 1; i < c.fpr.size(); ++i) {
    CHECK(c.fpr[i] >= c.fpr[i - 1]);
    CHECK(c.tpr[i] >= c.tpr[i - 1]);
  }
  const std::vector<int> ones(30, 1);
  CHECK_THROWS_AS(roc_auroc(scores, ones), ValidationError);
}
