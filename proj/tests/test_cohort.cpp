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
#include "vbt/cohort.hpp"
#include "vbt/error.hpp"

using namespace vbt;

namespace {

CohortConfig small_config() {
  CohortConfig cfg;
  cfg.n_patients = 4;
  cfg.visits_per_patient = 2;
  cfg.frames_per_visit = 12;
  cfg.sigma_between = 1.0;
  cfg.sigma_within = 0.3;
  cfg.delta = 1.0;
  cfg.affected_fraction = 0.1;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("generate: noise-free construction separates states by exactly delta*u") {
  CohortConfig cfg = small_config();
  cfg.sigma_between = 0.0;
  cfg.sigma_within = 0.0;
  cfg.delta = 1.0;
  const SyntheticCohort cohort = generate_cohort(cfg);
  const std::vector<double> u = effect_direction(cfg);

  // all patients identical; admission minus discharge equals delta * u
  for (const PatientTimeline& tl : cohort.timelines) {
    for (int c = 0; c < 72; ++c) {
      const double adm = tl.visits[0].frame_map.values.at(0, static_cast<std::size_t>(c));
      const double dis = tl.visits[1].frame_map.values.at(0, static_cast<std::size_t>(c));
      REQUIRE(adm - dis == doctest::Approx(u[static_cast<std::size_t>(c)]).epsilon(1e-12));
    }
  }
  for (std::size_t p = 1; p < cohort.timelines.size(); ++p) {
    REQUIRE(cohort.timelines[p].visits[0].frame_map.values.data() ==
            cohort.timelines[0].visits[0].frame_map.values.data());
  }
}

TEST_CASE("generate: same seed reproduces the cohort exactly") {
  const SyntheticCohort a = generate_cohort(small_config());
  const SyntheticCohort b = generate_cohort(small_config());
  REQUIRE(a.timelines.size() == b.timelines.size());
  for (std::size_t p = 0; p < a.timelines.size(); ++p) {
    for (std::size_t v = 0; v < a.timelines[p].visits.size(); ++v) {
      REQUIRE(a.timelines[p].visits[v].frame_map.values.data() ==
              b.timelines[p].visits[v].frame_map.values.data());
    }
  }
}

TEST_CASE("generate: direction labels are consistent with severity") {
  CohortConfig cfg = small_config();
  cfg.visits_per_patient = 4;
  cfg.rehosp_probability = 0.5;
  cfg.n_patients = 30;
  const SyntheticCohort cohort = generate_cohort(cfg);
  for (const PairDirection& pair : cohort.pair_labels) {
    const int si = cohort.severity[static_cast<std::size_t>(pair.patient_index)]
                                  [static_cast<std::size_t>(pair.i)];
    const int sj = cohort.severity[static_cast<std::size_t>(pair.patient_index)]
                                  [static_cast<std::size_t>(pair.j)];
    REQUIRE(si != sj);
    REQUIRE(pair.deterioration == (sj > si ? 1 : 0));
  }
  // visit 0 decompensated, visit 1 post-treatment: always a labeled pair
  CHECK(cohort.pair_labels.size() >= 30);
}

TEST_CASE("generate: empirical cross-patient variance matches the AR(1) formula") {
  CohortConfig cfg;
  cfg.n_patients = 200;
  cfg.visits_per_patient = 2;
  cfg.frames_per_visit = 30;
  cfg.sigma_between = 1.2;
  cfg.sigma_within = 0.5;
  cfg.delta = 0.0;  // no condition effect; pure noise check
  cfg.seed = 11;
  const SyntheticCohort cohort = generate_cohort(cfg);

  // variance across patients of a fixed (visit, frame, channel) cell
  // approaches sigma_b^2 + sigma_w^2 / (1 - 0.81)
  const double want = cfg.sigma_between * cfg.sigma_between +
                      cfg.sigma_within * cfg.sigma_within / (1.0 - 0.81);
  double acc = 0.0;
  int cells = 0;
  for (int c = 0; c < 72; c += 7) {
    for (int f = 0; f < 30; f += 5) {
      std::vector<double> xs;
      for (const PatientTimeline& tl : cohort.timelines) {
        xs.push_back(tl.visits[0].frame_map.values.at(static_cast<std::size_t>(f),
                                                      static_cast<std::size_t>(c)));
      }
      acc += oracle::central_moment(xs, 2);
      ++cells;
    }
  }
  const double got = acc / cells;
  CHECK(std::abs(got - want) / want < 0.10);
}

TEST_CASE("generate: invalid configs are rejected") {
  CohortConfig cfg = small_config();
  cfg.visits_per_patient = 1;
  CHECK_THROWS_AS(generate_cohort(cfg), ValidationError);
  cfg = small_config();
  cfg.affected_fraction = 0.0;
  CHECK_THROWS_AS(generate_cohort(cfg), ValidationError);
  cfg = small_config();
  cfg.global_feature_dim = 123;
  CHECK_THROWS_AS(generate_cohort(cfg), ValidationError);
}

TEST_CASE("bayes: worked example delta=1, sigma_v=0.5, sigma_b=2.5") {
  CohortConfig cfg;
  cfg.delta = 1.0;
  cfg.sigma_between = 2.5;
  cfg.frames_per_visit = 40;
  cfg.sigma_within = sigma_within_for_visit_noise(0.5, 40, 0.9);
  const BayesReference ref = bayes_reference_accuracies(cfg);
  CHECK(ref.sigma_v == doctest::Approx(0.5).epsilon(1e-9));
  // Gaussian CDF oracle values
  CHECK(ref.cross_sectional_accuracy ==
        doctest::Approx(standard_normal_cdf(1.0 / (2.0 * std::sqrt(6.25 + 0.25)))).epsilon(1e-12));
  CHECK(ref.cross_sectional_accuracy == doctest::Approx(0.578).epsilon(0.002));
  CHECK(ref.paired_accuracy ==
        doctest::Approx(standard_normal_cdf(1.0 / (std::sqrt(2.0) * 0.5))).epsilon(1e-12));
  CHECK(ref.paired_accuracy == doctest::Approx(0.921).epsilon(0.001));
}

TEST_CASE("bayes: no heterogeneity raises the cross-sectional ceiling") {
  CohortConfig cfg;
  cfg.delta = 1.0;
  cfg.frames_per_visit = 40;
  cfg.sigma_within = sigma_within_for_visit_noise(0.5, 40, 0.9);
  cfg.sigma_between = 0.0;
  const BayesReference zero_b = bayes_reference_accuracies(cfg);
  CHECK(zero_b.cross_sectional_accuracy ==
        doctest::Approx(standard_normal_cdf(1.0)).epsilon(1e-9));
  cfg.sigma_between = 2.5;
  CHECK(bayes_reference_accuracies(cfg).cross_sectional_accuracy <
        zero_b.cross_sectional_accuracy);
}

TEST_CASE("bayes: zero effect gives chance for both observers") {
  CohortConfig cfg;
  cfg.delta = 0.0;
  cfg.sigma_within = 0.4;
  const BayesReference ref = bayes_reference_accuracies(cfg);
  CHECK(ref.cross_sectional_accuracy == doctest::Approx(0.5));
  CHECK(ref.paired_accuracy == doctest::Approx(0.5));
}

TEST_CASE("bayes: zero visit noise flags degenerate with paired accuracy 1") {
  CohortConfig cfg;
  cfg.sigma_within = 0.0;
  const BayesReference ref = bayes_reference_accuracies(cfg);
  CHECK(ref.degenerate);
  CHECK(ref.paired_accuracy == 1.0);
}

TEST_CASE("split: subject-disjoint 80/20") {
  const SubjectSplit split = split_subjects(50, 0.8, 3);
  CHECK(split.train.size() == 40);
  CHECK(split.test.size() == 10);
  for (std::size_t t : split.test) {
    CHECK(std::find(split.train.begin(), split.train.end(), t) == split.train.end());
  }
}

TEST_CASE("fnn: learns a separable low-heterogeneity cohort and respects the null") {
  CohortConfig cfg;
  cfg.n_patients = 30;
  cfg.visits_per_patient = 2;
  cfg.frames_per_visit = 16;
  cfg.sigma_between = 0.0;
  cfg.sigma_within = 0.2;
  cfg.delta = 2.0;
  cfg.affected_fraction = 0.1;
  cfg.seed = 21;
  const SyntheticCohort cohort = generate_cohort(cfg);

  FnnConfig fnn;
  fnn.epochs = 60;
  fnn.seed = 1;
  const FnnResult res = cross_sectional_fnn(cohort, fnn);
  CHECK(res.test_accuracy > 0.9);

  FnnConfig null_cfg = fnn;
  null_cfg.shuffle_labels = true;
  null_cfg.epochs = 30;
  const FnnResult null_res = cross_sectional_fnn(cohort, null_cfg);
  CHECK(null_res.test_accuracy < 0.85);  // signal destroyed by the label shuffle
}
