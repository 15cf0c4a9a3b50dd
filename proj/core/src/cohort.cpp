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

#include "vbt/cohort.hpp"

#include <algorithm>
#include <cmath>

#include "vbt/error.hpp"
#include "vbt/global_features.hpp"
#include "vbt/screening.hpp"
#include "vbt/rng.hpp"

namespace vbt {
namespace {

void validate(const CohortConfig& cfg) {
  if (cfg.n_patients < 1) throw ValidationError("cohort needs >= 1 patient");
  if (cfg.visits_per_patient < 2) throw ValidationError("cohort needs >= 2 visits per patient");
  if (cfg.frame_channels != kNumFrameFeatures) {
    throw ValidationError("frame maps are fixed at 72 channels");
  }
  if (cfg.frames_per_visit < 2) throw ValidationError("need >= 2 frames per visit");
  if (cfg.sigma_between < 0.0 || cfg.sigma_within < 0.0) {
    throw ValidationError("noise stddevs must be >= 0");
  }
  if (cfg.affected_fraction <= 0.0 || cfg.affected_fraction > 1.0) {
    throw ValidationError("affected fraction must be in (0, 1]");
  }
  if (std::abs(cfg.ar_coefficient) >= 1.0) throw ValidationError("AR coefficient must be in (-1, 1)");
  const int derived = static_cast<int>(GlobalFeatureSchema::standard().size());
  if (cfg.global_feature_dim != 0 && cfg.global_feature_dim != derived) {
    throw ValidationError("global_feature_dim must be 0 (derived) or " + std::to_string(derived));
  }
}

std::string patient_name(int n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "sim%04d", n);
  return buf;
}

}  // namespace

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::vector<double> effect_direction(const CohortConfig& cfg) {
  const int m = std::max(1, static_cast<int>(std::ceil(cfg.affected_fraction * cfg.frame_channels)));
  std::vector<double> u(static_cast<std::size_t>(cfg.frame_channels), 0.0);
  const double w = 1.0 / std::sqrt(static_cast<double>(m));
  for (int c = 0; c < m; ++c) u[static_cast<std::size_t>(c)] = w;
  return u;
}

SyntheticCohort generate_cohort(const CohortConfig& cfg) {
  validate(cfg);
  const std::vector<double> u = effect_direction(cfg);
  const double ar = cfg.ar_coefficient;
  const double stationary_sd =
      cfg.sigma_within / std::sqrt(std::max(1e-12, 1.0 - ar * ar));

  SyntheticCohort cohort;
  cohort.config = cfg;
  for (int n = 0; n < cfg.n_patients; ++n) {
    Rng rng(mix_seed(cfg.seed, 0x5E00 + static_cast<std::uint64_t>(n)));
    const std::string pid = patient_name(n);

    std::vector<double> baseline(static_cast<std::size_t>(cfg.frame_channels));
    for (double& b : baseline) b = rng.normal(0.0, cfg.sigma_between);

    std::vector<int> severity(static_cast<std::size_t>(cfg.visits_per_patient), 0);
    severity[0] = 1;  // admission: decompensated
    for (int t = 2; t < cfg.visits_per_patient; ++t) {
      severity[static_cast<std::size_t>(t)] = rng.bernoulli(cfg.rehosp_probability) ? 1 : 0;
    }

    PatientTimeline tl;
    tl.patient_id = pid;
    for (int t = 0; t < cfg.visits_per_patient; ++t) {
      const int s = severity[static_cast<std::size_t>(t)];
      VisitRecord visit;
      visit.patient_id = pid;
      visit.timestamp_days = t == 0 ? 0.0 : (t == 1 ? 10.0 : 10.0 + 90.0 * (t - 1));
      visit.state_label = t == 0 ? "decompensated"
                                 : (t == 1 ? "post_treatment" : (s ? "readmitted" : "stable"));
      visit.frame_map.catalog_hash = FeatureCatalog::standard().hash();
      visit.frame_map.source_id = pid + "_v" + std::to_string(t);
      visit.frame_map.values =
          Matrix(static_cast<std::size_t>(cfg.frames_per_visit),
                 static_cast<std::size_t>(cfg.frame_channels));
      for (int c = 0; c < cfg.frame_channels; ++c) {
        const double mean_c =
            baseline[static_cast<std::size_t>(c)] + cfg.delta * s * u[static_cast<std::size_t>(c)];
        double e = rng.normal(0.0, stationary_sd);  // stationary start
        for (int f = 0; f < cfg.frames_per_visit; ++f) {
          visit.frame_map.values.at(static_cast<std::size_t>(f), static_cast<std::size_t>(c)) =
              mean_c + e;
          e = ar * e + rng.normal(0.0, cfg.sigma_within);
        }
      }
      visit.global_vec = build_global_vector(visit.frame_map);
      tl.visits.push_back(std::move(visit));
    }
    cohort.timelines.push_back(std::move(tl));
    cohort.severity.push_back(severity);

    for (int i = 0; i < cfg.visits_per_patient; ++i) {
      for (int j = i + 1; j < cfg.visits_per_patient; ++j) {
        const int si = severity[static_cast<std::size_t>(i)];
        const int sj = severity[static_cast<std::size_t>(j)];
        if (si != sj) {
          cohort.pair_labels.push_back({pid, n, i, j, sj > si ? 1 : 0});
        }
      }
    }
  }
  return cohort;
}

namespace {

// variance of the mean of `frames` consecutive samples of a stationary AR(1)
double ar_mean_variance(double innovation_sd, int frames, double ar) {
  const double var_e = innovation_sd * innovation_sd / (1.0 - ar * ar);
  double acc = static_cast<double>(frames);
  for (int k = 1; k < frames; ++k) {
    acc += 2.0 * static_cast<double>(frames - k) * std::pow(ar, k);
  }
  return var_e * acc / (static_cast<double>(frames) * static_cast<double>(frames));
}

}  // namespace

BayesReference bayes_reference_accuracies(const CohortConfig& cfg) {
  validate(cfg);
  BayesReference ref;
  ref.sigma_v = std::sqrt(ar_mean_variance(cfg.sigma_within, cfg.frames_per_visit,
                                           cfg.ar_coefficient));
  const double sb2 = cfg.sigma_between * cfg.sigma_between;
  const double sv2 = ref.sigma_v * ref.sigma_v;
  ref.cross_sectional_accuracy = standard_normal_cdf(cfg.delta / (2.0 * std::sqrt(sb2 + sv2)));
  if (ref.sigma_v > 0.0) {
    ref.paired_accuracy = standard_normal_cdf(cfg.delta / (std::sqrt(2.0) * ref.sigma_v));
  } else {
    ref.paired_accuracy = 1.0;
    ref.degenerate = true;
  }
  return ref;
}

double sigma_within_for_visit_noise(double sigma_v, int frames, double ar) {
  if (sigma_v <= 0.0) throw ValidationError("sigma_v must be positive");
  // ar_mean_variance is linear in the innovation variance
  const double unit = ar_mean_variance(1.0, frames, ar);
  return std::sqrt(sigma_v * sigma_v / unit);
}

SubjectSplit split_subjects(std::size_t n_patients, double train_fraction, std::uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw ValidationError("train fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(n_patients);
  for (std::size_t i = 0; i < n_patients; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x517));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  const std::size_t n_train = static_cast<std::size_t>(
      std::lround(train_fraction * static_cast<double>(n_patients)));
  SubjectSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  split.test.assign(order.begin() + static_cast<long>(n_train), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  if (split.train.empty() || split.test.empty()) {
    throw ValidationError("subject split left one side empty");
  }
  return split;
}

FnnResult cross_sectional_fnn(const SyntheticCohort& cohort, const FnnConfig& cfg) {
  const SubjectSplit split = split_subjects(cohort.timelines.size(), cfg.train_fraction, cfg.seed);

  struct Sample {
    const std::vector<double>* features;
    int label;
  };
  auto collect = [&](const std::vector<std::size_t>& idx) {
    std::vector<Sample> out;
    for (std::size_t p : idx) {
      const PatientTimeline& tl = cohort.timelines[p];
      for (std::size_t v = 0; v < tl.visits.size(); ++v) {
        out.push_back({&tl.visits[v].global_vec.values, cohort.severity[p][v]});
      }
    }
    return out;
  };
  std::vector<Sample> train = collect(split.train);
  std::vector<Sample> test = collect(split.test);
  if (train.size() < 2 || test.empty()) throw ValidationError("degenerate FNN split");
  {
    bool has0 = false, has1 = false;
    for (const Sample& s : train) (s.label ? has1 : has0) = true;
    if (!has0 || !has1) throw ValidationError("single-class training split");
  }

  Rng rng(mix_seed(cfg.seed, 0xF33D));
  if (cfg.shuffle_labels) {
    for (std::size_t i = train.size(); i > 1; --i) {
      std::swap(train[i - 1].label, train[rng.uniform_index(i)].label);
    }
  }

  // baseline feature selection: paired t-test over the training patients'
  // admission/discharge rows
  const std::size_t full_dim = train[0].features->size();
  std::vector<std::size_t> kept(full_dim);
  for (std::size_t j = 0; j < full_dim; ++j) kept[j] = j;
  if (cfg.screen_alpha > 0.0 && split.train.size() >= 2) {
    Matrix pre(split.train.size(), full_dim);
    Matrix post(split.train.size(), full_dim);
    for (std::size_t r = 0; r < split.train.size(); ++r) {
      const PatientTimeline& tl = cohort.timelines[split.train[r]];
      for (std::size_t j = 0; j < full_dim; ++j) {
        pre.at(r, j) = tl.visits[0].global_vec.values[j];   // decompensated
        post.at(r, j) = tl.visits[1].global_vec.values[j];  // post-treatment
      }
    }
    const FeatureSelection sel = select_hf_voice_sets(pre, post, cfg.screen_alpha);
    if (!sel.paired_set.empty()) kept = sel.paired_set;
  }
  const std::size_t dim = kept.size();
  // per-dimension standardization fitted on the training visits
  std::vector<float> mean(dim, 0.0f), sd(dim, 0.0f);
  {
    std::vector<double> sum(dim, 0.0), sum_sq(dim, 0.0);
    for (const Sample& s : train) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double v = (*s.features)[kept[j]];
        sum[j] += v;
        sum_sq[j] += v * v;
      }
    }
    const double n = static_cast<double>(train.size());
    for (std::size_t j = 0; j < dim; ++j) {
      const double m = sum[j] / n;
      mean[j] = static_cast<float>(m);
      sd[j] = static_cast<float>(std::sqrt(std::max(0.0, sum_sq[j] / n - m * m)));
    }
  }
  auto standardized = [&](const Sample& s) {
    std::vector<float> x(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      x[j] = (static_cast<float>((*s.features)[kept[j]]) - mean[j]) / std::max(sd[j], 1e-6f);
    }
    return x;
  };

  const int d = static_cast<int>(dim);
  Rng init_rng(mix_seed(cfg.seed, 0xF00));
  auto xavier = [&init_rng](std::vector<int> shape, int fan_in, int fan_out) {
    Tensor t(std::move(shape));
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (float& v : t.data) v = static_cast<float>(init_rng.uniform(-limit, limit));
    return t;
  };
  std::vector<Tensor> params;
  params.push_back(xavier({d, cfg.hidden}, d, cfg.hidden));      // w1
  params.push_back(Tensor({1, cfg.hidden}));                     // b1
  params.push_back(xavier({cfg.hidden, 1}, cfg.hidden, 1));      // w2
  params.push_back(Tensor({1, 1}));                              // b2

  AdamState adam;
  adam.config.lr = cfg.lr;
  adam.config.weight_decay = cfg.weight_decay;
  adam.init(params);

  auto forward = [&](Tape& tape, const std::vector<int>& refs, int x_ref) {
    const int h = tape.tanh_(tape.add_rowvec(tape.matmul(x_ref, refs[0]), refs[1]));
    return tape.sigmoid(tape.add_rowvec(tape.matmul(h, refs[2]), refs[3]));
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng erng(mix_seed(cfg.seed, 0xE000 + static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[erng.uniform_index(i)]);
    }
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const int rows = static_cast<int>(end - start);
      Tensor x({rows, d}), y({rows, 1});
      for (int r = 0; r < rows; ++r) {
        const Sample& s = train[order[start + static_cast<std::size_t>(r)]];
        const std::vector<float> xs = standardized(s);
        for (int j = 0; j < d; ++j) x.at(r, j) = xs[static_cast<std::size_t>(j)];
        y.at(r, 0) = static_cast<float>(s.label);
      }
      Tape tape;
      std::vector<int> refs;
      for (Tensor& p : params) refs.push_back(tape.leaf(p, true));
      const int yh = forward(tape, refs, tape.leaf(std::move(x), false));
      const int loss = tape.bce_loss(yh, tape.leaf(std::move(y), false));
      tape.backward(loss);
      std::vector<Tensor> grads;
      for (int ref : refs) grads.push_back(tape.has_grad(ref) ? tape.grad(ref) : Tensor());
      adam_step(params, grads, adam);
    }
  }

  auto evaluate = [&](const std::vector<Sample>& samples, MetricReport* report) {
    std::vector<int> preds, labels;
    for (const Sample& s : samples) {
      const std::vector<float> xs = standardized(s);
      Tape tape;
      std::vector<int> refs;
      for (Tensor& p : params) refs.push_back(tape.leaf(p, false));
      Tensor x({1, d});
      for (int j = 0; j < d; ++j) x.at(0, j) = xs[static_cast<std::size_t>(j)];
      const int yh = forward(tape, refs, tape.leaf(std::move(x), false));
      preds.push_back(tape.value(yh).data[0] >= 0.5f ? 1 : 0);
      labels.push_back(s.label);
    }
    const MetricReport r = evaluate_binary(preds, labels);
    if (report) *report = r;
    return r.accuracy;
  };

  FnnResult result;
  result.n_train = train.size();
  result.n_test = test.size();
  result.train_accuracy = evaluate(train, nullptr);
  result.test_accuracy = evaluate(test, &result.report);
  return result;
}

PairwiseEvalResult evaluate_pse_pairwise(const SyntheticCohort& cohort,
                                         const std::vector<std::size_t>& patient_indices,
                                         const PseModel& model) {
  std::vector<int> preds, labels;
  std::vector<double> scores;
  for (const PairDirection& pair : cohort.pair_labels) {
    const std::size_t p = static_cast<std::size_t>(pair.patient_index);
    if (std::find(patient_indices.begin(), patient_indices.end(), p) == patient_indices.end()) {
      continue;
    }
    const PatientTimeline& tl = cohort.timelines[p];
    const double forward = compare_visits(tl, pair.i, pair.j, model);
    scores.push_back(forward);
    preds.push_back(forward >= 0.5 ? 1 : 0);
    labels.push_back(pair.deterioration);
    const double backward = compare_visits(tl, pair.j, pair.i, model);
    scores.push_back(backward);
    preds.push_back(backward >= 0.5 ? 1 : 0);
    labels.push_back(1 - pair.deterioration);
  }
  PairwiseEvalResult result;
  result.n_samples = preds.size();
  if (preds.empty()) throw ValidationError("no labeled pairs among the selected patients");
  result.report = evaluate_binary(preds, labels);
  result.accuracy = result.report.accuracy;
  bool has0 = false, has1 = false;
  for (int y : labels) (y ? has1 : has0) = true;
  if (has0 && has1) result.auroc = roc_auroc(scores, labels).auroc;
  return result;
}

}  // namespace vbt
