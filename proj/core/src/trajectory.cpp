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

#include "vbt/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "vbt/error.hpp"

namespace vbt {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// normalized decay weights over predecessors i of target j
std::vector<double> decay_weights(std::span<const double> dt, double theta) {
  std::vector<double> w(dt.size());
  // subtract the max exponent for stability
  double max_e = -1e300;
  for (double d : dt) max_e = std::max(max_e, -theta * d);
  double total = 0.0;
  for (std::size_t i = 0; i < dt.size(); ++i) {
    w[i] = std::exp(-theta * dt[i] - max_e);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

struct TargetSample {
  std::vector<double> dt;  // t_j - t_i per predecessor outcome
  std::vector<double> f;   // outcome values
  double raw_sum(double theta) const {
    const std::vector<double> w = decay_weights(dt, theta);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f[i];
    return s;
  }
  double raw_sum_dtheta(double theta) const {
    const std::vector<double> w = decay_weights(dt, theta);
    double mean_dt = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) mean_dt += w[i] * dt[i];
    double ds = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) ds += w[i] * (mean_dt - dt[i]) * f[i];
    return ds;
  }
};

}  // namespace

TrajectoryEstimate aggregate_scores(std::span<const PairwiseOutcome> outcomes,
                                    std::span<const double> timestamps,
                                    const AggregationParams& params) {
  if (timestamps.size() < 2) throw ValidationError("aggregate_scores: need >= 2 visits");
  const int t_count = static_cast<int>(timestamps.size());

  std::map<int, TargetSample> per_target;
  std::string patient_id;
  for (const PairwiseOutcome& o : outcomes) {
    if (o.i >= o.j || o.j >= t_count || o.i < 0) {
      throw ValidationError("aggregate_scores: outcome indices out of range");
    }
    patient_id = o.patient_id;
    TargetSample& s = per_target[o.j];
    s.dt.push_back(timestamps[static_cast<std::size_t>(o.j)] -
                   timestamps[static_cast<std::size_t>(o.i)]);
    s.f.push_back(o.y_hat);
  }
  for (int j = 1; j < t_count; ++j) {
    if (!per_target.count(j)) {
      throw ValidationError("aggregate_scores: target visit " + std::to_string(j) +
                            " has no predecessor outcome");
    }
  }

  TrajectoryEstimate est;
  est.patient_id = patient_id;
  est.params = params;
  for (const auto& [j, sample] : per_target) {
    est.visit_index.push_back(j);
    est.scores.push_back(sigmoid(params.phi1 * sample.raw_sum(params.theta) + params.phi0));
  }
  return est;
}

CalibrationResult fit_calibration(
    std::span<const PairwiseOutcome> outcomes,
    const std::vector<std::pair<std::string, std::vector<double>>>& patient_timestamps,
    std::span<const GoldLabel> gold, CalibrationLoss loss_kind, int max_iterations,
    AggregationParams init) {
  // collect per (patient, target) samples that carry a gold label
  std::map<std::string, std::map<int, TargetSample>> per_patient;
  std::map<std::string, const std::vector<double>*> stamps;
  for (const auto& [pid, ts] : patient_timestamps) stamps[pid] = &ts;
  for (const PairwiseOutcome& o : outcomes) {
    auto it = stamps.find(o.patient_id);
    if (it == stamps.end()) throw ValidationError("fit_calibration: unknown patient " + o.patient_id);
    const std::vector<double>& ts = *it->second;
    if (o.i >= o.j || o.j >= static_cast<int>(ts.size())) {
      throw ValidationError("fit_calibration: outcome indices out of range");
    }
    TargetSample& s = per_patient[o.patient_id][o.j];
    s.dt.push_back(ts[static_cast<std::size_t>(o.j)] - ts[static_cast<std::size_t>(o.i)]);
    s.f.push_back(o.y_hat);
  }

  struct Labeled {
    const TargetSample* sample;
    double y;
  };
  std::vector<Labeled> data;
  for (const GoldLabel& g : gold) {
    auto pit = per_patient.find(g.patient_id);
    if (pit == per_patient.end()) continue;
    auto tit = pit->second.find(g.visit_index);
    if (tit == pit->second.end()) continue;
    data.push_back({&tit->second, g.value});
  }
  if (data.size() < 2) throw ValidationError("fit_calibration: need >= 2 labeled visits");

  const bool all_equal = std::all_of(data.begin(), data.end(),
                                     [&](const Labeled& d) { return d.y == data[0].y; });

  auto eval = [&](const AggregationParams& p, double* g_theta, double* g_phi0, double* g_phi1) {
    double total = 0.0, gt = 0.0, g0 = 0.0, g1 = 0.0;
    for (const Labeled& d : data) {
      const double s = d.sample->raw_sum(p.theta);
      const double logit = p.phi1 * s + p.phi0;
      const double yh = sigmoid(logit);
      double dlogit;
      if (loss_kind == CalibrationLoss::kBce) {
        const double c = std::clamp(yh, 1e-12, 1.0 - 1e-12);
        total += -(d.y * std::log(c) + (1.0 - d.y) * std::log(1.0 - c));
        dlogit = yh - d.y;
      } else {
        total += (yh - d.y) * (yh - d.y);
        dlogit = 2.0 * (yh - d.y) * yh * (1.0 - yh);
      }
      g0 += dlogit;
      g1 += dlogit * s;
      gt += dlogit * p.phi1 * d.sample->raw_sum_dtheta(p.theta);
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    if (g_theta) *g_theta = gt * inv;
    if (g_phi0) *g_phi0 = g0 * inv;
    if (g_phi1) *g_phi1 = g1 * inv;
    return total * inv;
  };

  CalibrationResult res;
  res.params = init;
  res.saturated = all_equal;
  double loss = eval(res.params, nullptr, nullptr, nullptr);
  res.loss_curve.push_back(loss);

  for (int it = 0; it < max_iterations; ++it) {
    double gt, g0, g1;
    eval(res.params, &gt, &g0, &g1);
    const double gnorm = std::sqrt(gt * gt + g0 * g0 + g1 * g1);
    if (gnorm < 1e-10) break;

    // halving line search keeps the loss non-increasing
    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      AggregationParams trial = res.params;
      trial.theta -= step * gt;
      trial.phi0 -= step * g0;
      trial.phi1 -= step * g1;
      const double trial_loss = eval(trial, nullptr, nullptr, nullptr);
      if (trial_loss <= loss) {
        res.params = trial;
        loss = trial_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = it + 1;
    res.loss_curve.push_back(loss);
    if (!accepted) break;
  }
  res.final_loss = loss;
  return res;
}

RankResult bradley_terry_strengths(const Matrix& win_counts, double tol, int max_iterations) {
  const std::size_t k = win_counts.rows();
  if (k < 2 || win_counts.cols() != k) {
    throw ValidationError("bradley_terry: need a KxK matrix with K >= 2");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (win_counts.at(i, i) != 0.0) throw ValidationError("bradley_terry: diagonal must be 0");
    for (std::size_t j = 0; j < k; ++j) {
      if (win_counts.at(i, j) < 0.0) throw ValidationError("bradley_terry: negative count");
    }
  }

  // connectivity of the comparison graph (union-find)
  std::vector<std::size_t> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (win_counts.at(i, j) + win_counts.at(j, i) > 0.0) parent[find(i)] = find(j);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < k; ++i) components[find(i)].push_back(i);
  if (components.size() > 1) {
    std::string msg = "bradley_terry: comparison graph is disconnected; components:";
    for (const auto& [root, members] : components) {
      msg += " {";
      for (std::size_t i = 0; i < members.size(); ++i) {
        msg += (i ? "," : "") + std::to_string(members[i]);
      }
      msg += "}";
    }
    throw ValidationError(msg);
  }

  RankResult res;
  res.strengths.assign(k, 1.0);
  std::vector<double> next(k);
  for (int it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < k; ++i) {
      double wins = 0.0, denom = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == i) continue;
        wins += win_counts.at(i, j);
        const double n_ij = win_counts.at(i, j) + win_counts.at(j, i);
        if (n_ij > 0.0) denom += n_ij / (res.strengths[i] + res.strengths[j]);
      }
      next[i] = denom > 0.0 ? std::max(wins / denom, 1e-300) : res.strengths[i];
    }
    // normalize so sum(log pi) = 0
    double log_sum = 0.0;
    for (double v : next) log_sum += std::log(v);
    const double geo = std::exp(log_sum / static_cast<double>(k));
    for (double& v : next) v /= geo;

    double max_rel = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      max_rel = std::max(max_rel, std::abs(next[i] - res.strengths[i]) /
                                      std::max(res.strengths[i], 1e-300));
    }
    res.strengths = next;
    res.iterations = it + 1;
    if (max_rel < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace vbt
