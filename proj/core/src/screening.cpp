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

#include "vbt/screening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vbt/error.hpp"

namespace vbt {
namespace {

double mean_of(std::span<const double> xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

// unbiased sample variance
double sample_var(std::span<const double> xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(xs.size() - 1);
}

double log_gamma(double x) { return std::lgamma(x); }

// Lentz continued fraction for the incomplete beta function.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_p_value(double t, double dof) {
  if (!std::isfinite(t)) throw ValidationError("non-finite t statistic");
  if (dof < 1.0) throw ValidationError("t-test needs dof >= 1");
  if (t == 0.0) return 1.0;
  const double x = dof / (dof + t * t);
  return regularized_incomplete_beta(dof / 2.0, 0.5, x);
}

CorrelationMatrix mean_abs_correlation(std::span<const Matrix> samples) {
  if (samples.empty()) throw ValidationError("no sample matrices");
  const std::size_t f = samples[0].cols();
  for (const Matrix& s : samples) {
    if (s.cols() != f) throw ValidationError("sample matrices disagree on feature count");
    if (s.rows() < 2) throw ValidationError("each sample needs at least 2 time points");
  }

  CorrelationMatrix out;
  out.values = Matrix(f, f, 0.0);
  out.n_samples_averaged = samples.size();

  for (std::size_t si = 0; si < samples.size(); ++si) {
    const Matrix& s = samples[si];
    const std::size_t t = s.rows();
    std::vector<double> means(f, 0.0), sds(f, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < t; ++r) acc += s.at(r, j);
      means[j] = acc / static_cast<double>(t);
      double var = 0.0;
      for (std::size_t r = 0; r < t; ++r) {
        const double d = s.at(r, j) - means[j];
        var += d * d;
      }
      sds[j] = std::sqrt(var);
      if (sds[j] == 0.0) {
        out.notes.push_back("sample " + std::to_string(si) + ": column " +
                            std::to_string(j) + " has zero variance");
      }
    }
    for (std::size_t j = 0; j < f; ++j) {
      for (std::size_t k = j + 1; k < f; ++k) {
        double r_jk = 0.0;
        if (sds[j] > 0.0 && sds[k] > 0.0) {
          double cov = 0.0;
          for (std::size_t r = 0; r < t; ++r) {
            cov += (s.at(r, j) - means[j]) * (s.at(r, k) - means[k]);
          }
          r_jk = std::abs(cov / (sds[j] * sds[k]));
        }
        out.values.at(j, k) += r_jk;
        out.values.at(k, j) += r_jk;
      }
    }
  }

  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (std::size_t j = 0; j < f; ++j) {
    for (std::size_t k = 0; k < f; ++k) {
      out.values.at(j, k) = j == k ? 1.0 : std::min(1.0, out.values.at(j, k) * inv_n);
    }
  }
  return out;
}

TTestResult independent_t_test(std::span<const double> p_obs, std::span<const double> n_obs) {
  if (p_obs.size() < 2 || n_obs.size() < 2) {
    throw ValidationError("independent t-test needs >= 2 observations per group");
  }
  const double np = static_cast<double>(p_obs.size());
  const double nn = static_cast<double>(n_obs.size());
  const double mp = mean_of(p_obs);
  const double mn = mean_of(n_obs);
  const double sp2 = sample_var(p_obs, mp);
  const double sn2 = sample_var(n_obs, mn);

  TTestResult res;
  res.dof = np + nn - 2.0;
  const double pooled = ((np - 1.0) * sp2 + (nn - 1.0) * sn2) / res.dof;
  const double denom = std::sqrt(pooled * (1.0 / np + 1.0 / nn));
  const double diff = mp - mn;
  if (denom == 0.0) {
    if (diff == 0.0) {
      res.t = 0.0;
      res.p_two_sided = 1.0;
    } else {
      res.t = diff > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
      res.p_two_sided = 0.0;
      res.degenerate = true;
    }
    return res;
  }
  res.t = diff / denom;
  res.p_two_sided = student_t_p_value(res.t, res.dof);
  return res;
}

TTestResult paired_t_test(std::span<const double> pre_obs, std::span<const double> post_obs) {
  if (pre_obs.size() != post_obs.size()) throw ValidationError("paired t-test needs equal lengths");
  if (pre_obs.size() < 2) throw ValidationError("paired t-test needs n >= 2");
  const std::size_t n = pre_obs.size();
  const double n_d = static_cast<double>(n);

  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = post_obs[i] - pre_obs[i];
  const double d_bar = mean_of(diff);
  double ss = 0.0;
  for (double d : diff) ss += (d - d_bar) * (d - d_bar);

  TTestResult res;
  res.dof = n_d - 1.0;
  const double denom = std::sqrt(ss / (n_d * (n_d - 1.0)));
  if (denom == 0.0) {
    if (d_bar == 0.0) {
      res.t = 0.0;
      res.p_two_sided = 1.0;
    } else {
      res.t = d_bar > 0.0 ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
      res.p_two_sided = 0.0;
      res.degenerate = true;
    }
    return res;
  }
  res.t = d_bar / denom;
  res.p_two_sided = student_t_p_value(res.t, res.dof);
  return res;
}

FeatureSelection select_hf_voice_sets(const Matrix& pre_state, const Matrix& post_state,
                                      double alpha) {
  if (pre_state.rows() != post_state.rows() || pre_state.cols() != post_state.cols()) {
    throw ValidationError("pre/post matrices must be row-aligned by patient");
  }
  if (pre_state.rows() < 2) throw ValidationError("need at least 2 patients");

  FeatureSelection sel;
  sel.alpha = alpha;
  const std::size_t f = pre_state.cols();
  for (std::size_t j = 0; j < f; ++j) {
    const std::vector<double> pre = pre_state.col(j);
    const std::vector<double> post = post_state.col(j);
    FeatureTestRow row;
    row.feature = j;
    row.paired = paired_t_test(pre, post);
    row.independent = independent_t_test(pre, post);
    if (row.paired.p_two_sided < alpha) sel.paired_set.push_back(j);
    if (row.independent.p_two_sided < alpha) sel.independent_set.push_back(j);
    sel.per_feature.push_back(row);
  }
  return sel;
}

std::vector<GroupTally> tally_selection_by_group(const FeatureSelection& sel,
                                                 std::span<const std::string> feature_groups) {
  std::vector<GroupTally> tallies;
  auto find = [&tallies](const std::string& g) -> GroupTally& {
    for (auto& t : tallies) {
      if (t.group == g) return t;
    }
    tallies.push_back({g, 0, 0, 0, 0.0, 0.0});
    return tallies.back();
  };
  for (const std::string& g : feature_groups) find(g).total++;
  for (std::size_t j : sel.paired_set) find(feature_groups[j]).paired_selected++;
  for (std::size_t j : sel.independent_set) find(feature_groups[j]).independent_selected++;
  for (auto& t : tallies) {
    if (t.total > 0) {
      t.paired_pct = 100.0 * static_cast<double>(t.paired_selected) / static_cast<double>(t.total);
      t.independent_pct =
          100.0 * static_cast<double>(t.independent_selected) / static_cast<double>(t.total);
    }
  }
  std::sort(tallies.begin(), tallies.end(), [](const GroupTally& a, const GroupTally& b) {
    auto key = [](const std::string& g) {
      return g.size() > 1 && g[0] == 'G' ? std::stoi(g.substr(1)) : 1 << 20;
    };
    return key(a.group) < key(b.group);
  });
  return tallies;
}

}  // namespace vbt
