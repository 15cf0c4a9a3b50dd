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

#include "vbt/global_features.hpp"

#include <algorithm>
#include <cmath>

#include "vbt/error.hpp"

namespace vbt {

const std::array<const char*, kNumFunctionals> kFunctionalNames = {
    "mean",   "stddev", "skewness", "kurtosis", "min",      "max",
    "range",  "q1",     "q2",       "q3",       "iqr",      "pctl1",
    "pctl99", "slope",  "resid",    "mcr",      "upfrac"};

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw ValidationError("percentile of empty sequence");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

std::array<double, kNumFunctionals> apply_functionals(std::span<const double> traj) {
  if (traj.empty()) throw ValidationError("empty trajectory");
  const std::size_t n = traj.size();
  const double n_d = static_cast<double>(n);
  std::array<double, kNumFunctionals> out{};

  double mean = 0.0;
  for (double v : traj) mean += v;
  mean /= n_d;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : traj) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n_d;
  m3 /= n_d;
  m4 /= n_d;
  const double stddev = n >= 2 ? std::sqrt(m2) : 0.0;
  const double skew = m2 > 0.0 && n >= 3 ? m3 / std::pow(m2, 1.5) : 0.0;
  const double kurt = m2 > 0.0 && n >= 3 ? m4 / (m2 * m2) : 0.0;

  const auto [min_it, max_it] = std::minmax_element(traj.begin(), traj.end());
  const double q1 = percentile(traj, 25.0);
  const double q2 = percentile(traj, 50.0);
  const double q3 = percentile(traj, 75.0);

  double slope = 0.0, resid = 0.0;
  if (n >= 2) {
    const double t_mean = (n_d - 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double dt = static_cast<double>(t) - t_mean;
      sxy += dt * (traj[t] - mean);
      sxx += dt * dt;
    }
    slope = sxy / sxx;
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double r = traj[t] - (mean + slope * (static_cast<double>(t) - t_mean));
      acc += r * r;
    }
    resid = std::sqrt(acc / n_d);
  }

  double mcr = 0.0;
  if (n >= 2) {
    std::size_t crossings = 0;
    for (std::size_t t = 1; t < n; ++t) {
      if ((traj[t - 1] >= mean) != (traj[t] >= mean)) ++crossings;
    }
    mcr = static_cast<double>(crossings) / (n_d - 1.0);
  }

  std::size_t above = 0;
  for (double v : traj) {
    if (v > mean + stddev) ++above;
  }

  out[0] = mean;
  out[1] = stddev;
  out[2] = skew;
  out[3] = kurt;
  out[4] = *min_it;
  out[5] = *max_it;
  out[6] = *max_it - *min_it;
  out[7] = q1;
  out[8] = q2;
  out[9] = q3;
  out[10] = q3 - q1;
  out[11] = percentile(traj, 1.0);
  out[12] = percentile(traj, 99.0);
  out[13] = slope;
  out[14] = resid;
  out[15] = mcr;
  out[16] = static_cast<double>(above) / n_d;
  return out;
}

std::string global_group_of_lld(int lld_id) {
  if (lld_id == 6) return "G1";                      // audspec
  if (lld_id == 7) return "G2";                      // audspecRasta
  if (lld_id == 9 || lld_id == 69) return "G3";      // zcr
  if (lld_id == 8 || lld_id == 68 || lld_id == 70 || lld_id == 71) return "G4";  // energy
  if (lld_id >= 36 && lld_id <= 50) return "G5";     // pcm_fftMag
  if (lld_id >= 10 && lld_id <= 35) return "G6";     // audSpec_Rfilt
  if (lld_id >= 51 && lld_id <= 64) return "G7";     // mfcc
  if (lld_id == 0 || lld_id == 1) return "G8";       // F0 + voicing
  if (lld_id == 2 || lld_id == 3) return "G9";       // jitter
  if (lld_id == 4) return "G10";                     // shimmer
  return "G11";                                      // logHNR + cpp family
}

GlobalFeatureSchema::GlobalFeatureSchema(const FeatureCatalog& catalog)
    : catalog_hash_(catalog.hash()) {
  for (const auto& e : catalog.entries()) {
    for (const char* fn : kFunctionalNames) {
      names_.push_back(e.name + "_" + fn);
      groups_.push_back(global_group_of_lld(e.id));
    }
  }
  // first-order frame differences of the RASTA band trajectories
  for (int b = 0; b < kNumRastaBands; ++b) {
    const auto& e = catalog.entry(10 + b);
    for (const char* fn : kFunctionalNames) {
      names_.push_back(e.name + "_de_" + fn);
      groups_.push_back("G6");
    }
  }
}

const GlobalFeatureSchema& GlobalFeatureSchema::standard() {
  static const GlobalFeatureSchema schema(FeatureCatalog::standard());
  return schema;
}

std::vector<std::size_t> GlobalFeatureSchema::indices_in_group(const std::string& group) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i] == group) idx.push_back(i);
  }
  return idx;
}

GlobalFeatureVector build_global_vector(const FrameFeatureMap& map) {
  const GlobalFeatureSchema& schema = GlobalFeatureSchema::standard();
  if (map.catalog_hash != schema.catalog_hash()) {
    throw ValidationError("frame map catalog hash does not match the global schema");
  }
  if (map.values.cols() != kNumFrameFeatures || map.values.rows() == 0) {
    throw ValidationError("frame map must be n_frames x 72 with n_frames >= 1");
  }

  GlobalFeatureVector out;
  out.source_id = map.source_id;
  out.values.reserve(schema.size());

  for (int id = 0; id < kNumFrameFeatures; ++id) {
    const std::vector<double> col = map.values.col(static_cast<std::size_t>(id));
    for (double v : apply_functionals(col)) out.values.push_back(v);
  }
  const std::size_t n = map.values.rows();
  for (int b = 0; b < kNumRastaBands; ++b) {
    const std::vector<double> col = map.values.col(static_cast<std::size_t>(10 + b));
    std::vector<double> diff;
    if (n >= 2) {
      diff.resize(n - 1);
      for (std::size_t t = 1; t < n; ++t) diff[t - 1] = col[t] - col[t - 1];
    } else {
      diff.assign(1, 0.0);
    }
    for (double v : apply_functionals(diff)) out.values.push_back(v);
  }
  return out;
}

}  // namespace vbt
