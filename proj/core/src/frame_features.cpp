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

#include "vbt/frame_features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vbt/error.hpp"

namespace vbt {
namespace {

constexpr double kPitchFmin = 50.0;
constexpr double kPitchFmax = 500.0;
constexpr double kVoicingThreshold = 0.45;
constexpr double kCppBandSplitHz = 160.0;
constexpr double kActivityMedianFactor = 0.1;

std::vector<CatalogEntry> build_standard_entries() {
  std::vector<CatalogEntry> e;
  e.reserve(kNumFrameFeatures);
  auto add = [&e](const std::string& name, FeatureGroup g, const std::string& params = "") {
    e.push_back({static_cast<int>(e.size()), name, g, params});
  };
  add("F0final_sma", FeatureGroup::kF0, "range=50-500Hz;threshold=0.45");
  add("voicingFinalUnclipped_sma", FeatureGroup::kF0);
  add("jitterLocal_sma", FeatureGroup::kQuality, "marks=per-voiced-frame");
  add("jitterDDP_sma", FeatureGroup::kQuality, "marks=per-voiced-frame");
  add("shimmerLocal_sma", FeatureGroup::kQuality, "amplitude=frame-peak");
  add("logHNR_sma", FeatureGroup::kQuality, "clamp=[-100,100]dB");
  add("audspec_lengthL1norm_sma", FeatureGroup::kRhythmEnergy, "bands=26");
  add("audspecRasta_lengthL1norm_sma", FeatureGroup::kRasta, "bands=26");
  add("pcm_RMSenergy_sma", FeatureGroup::kRhythmEnergy);
  add("pcm_zcr_sma", FeatureGroup::kRhythmZcr, "per-sample");
  for (int b = 0; b < kNumRastaBands; ++b) {
    add("audSpec_Rfilt_sma[" + std::to_string(b) + "]", FeatureGroup::kRasta,
        "pole=0.98");
  }
  add("pcm_fftMag_fband250-650_sma", FeatureGroup::kRhythmEnergy);
  add("pcm_fftMag_fband1000-4000_sma", FeatureGroup::kRhythmEnergy);
  add("pcm_fftMag_spectralRollOff25.0_sma", FeatureGroup::kRhythmZcr);
  add("pcm_fftMag_spectralRollOff50.0_sma", FeatureGroup::kRhythmZcr);
  add("pcm_fftMag_spectralRollOff75.0_sma", FeatureGroup::kRhythmZcr);
  add("pcm_fftMag_spectralRollOff90.0_sma", FeatureGroup::kRhythmZcr);
  add("pcm_fftMag_spectralFlux_sma", FeatureGroup::kRhythmEnergy);
  add("pcm_fftMag_spectralCentroid_sma", FeatureGroup::kRhythmZcr);
  add("pcm_fftMag_spectralEntropy_sma", FeatureGroup::kRhythmZcr);
  add("pcm_fftMag_spectralVariance_sma", FeatureGroup::kRhythmZcr);
  add("pcm_fftMag_spectralSkewness_sma", FeatureGroup::kRhythmZcr);
  add("pcm_fftMag_spectralKurtosis_sma", FeatureGroup::kRhythmZcr);
  add("pcm_fftMag_spectralSlope_sma", FeatureGroup::kRhythmEnergy);
  add("pcm_fftMag_psySharpness_sma", FeatureGroup::kRhythmZcr);
  add("pcm_fftMag_spectralHarmonicity_sma", FeatureGroup::kRhythmEnergy);
  for (int k = 1; k <= 14; ++k) {
    add("mfcc_sma[" + std::to_string(k) + "]", FeatureGroup::kMfcc, "n_mel=26");
  }
  add("cpp", FeatureGroup::kQuality, "range=50-500Hz");
  add("cpp_band", FeatureGroup::kQuality, "range=50-160Hz");
  add("cpp_high", FeatureGroup::kQuality, "range=160-500Hz");
  add("energy", FeatureGroup::kRhythmEnergy, "mean-square");
  add("zcr", FeatureGroup::kRhythmZcr, "per-second");
  add("spl", FeatureGroup::kRhythmEnergy, "ref=1e-10");
  add("activity", FeatureGroup::kRhythmEnergy, "threshold=0.1*median-rms");
  return e;
}

}  // namespace

std::string feature_group_name(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::kRhythmEnergy: return "Rhythm-energy";
    case FeatureGroup::kRhythmZcr: return "Rhythm-zcr";
    case FeatureGroup::kMfcc: return "MFCC";
    case FeatureGroup::kQuality: return "Quality";
    case FeatureGroup::kRasta: return "RASTA";
    case FeatureGroup::kF0: return "F0";
  }
  return "?";
}

std::string fnv1a_hex(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

FeatureCatalog::FeatureCatalog(std::vector<CatalogEntry> entries)
    : entries_(std::move(entries)) {
  std::string blob;
  for (const auto& e : entries_) {
    blob += std::to_string(e.id) + ":" + e.name + ":" + feature_group_name(e.group) +
            ":" + e.parameters + "\n";
  }
  hash_ = fnv1a_hex(std::span<const char>(blob.data(), blob.size()));
}

const FeatureCatalog& FeatureCatalog::standard() {
  static const FeatureCatalog catalog(build_standard_entries());
  return catalog;
}

std::vector<int> FeatureCatalog::ids_in_group(FeatureGroup g) const {
  std::vector<int> ids;
  for (const auto& e : entries_) {
    if (e.group == g) ids.push_back(e.id);
  }
  return ids;
}

double frame_rms(std::span<const double> frame) {
  if (frame.empty()) return 0.0;
  double acc = 0.0;
  for (double v : frame) acc += v * v;
  return std::sqrt(acc / static_cast<double>(frame.size()));
}

double frame_zcr(std::span<const double> frame) {
  if (frame.size() < 2) return 0.0;
  std::size_t changes = 0;
  for (std::size_t i = 1; i < frame.size(); ++i) {
    if ((frame[i - 1] >= 0.0) != (frame[i] >= 0.0)) ++changes;
  }
  return static_cast<double>(changes) / static_cast<double>(frame.size() - 1);
}

double frame_spl(double rms) {
  return 20.0 * std::log10(std::max(rms, kLogFloor) / kLogFloor);
}

RhythmFeatures rhythm_features(std::span<const double> frame, double activity_rms_threshold,
                               double audspec_l1, double audspec_rasta_l1) {
  RhythmFeatures rf;
  rf.rms = frame_rms(frame);
  rf.zcr = frame_zcr(frame);
  rf.spl = frame_spl(rf.rms);
  rf.activity = rf.rms > activity_rms_threshold ? 1.0 : 0.0;
  rf.audspec_l1 = audspec_l1;
  rf.audspec_rasta_l1 = audspec_rasta_l1;
  return rf;
}

SpectralShape spectral_shape_features(const Spectrum& spec, const Spectrum* prev) {
  const std::size_t n = spec.magnitudes.size();
  if (n == 0) throw ValidationError("empty spectrum");
  SpectralShape s;

  double total = 0.0;
  for (double m : spec.magnitudes) total += m;

  for (std::size_t k = 0; k < n; ++k) {
    const double f = spec.freq(k);
    const double m = spec.magnitudes[k];
    if (f >= 250.0 && f < 650.0) s.fband_250_650 += m;
    if (f >= 1000.0 && f < 4000.0) s.fband_1000_4000 += m;
    const double p = prev != nullptr && k < prev->magnitudes.size() ? prev->magnitudes[k] : 0.0;
    const double d = m - p;
    s.flux += d * d;
  }

  if (total > 0.0) {
    double cum = 0.0;
    bool hit25 = false, hit50 = false, hit75 = false, hit90 = false;
    for (std::size_t k = 0; k < n; ++k) {
      cum += spec.magnitudes[k] / total;
      const double f = spec.freq(k);
      if (!hit25 && cum >= 0.25) { s.rolloff25 = f; hit25 = true; }
      if (!hit50 && cum >= 0.50) { s.rolloff50 = f; hit50 = true; }
      if (!hit75 && cum >= 0.75) { s.rolloff75 = f; hit75 = true; }
      if (!hit90 && cum >= 0.90) { s.rolloff90 = f; hit90 = true; }
    }

    double centroid = 0.0, entropy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double p = spec.magnitudes[k] / total;
      centroid += spec.freq(k) * p;
      if (p > 0.0) entropy -= p * std::log(p);
    }
    s.centroid = centroid;
    s.entropy = entropy;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double p = spec.magnitudes[k] / total;
      const double d = spec.freq(k) - centroid;
      m2 += p * d * d;
      m3 += p * d * d * d;
      m4 += p * d * d * d * d;
    }
    s.variance = m2;
    if (m2 > 0.0) {
      s.skewness = m3 / std::pow(m2, 1.5);
      s.kurtosis = m4 / (m2 * m2);
    }

    // Zwicker-style sharpness on the bark scale
    double num = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double f = spec.freq(k);
      const double z = 13.0 * std::atan(0.00076 * f) + 3.5 * std::atan((f / 7500.0) * (f / 7500.0));
      const double g = z <= 14.0 ? 1.0 : 0.066 * std::exp(0.171 * z);
      num += spec.magnitudes[k] * g * z;
    }
    s.sharpness = 0.11 * num / total;

    // mean local-peak prominence of the normalized distribution
    double prom_sum = 0.0;
    std::size_t prom_count = 0;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double pk = spec.magnitudes[k] / total;
      const double pl = spec.magnitudes[k - 1] / total;
      const double pr = spec.magnitudes[k + 1] / total;
      if (pk > pl && pk >= pr) {
        prom_sum += pk - 0.5 * (pl + pr);
        ++prom_count;
      }
    }
    if (prom_count > 0) s.harmonicity = prom_sum / static_cast<double>(prom_count);
  }

  // least-squares slope of magnitude on frequency, over all bins
  if (n >= 2) {
    const double n_d = static_cast<double>(n);
    double f_mean = 0.0, m_mean = total / n_d;
    for (std::size_t k = 0; k < n; ++k) f_mean += spec.freq(k);
    f_mean /= n_d;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double df = spec.freq(k) - f_mean;
      sxy += df * (spec.magnitudes[k] - m_mean);
      sxx += df * df;
    }
    if (sxx > 0.0) s.slope = sxy / sxx;
  }
  return s;
}

PerturbationFeatures perturbation_features(std::span<const double> periods_s,
                                           std::span<const double> amplitudes) {
  PerturbationFeatures out;
  const std::size_t n = periods_s.size();
  if (n >= 2) {
    double mean_t = 0.0;
    for (double t : periods_s) mean_t += t;
    mean_t /= static_cast<double>(n);
    if (mean_t > 0.0) {
      double acc = 0.0;
      for (std::size_t i = 1; i < n; ++i) acc += std::abs(periods_s[i] - periods_s[i - 1]);
      out.jitter_local = acc / static_cast<double>(n - 1) / mean_t;
      out.jitter_defined = true;
      if (n >= 3) {
        double ddp = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
          ddp += std::abs((periods_s[i + 1] - periods_s[i]) - (periods_s[i] - periods_s[i - 1]));
        }
        out.jitter_ddp = ddp / static_cast<double>(n - 2) / mean_t;
        out.jitter_ddp_defined = true;
      }
    }
  }
  const std::size_t m = amplitudes.size();
  if (m >= 2) {
    double mean_a = 0.0;
    for (double a : amplitudes) mean_a += a;
    mean_a /= static_cast<double>(m);
    if (mean_a > 0.0) {
      double acc = 0.0;
      for (std::size_t i = 1; i < m; ++i) acc += std::abs(amplitudes[i] - amplitudes[i - 1]);
      out.shimmer_local = acc / static_cast<double>(m - 1) / mean_a;
      out.shimmer_defined = true;
    }
  }
  return out;
}

double loghnr_from_peak(double r, bool voiced) {
  if (!voiced || r <= 0.0) return -100.0;
  if (r >= 1.0) return 100.0;
  return std::clamp(10.0 * std::log10(r / (1.0 - r)), -100.0, 100.0);
}

double harmonicity_loghnr(std::span<const double> frame, int sample_rate_hz,
                          double voicing_threshold) {
  const PitchEstimate p = autocorrelation_pitch(frame, sample_rate_hz, kPitchFmin,
                                                kPitchFmax, voicing_threshold);
  return loghnr_from_peak(p.voicing_prob, p.voicing_prob >= voicing_threshold);
}

CppResult cepstral_peak_prominence(std::span<const double> frame, int sample_rate_hz) {
  CppResult out;
  double energy = 0.0;
  for (double v : frame) energy += v * v;
  if (energy <= 0.0) return out;  // all-zero frame: 0 by convention

  const int q_min = std::max(1, static_cast<int>(std::ceil(sample_rate_hz / kPitchFmax)));
  const int q_max = static_cast<int>(std::floor(sample_rate_hz / kPitchFmin));
  const int q_split = static_cast<int>(std::floor(sample_rate_hz / kCppBandSplitHz));
  if (static_cast<int>(frame.size()) <= q_max) {
    throw ValidationError("frame shorter than the maximum cepstral quefrency");
  }

  std::vector<double> ceps = real_cepstrum(frame, sample_rate_hz);
  // dB-scaled log units
  const double db_scale = 20.0 / std::numbers::ln10;
  for (double& c : ceps) c *= db_scale;

  // linear trend fitted over the full quefrency search range
  double q_mean = 0.0, c_mean = 0.0;
  const int count = q_max - q_min + 1;
  for (int q = q_min; q <= q_max; ++q) {
    q_mean += q;
    c_mean += ceps[static_cast<std::size_t>(q)];
  }
  q_mean /= count;
  c_mean /= count;
  double sxy = 0.0, sxx = 0.0;
  for (int q = q_min; q <= q_max; ++q) {
    const double dq = q - q_mean;
    sxy += dq * (ceps[static_cast<std::size_t>(q)] - c_mean);
    sxx += dq * dq;
  }
  const double a = sxx > 0.0 ? sxy / sxx : 0.0;
  const double b = c_mean - a * q_mean;

  auto prominence = [&](int lo, int hi) {
    int q_star = lo;
    for (int q = lo; q <= hi; ++q) {
      if (ceps[static_cast<std::size_t>(q)] > ceps[static_cast<std::size_t>(q_star)]) q_star = q;
    }
    return ceps[static_cast<std::size_t>(q_star)] - (a * q_star + b);
  };

  out.cpp = prominence(q_min, q_max);
  out.cpp_band = prominence(std::min(q_split, q_max), q_max);   // 50-160 Hz periods
  out.cpp_high = prominence(q_min, std::min(q_split, q_max));   // 160-500 Hz periods
  return out;
}

std::vector<double> mfcc_from_log_mel(std::span<const double> log_mel, int n_keep) {
  const std::size_t n = log_mel.size();
  if (n == 0) throw ValidationError("empty mel vector");
  std::vector<double> out(static_cast<std::size_t>(n_keep), 0.0);
  const double scale = std::sqrt(2.0 / static_cast<double>(n));
  for (int k = 1; k <= n_keep; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += log_mel[i] * std::cos(std::numbers::pi * k * (static_cast<double>(i) + 0.5) /
                                   static_cast<double>(n));
    }
    out[static_cast<std::size_t>(k - 1)] = scale * acc;
  }
  return out;
}

ExtractionResult extract_lld_map(const Waveform& w, const FeatureCatalog& catalog,
                                 const std::string& source_id) {
  if (w.samples.empty()) throw ValidationError("empty waveform");

  const FrameSet fs = frame_signal(w);
  const std::size_t n = fs.n_frames();
  const std::size_t n_fft = next_pow2(fs.frame_len());

  std::vector<Spectrum> spectra(n);
  for (std::size_t t = 0; t < n; ++t) {
    spectra[t] = magnitude_spectrum(fs.frames.row(t), w.sample_rate_hz, n_fft);
  }

  const MelFilterbank mel(kNumRastaBands, 20.0, w.sample_rate_hz / 2.0, n_fft / 2 + 1,
                          spectra[0].bin_width_hz);
  BandEnergyTrajectory log_bands;
  log_bands.values = Matrix(n, kNumRastaBands);
  std::vector<std::vector<double>> linear_bands(n);
  for (std::size_t t = 0; t < n; ++t) {
    linear_bands[t] = mel.energies(spectra[t]);
    for (int b = 0; b < kNumRastaBands; ++b) {
      log_bands.values.at(t, static_cast<std::size_t>(b)) =
          std::log(std::max(linear_bands[t][static_cast<std::size_t>(b)], kLogFloor));
    }
  }
  const BandEnergyTrajectory rasta = rasta_filter(log_bands);

  std::vector<PitchEstimate> pitch(n);
  std::vector<double> rms(n), peak_amp(n);
  for (std::size_t t = 0; t < n; ++t) {
    pitch[t] = autocorrelation_pitch(fs.frames.row(t), w.sample_rate_hz, kPitchFmin,
                                     kPitchFmax, kVoicingThreshold);
    rms[t] = frame_rms(fs.frames.row(t));
    double pk = 0.0;
    for (double v : fs.frames.row(t)) pk = std::max(pk, std::abs(v));
    peak_amp[t] = pk;
  }
  std::vector<double> rms_sorted = rms;
  std::sort(rms_sorted.begin(), rms_sorted.end());
  const double median_rms = rms_sorted[rms_sorted.size() / 2];
  const double activity_threshold = kActivityMedianFactor * median_rms;

  ExtractionResult res;
  res.map.catalog_hash = catalog.hash();
  res.map.source_id = source_id;
  res.map.values = Matrix(n, kNumFrameFeatures);
  Matrix& m = res.map.values;

  const double frame_duration_s = fs.frame_len() / static_cast<double>(w.sample_rate_hz);

  for (std::size_t t = 0; t < n; ++t) {
    const auto frame = fs.frames.row(t);
    const bool voiced = pitch[t].voicing_prob >= kVoicingThreshold && pitch[t].f0_hz > 0.0;

    m.at(t, 0) = pitch[t].f0_hz;
    m.at(t, 1) = pitch[t].voicing_prob;

    // ids 2-4: perturbation over the trailing pitch marks (one per voiced frame)
    auto voiced_at = [&](std::size_t k) {
      return pitch[k].voicing_prob >= kVoicingThreshold && pitch[k].f0_hz > 0.0;
    };
    if (t >= 1 && voiced && voiced_at(t - 1)) {
      const double pair_t[2] = {1.0 / pitch[t - 1].f0_hz, 1.0 / pitch[t].f0_hz};
      const double pair_a[2] = {peak_amp[t - 1], peak_amp[t]};
      const PerturbationFeatures pf = perturbation_features(pair_t, pair_a);
      m.at(t, 2) = pf.jitter_local;
      m.at(t, 4) = pf.shimmer_local;
      if (t >= 2 && voiced_at(t - 2)) {
        const double tri[3] = {1.0 / pitch[t - 2].f0_hz, 1.0 / pitch[t - 1].f0_hz,
                               1.0 / pitch[t].f0_hz};
        const PerturbationFeatures p3 = perturbation_features(tri, {});
        m.at(t, 3) = p3.jitter_ddp;
      }
    } else if (voiced) {
      res.flags.push_back("frame " + std::to_string(t) +
                          ": perturbation undefined (isolated voiced frame)");
    }

    m.at(t, 5) = loghnr_from_peak(pitch[t].voicing_prob, voiced);

    double audspec_l1 = 0.0, rasta_l1 = 0.0;
    for (int b = 0; b < kNumRastaBands; ++b) {
      audspec_l1 += std::abs(linear_bands[t][static_cast<std::size_t>(b)]);
      rasta_l1 += std::abs(rasta.values.at(t, static_cast<std::size_t>(b)));
    }
    const RhythmFeatures rf = rhythm_features(frame, activity_threshold, audspec_l1, rasta_l1);
    m.at(t, 6) = rf.audspec_l1;
    m.at(t, 7) = rf.audspec_rasta_l1;
    m.at(t, 8) = rf.rms;
    m.at(t, 9) = rf.zcr;

    for (int b = 0; b < kNumRastaBands; ++b) {
      m.at(t, static_cast<std::size_t>(10 + b)) = rasta.values.at(t, static_cast<std::size_t>(b));
    }

    const SpectralShape ss =
        spectral_shape_features(spectra[t], t > 0 ? &spectra[t - 1] : nullptr);
    const double shape_vals[15] = {ss.fband_250_650, ss.fband_1000_4000, ss.rolloff25,
                                   ss.rolloff50,     ss.rolloff75,       ss.rolloff90,
                                   ss.flux,          ss.centroid,        ss.entropy,
                                   ss.variance,      ss.skewness,        ss.kurtosis,
                                   ss.slope,         ss.sharpness,       ss.harmonicity};
    for (int k = 0; k < 15; ++k) m.at(t, static_cast<std::size_t>(36 + k)) = shape_vals[k];

    std::vector<double> log_mel(kNumRastaBands);
    for (int b = 0; b < kNumRastaBands; ++b) {
      log_mel[static_cast<std::size_t>(b)] = log_bands.values.at(t, static_cast<std::size_t>(b));
    }
    const std::vector<double> mfcc = mfcc_from_log_mel(log_mel, 14);
    for (int k = 0; k < 14; ++k) m.at(t, static_cast<std::size_t>(51 + k)) = mfcc[static_cast<std::size_t>(k)];

    const CppResult cpp = cepstral_peak_prominence(frame, w.sample_rate_hz);
    m.at(t, 65) = cpp.cpp;
    m.at(t, 66) = cpp.cpp_band;
    m.at(t, 67) = cpp.cpp_high;

    m.at(t, 68) = rf.rms * rf.rms;  // mean-square frame energy
    m.at(t, 69) = rf.zcr * static_cast<double>(fs.frame_len() - 1) / frame_duration_s;
    m.at(t, 70) = rf.spl;
    m.at(t, 71) = rf.activity;
  }

  for (double v : m.data()) {
    if (!std::isfinite(v)) {
      throw ComputeError("non-finite frame feature extracted from " + source_id);
    }
  }
  return res;
}

}  // namespace vbt
