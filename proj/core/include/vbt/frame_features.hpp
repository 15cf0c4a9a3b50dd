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

#ifndef VBT_FRAME_FEATURES_HPP_
#define VBT_FRAME_FEATURES_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vbt/dsp.hpp"
#include "vbt/wav.hpp"

namespace vbt {

inline constexpr int kNumFrameFeatures = 72;
inline constexpr int kNumRastaBands = 26;

enum class FeatureGroup {
  kRhythmEnergy,
  kRhythmZcr,
  kMfcc,
  kQuality,
  kRasta,
  kF0,
};

std::string feature_group_name(FeatureGroup g);

struct CatalogEntry {
  int id = 0;
  std::string name;
  FeatureGroup group = FeatureGroup::kF0;
  std::string parameters;  // free-form "key=value;..." documentation
};

// Ordered catalog of the 72 frame-level descriptors. Ids are contiguous 0-71
// and each id belongs to exactly one group.
class FeatureCatalog {
 public:
  static const FeatureCatalog& standard();

  const std::vector<CatalogEntry>& entries() const { return entries_; }
  const CatalogEntry& entry(int id) const { return entries_.at(static_cast<std::size_t>(id)); }
  const std::string& hash() const { return hash_; }
  std::vector<int> ids_in_group(FeatureGroup g) const;

 private:
  explicit FeatureCatalog(std::vector<CatalogEntry> entries);
  std::vector<CatalogEntry> entries_;
  std::string hash_;
};

// FNV-1a 64-bit digest, hex-encoded; used for catalog identity checks.
std::string fnv1a_hex(std::span<const char> bytes);

struct FrameFeatureMap {
  Matrix values;  // n_frames x 72
  std::string catalog_hash;
  std::string source_id;
};

struct ExtractionResult {
  FrameFeatureMap map;
  std::vector<std::string> flags;  // degenerate-feature notes, for logs
};

// Runs the full 72-descriptor extraction: framing (200/100 ms), spectra, mel
// and RASTA band trajectories, pitch, perturbation, cepstral and rhythm
// descriptors, in catalog column order.
ExtractionResult extract_lld_map(const Waveform& w,
                                 const FeatureCatalog& catalog = FeatureCatalog::standard(),
                                 const std::string& source_id = "");

// --- individual descriptor families -----------------------------------------

struct SpectralShape {
  double fband_250_650 = 0.0;
  double fband_1000_4000 = 0.0;
  double rolloff25 = 0.0;
  double rolloff50 = 0.0;
  double rolloff75 = 0.0;
  double rolloff90 = 0.0;
  double flux = 0.0;
  double centroid = 0.0;
  double entropy = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  double slope = 0.0;
  double sharpness = 0.0;
  double harmonicity = 0.0;
};

// `prev` is the previous frame's spectrum for the flux term (null for the
// first frame, which is treated as all-zero history).
SpectralShape spectral_shape_features(const Spectrum& spec, const Spectrum* prev);

struct PerturbationFeatures {
  double jitter_local = 0.0;
  double jitter_ddp = 0.0;
  double shimmer_local = 0.0;
  bool jitter_defined = false;
  bool jitter_ddp_defined = false;
  bool shimmer_defined = false;
};

// Cycle-to-cycle perturbation over a pitch-mark sequence. Undefined values
// (too few periods) come back as 0 with the corresponding flag unset.
PerturbationFeatures perturbation_features(std::span<const double> periods_s,
                                           std::span<const double> amplitudes);

// 10*log10(r / (1 - r)) in dB, clamped to [-100, 100]; r is the normalized
// autocorrelation peak. Unvoiced frames map to -100.
double loghnr_from_peak(double r, bool voiced);
double harmonicity_loghnr(std::span<const double> frame, int sample_rate_hz,
                          double voicing_threshold = 0.45);

struct CppResult {
  double cpp = 0.0;       // peak prominence over periods of 50-500 Hz
  double cpp_band = 0.0;  // 50-160 Hz sub-range
  double cpp_high = 0.0;  // 160-500 Hz sub-range
};

// Cepstral peak prominence: rahmonic peak height above the linear cepstral
// trend, in dB-scaled log units. All-zero frames return all zeros.
CppResult cepstral_peak_prominence(std::span<const double> frame, int sample_rate_hz);

struct RhythmFeatures {
  double rms = 0.0;
  double zcr = 0.0;       // sign changes / (frame_len - 1)
  double spl = 0.0;       // 20*log10(max(rms, eps)/eps)
  double activity = 0.0;  // 1 when rms exceeds the adaptive threshold
  double audspec_l1 = 0.0;
  double audspec_rasta_l1 = 0.0;
};

double frame_rms(std::span<const double> frame);
double frame_zcr(std::span<const double> frame);
double frame_spl(double rms);

RhythmFeatures rhythm_features(std::span<const double> frame, double activity_rms_threshold,
                               double audspec_l1, double audspec_rasta_l1);

// DCT-II (orthonormal) of log mel energies; returns coefficients 1..n_keep.
std::vector<double> mfcc_from_log_mel(std::span<const double> log_mel, int n_keep = 14);

}  // namespace vbt

#endif  // VBT_FRAME_FEATURES_HPP_
