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
#include <set>

#include "oracles.hpp"
#include "vbt/error.hpp"
#include "vbt/frame_features.hpp"

using namespace vbt;

TEST_CASE("catalog: 72 contiguous ids, each in exactly one group") {
  const FeatureCatalog& cat = FeatureCatalog::standard();
  REQUIRE(cat.entries().size() == 72);
  std::set<int> seen;
  for (const CatalogEntry& e : cat.entries()) {
    CHECK(e.id == static_cast<int>(seen.size()));
    seen.insert(e.id);
  }
  // published group lists: MFCC 51-64, RASTA {7, 10-35}, Quality {2-5, 65-67},
  // Rhythm-zcr {9, 38-41, 43-47, 49, 69}, F0 {0, 1}; activity (71) sits with
  // the energy rhythm features
  const std::vector<int> mfcc = cat.ids_in_group(FeatureGroup::kMfcc);
  REQUIRE(mfcc.size() == 14);
  CHECK(mfcc.front() == 51);
  CHECK(mfcc.back() == 64);

  std::vector<int> rasta_want = {7};
  for (int i = 10; i <= 35; ++i) rasta_want.push_back(i);
  CHECK(cat.ids_in_group(FeatureGroup::kRasta) == rasta_want);

  CHECK(cat.ids_in_group(FeatureGroup::kQuality) == std::vector<int>{2, 3, 4, 5, 65, 66, 67});
  CHECK(cat.ids_in_group(FeatureGroup::kRhythmZcr) ==
        std::vector<int>{9, 38, 39, 40, 41, 43, 44, 45, 46, 47, 49, 69});
  CHECK(cat.ids_in_group(FeatureGroup::kF0) == std::vector<int>{0, 1});
  CHECK(cat.ids_in_group(FeatureGroup::kRhythmEnergy) ==
        std::vector<int>{6, 8, 36, 37, 42, 48, 50, 68, 70, 71});
  CHECK(cat.hash().size() == 16);
}

TEST_CASE("extract: one second of silence follows the silence conventions") {
  Waveform w;
  w.sample_rate_hz = 22050;
  w.samples.assign(22050, 0.0);
  const ExtractionResult res = extract_lld_map(w);
  const Matrix& m = res.map.values;
  REQUIRE(m.rows() == 9);
  REQUIRE(m.cols() == 72);
  for (std::size_t t = 0; t < m.rows(); ++t) {
    CHECK(m.at(t, 0) == 0.0);    // F0
    CHECK(m.at(t, 1) == 0.0);    // voicing
    CHECK(m.at(t, 5) == -100.0); // logHNR floor
    CHECK(m.at(t, 6) == 0.0);    // audspec L1
    CHECK(m.at(t, 8) == 0.0);    // rms
    CHECK(m.at(t, 9) == 0.0);    // zcr
    for (int k = 51; k <= 64; ++k) {
      CHECK(std::abs(m.at(t, static_cast<std::size_t>(k))) < 1e-12);  // mfcc of a constant floor
    }
    CHECK(m.at(t, 65) == 0.0);   // cpp
    CHECK(m.at(t, 68) == 0.0);   // energy
    CHECK(m.at(t, 70) == 0.0);   // spl at its floor (ref = eps)
    CHECK(m.at(t, 71) == 0.0);   // activity
  }
}

TEST_CASE("extract: 220 Hz tone fills the F0 column near 220") {
  Waveform w;
  w.sample_rate_hz = 22050;
  w.samples = oracle::tone(220.0, 22050, 3.0);
  const ExtractionResult res = extract_lld_map(w);
  const Matrix& m = res.map.values;
  for (std::size_t t = 0; t < m.rows(); ++t) {
    REQUIRE(m.at(t, 0) == doctest::Approx(220.0).epsilon(0.02));
    REQUIRE(m.at(t, 1) > 0.9);
  }
}

TEST_CASE("extract: identical waveforms give bitwise identical maps") {
  Waveform w;
  w.sample_rate_hz = 22050;
  w.samples = oracle::white_noise(22050, 17);
  const ExtractionResult a = extract_lld_map(w);
  const ExtractionResult b = extract_lld_map(w);
  REQUIRE(a.map.values.data() == b.map.values.data());
}

TEST_CASE("spectral shape: single-bin spectrum degenerates cleanly") {
  Spectrum s;
  s.bin_width_hz = 10.0;
  s.magnitudes.assign(100, 0.0);
  s.magnitudes[30] = 2.0;
  const SpectralShape sh = spectral_shape_features(s, nullptr);
  CHECK(sh.centroid == doctest::Approx(300.0));
  CHECK(sh.entropy == doctest::Approx(0.0));
  CHECK(sh.variance == doctest::Approx(0.0));
  CHECK(sh.rolloff25 == doctest::Approx(300.0));
  CHECK(sh.rolloff90 == doctest::Approx(300.0));
}

TEST_CASE("spectral shape: uniform spectrum has entropy log K") {
  Spectrum s;
  s.bin_width_hz = 5.0;
  s.magnitudes.assign(64, 0.7);
  const SpectralShape sh = spectral_shape_features(s, nullptr);
  CHECK(sh.entropy == doctest::Approx(std::log(64.0)).epsilon(1e-12));
}

TEST_CASE("spectral shape: moments match the direct summation oracle") {
  Spectrum s;
  s.bin_width_hz = 7.5;
  s.magnitudes = oracle::white_noise(257, 5, 1.0);
  for (double& v : s.magnitudes) v = std::abs(v);
  const SpectralShape sh = spectral_shape_features(s, nullptr);

  double total = 0.0;
  for (double v : s.magnitudes) total += v;
  double centroid = 0.0;
  for (std::size_t k = 0; k < s.magnitudes.size(); ++k) {
    centroid += (s.magnitudes[k] / total) * (7.5 * static_cast<double>(k));
  }
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t k = 0; k < s.magnitudes.size(); ++k) {
    const double p = s.magnitudes[k] / total;
    const double d = 7.5 * static_cast<double>(k) - centroid;
    m2 += p * d * d;
    m3 += p * d * d * d;
    m4 += p * d * d * d * d;
  }
  CHECK(sh.centroid == doctest::Approx(centroid).epsilon(1e-9));
  CHECK(sh.variance == doctest::Approx(m2).epsilon(1e-9));
  CHECK(sh.skewness == doctest::Approx(m3 / std::pow(m2, 1.5)).epsilon(1e-9));
  CHECK(sh.kurtosis == doctest::Approx(m4 / (m2 * m2)).epsilon(1e-9));
}

TEST_CASE("spectral shape: flux uses zero history on the first frame") {
  Spectrum s;
  s.bin_width_hz = 10.0;
  s.magnitudes = {1.0, 2.0, 3.0};
  const SpectralShape first = spectral_shape_features(s, nullptr);
  CHECK(first.flux == doctest::Approx(1.0 + 4.0 + 9.0));
  Spectrum prev = s;
  const SpectralShape same = spectral_shape_features(s, &prev);
  CHECK(same.flux == doctest::Approx(0.0));
}

TEST_CASE("perturbation: perfectly periodic train has zero jitter and shimmer") {
  const std::vector<double> periods(10, 0.005);
  const std::vector<double> amps(10, 0.6);
  const PerturbationFeatures p = perturbation_features(periods, amps);
  CHECK(p.jitter_local == 0.0);
  CHECK(p.jitter_ddp == 0.0);
  CHECK(p.shimmer_local == 0.0);
  CHECK(p.jitter_defined);
}

TEST_CASE("perturbation: alternating 10/11 ms periods give jitter 1/10.5") {
  std::vector<double> periods;
  for (int i = 0; i < 12; ++i) periods.push_back(i % 2 == 0 ? 0.010 : 0.011);
  const PerturbationFeatures p = perturbation_features(periods, {});
  CHECK(p.jitter_local == doctest::Approx(1.0 / 10.5).epsilon(1e-12));
}

TEST_CASE("perturbation: random sequences match the elementwise oracle") {
  vbt::Rng rng(9);
  std::vector<double> periods, amps;
  for (int i = 0; i < 25; ++i) {
    periods.push_back(0.008 + 0.004 * rng.uniform());
    amps.push_back(0.3 + 0.5 * rng.uniform());
  }
  const PerturbationFeatures p = perturbation_features(periods, amps);

  double mean_t = oracle::mean(periods), mean_a = oracle::mean(amps);
  double jl = 0.0, ddp = 0.0, sl = 0.0;
  for (std::size_t i = 1; i < periods.size(); ++i) jl += std::abs(periods[i] - periods[i - 1]);
  jl /= static_cast<double>(periods.size() - 1) * mean_t;
  for (std::size_t i = 1; i + 1 < periods.size(); ++i) {
    ddp += std::abs((periods[i + 1] - periods[i]) - (periods[i] - periods[i - 1]));
  }
  ddp /= static_cast<double>(periods.size() - 2) * mean_t;
  for (std::size_t i = 1; i < amps.size(); ++i) sl += std::abs(amps[i] - amps[i - 1]);
  sl /= static_cast<double>(amps.size() - 1) * mean_a;

  CHECK(p.jitter_local == doctest::Approx(jl).epsilon(1e-12));
  CHECK(p.jitter_ddp == doctest::Approx(ddp).epsilon(1e-12));
  CHECK(p.shimmer_local == doctest::Approx(sl).epsilon(1e-12));
}

TEST_CASE("perturbation: too few periods yields zeros with undefined flags") {
  const std::vector<double> one = {0.01};
  const PerturbationFeatures p = perturbation_features(one, one);
  CHECK(p.jitter_local == 0.0);
  CHECK_FALSE(p.jitter_defined);
  CHECK_FALSE(p.shimmer_defined);
}

TEST_CASE("loghnr: r = 0.5 gives 0 dB; extremes clamp") {
  CHECK(loghnr_from_peak(0.5, true) == doctest::Approx(0.0));
  CHECK(loghnr_from_peak(0.999999999999, true) == doctest::Approx(100.0).epsilon(0.25));
  CHECK(loghnr_from_peak(0.3, false) == -100.0);
}

TEST_CASE("loghnr: exact-period sine hits the +100 clamp") {
  // 220.5 Hz at 22050 Hz has an integer period of 100 samples, so the
  // normalized autocorrelation peak is 1 up to rounding
  const std::vector<double> frame = oracle::tone(220.5, 22050, 0.2);
  CHECK(harmonicity_loghnr(frame, 22050) == doctest::Approx(100.0));
}

TEST_CASE("loghnr: sine plus noise lands within 3 dB of the construction SNR") {
  const int fs = 22050;
  for (double snr_db : {5.0, 10.0, 15.0}) {
    const std::vector<double> sig = oracle::tone(147.0, fs, 0.2, 0.5);  // period 150 exactly
    const double noise_rms = 0.5 / std::sqrt(2.0) / std::pow(10.0, snr_db / 20.0);
    std::vector<double> frame = sig;
    vbt::Rng rng(31);
    for (double& v : frame) v += rng.normal(0.0, noise_rms);
    const double got = harmonicity_loghnr(frame, fs);
    INFO("snr " << snr_db << " got " << got);
    CHECK(std::abs(got - snr_db) < 3.0);
  }
}

TEST_CASE("cpp: white noise stays near zero, pulse train stands out") {
  const int fs = 22050;
  double noise_mean = 0.0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const std::vector<double> frame = oracle::white_noise(4410, 50 + seed);
    noise_mean += cepstral_peak_prominence(frame, fs).cpp;
  }
  noise_mean /= 8.0;

  // strong 100 Hz pulse train: rahmonic at 10 ms (220.5 samples)
  std::vector<double> train(4410, 0.0);
  for (std::size_t i = 0; i < train.size(); i += 220) train[i] = 0.9;
  const CppResult pulse = cepstral_peak_prominence(train, fs);
  CHECK(pulse.cpp > noise_mean + 5.0);
  CHECK(pulse.cpp_band >= pulse.cpp_high);
  CHECK(noise_mean < 5.0);
}

TEST_CASE("cpp: all-zero frame returns zeros by convention") {
  std::vector<double> frame(4410, 0.0);
  const CppResult c = cepstral_peak_prominence(frame, 22050);
  CHECK(c.cpp == 0.0);
  CHECK(c.cpp_band == 0.0);
  CHECK(c.cpp_high == 0.0);
}

TEST_CASE("cpp: frame shorter than the longest quefrency is rejected") {
  std::vector<double> frame(300, 0.1);
  CHECK_THROWS_AS(cepstral_peak_prominence(frame, 22050), ValidationError);
}

TEST_CASE("rhythm: alternating +1/-1 frame has zcr 1 and rms 1") {
  std::vector<double> frame(100);
  for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = i % 2 == 0 ? 1.0 : -1.0;
  CHECK(frame_zcr(frame) == doctest::Approx(1.0));
  CHECK(frame_rms(frame) == doctest::Approx(1.0));
}

TEST_CASE("rhythm: constant frame has zero crossings") {
  std::vector<double> frame(64, 0.7);
  CHECK(frame_zcr(frame) == 0.0);
}

TEST_CASE("rhythm: 100 Hz sine at 8 kHz crosses at ~0.025 per sample") {
  const std::vector<double> frame = oracle::tone(100.0, 8000, 0.2);
  // direct crossing count oracle
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < frame.size(); ++i) {
    if ((frame[i - 1] >= 0.0) != (frame[i] >= 0.0)) ++crossings;
  }
  const double want = static_cast<double>(crossings) / static_cast<double>(frame.size() - 1);
  CHECK(frame_zcr(frame) == doctest::Approx(want));
  CHECK(frame_zcr(frame) == doctest::Approx(0.025).epsilon(0.02));
}

TEST_CASE("scale behaviour: gain leaves zcr, centroid, roll-offs, mfcc unchanged") {
  Waveform w;
  w.sample_rate_hz = 22050;
  w.samples = oracle::tone(180.0, 22050, 1.0, 0.4);
  vbt::Rng rng(4);
  for (double& v : w.samples) v += 0.05 * rng.normal();

  Waveform scaled = w;
  for (double& v : scaled.samples) v *= 1.8;

  const Matrix a = extract_lld_map(w).map.values;
  const Matrix b = extract_lld_map(scaled).map.values;
  const std::vector<int> invariant_cols = {9,  38, 39, 40, 41, 43, 44, 51, 52, 53,
                                           54, 55, 56, 57, 58, 59, 60, 61, 62, 63, 64};
  for (std::size_t t = 0; t < a.rows(); ++t) {
    for (int c : invariant_cols) {
      REQUIRE(b.at(t, static_cast<std::size_t>(c)) ==
              doctest::Approx(a.at(t, static_cast<std::size_t>(c))).epsilon(1e-6));
    }
    // jitter column: both zero or both close
    REQUIRE(b.at(t, 2) == doctest::Approx(a.at(t, 2)).epsilon(1e-6));
    // rms scales exactly
    REQUIRE(b.at(t, 8) == doctest::Approx(1.8 * a.at(t, 8)).epsilon(1e-9));
  }
}

TEST_CASE("extract: arbitrary finite input produces only finite values") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Waveform w;
    w.sample_rate_hz = 8000;
    w.samples = oracle::white_noise(4000 + 700 * seed, 600 + seed, 0.9);
    // inject harsh segments: silence runs and clipping
    for (std::size_t i = 500; i < 900 && i < w.samples.size(); ++i) w.samples[i] = 0.0;
    for (std::size_t i = 1200; i < 1400 && i < w.samples.size(); ++i) w.samples[i] = 1.0;
    const ExtractionResult res = extract_lld_map(w);
    for (double v : res.map.values.data()) REQUIRE(std::isfinite(v));
  }
}
