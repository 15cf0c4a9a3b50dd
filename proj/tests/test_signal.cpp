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
#include <filesystem>

#include "oracles.hpp"
#include "vbt/dsp.hpp"
#include "vbt/error.hpp"
#include "vbt/wav.hpp"

using namespace vbt;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("wav: silence round trip keeps zeros and rate") {
  Waveform w;
  w.sample_rate_hz = 22050;
  w.samples.assign(22050, 0.0);
  const std::string path = tmp_path("vbt_silence.wav");
  write_wav_pcm16(path, w);
  const Waveform r = load_waveform(path);
  CHECK(r.sample_rate_hz == 22050);
  CHECK(r.samples.size() == 22050);
  for (double v : r.samples) CHECK(v == 0.0);
}

TEST_CASE("wav: 16-bit full-scale positive sample maps to 32767/32768") {
  // byte-level fixture: canonical header, one sample of 0x7FFF
  const std::string path = tmp_path("vbt_fullscale.wav");
  {
    std::string bytes;
    auto u32 = [&bytes](std::uint32_t v) {
      for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    auto u16 = [&bytes](std::uint16_t v) {
      bytes.push_back(static_cast<char>(v & 0xFF));
      bytes.push_back(static_cast<char>((v >> 8) & 0xFF));
    };
    bytes += "RIFF";
    u32(36 + 2);
    bytes += "WAVEfmt ";
    u32(16);
    u16(1);      // PCM
    u16(1);      // mono
    u32(8000);   // rate
    u32(16000);  // byte rate
    u16(2);      // block align
    u16(16);     // bits
    bytes += "data";
    u32(2);
    u16(0x7FFF);
    std::ofstream f(path, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  const Waveform r = load_waveform(path);
  REQUIRE(r.samples.size() == 1);
  CHECK(r.samples[0] == doctest::Approx(32767.0 / 32768.0).epsilon(1e-12));
}

TEST_CASE("wav: stereo file keeps channel 0, matching the byte-level oracle") {
  Waveform w;
  w.sample_rate_hz = 16000;
  w.samples = oracle::tone(300.0, 16000, 0.05);
  const std::string path = tmp_path("vbt_stereo.wav");
  write_wav_pcm16(path, w, /*channels=*/2);
  const Waveform r = load_waveform(path);
  const std::vector<double> expected = oracle::wav_channel0(path);
  REQUIRE(r.samples.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(r.samples[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
}

TEST_CASE("wav: float32 and 24-bit inputs decode") {
  Waveform w;
  w.sample_rate_hz = 22050;
  w.samples = oracle::tone(440.0, 22050, 0.01);
  const std::string path = tmp_path("vbt_float.wav");
  write_wav_float32(path, w);
  const Waveform r = load_waveform(path);
  REQUIRE(r.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    CHECK(r.samples[i] == doctest::Approx(w.samples[i]).epsilon(1e-6));
  }
}

TEST_CASE("wav: unreadable and malformed files are rejected") {
  CHECK_THROWS_AS(load_waveform(tmp_path("vbt_does_not_exist.wav")), ValidationError);
  const std::string path = tmp_path("vbt_garbage.wav");
  {
    std::ofstream f(path, std::ios::binary);
    f << "definitely not a wav file";
  }
  CHECK_THROWS_AS(load_waveform(path), ValidationError);
}

TEST_CASE("resample: linear interpolation halves the rate consistently") {
  Waveform w;
  w.sample_rate_hz = 44100;
  w.samples = oracle::tone(220.0, 44100, 0.1);
  const Waveform r = resample_linear(w, 22050);
  CHECK(r.sample_rate_hz == 22050);
  // every output sample must sit exactly on an input sample (ratio 2)
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    CHECK(r.samples[i] == doctest::Approx(w.samples[2 * i]).epsilon(1e-12));
  }
}

TEST_CASE("framing: 1 s at 22050 Hz gives 9 frames of 4410 samples") {
  Waveform w;
  w.sample_rate_hz = 22050;
  w.samples.assign(22050, 0.1);
  const FrameSet fs = frame_signal(w, 200.0, 100.0);
  CHECK(fs.n_frames() == 9);
  CHECK(fs.frame_len() == 4410);
}

TEST_CASE("framing: exactly one window gives one frame") {
  Waveform w;
  w.sample_rate_hz = 8000;
  w.samples.assign(1600, 0.5);
  const FrameSet fs = frame_signal(w, 200.0, 100.0);
  CHECK(fs.n_frames() == 1);
  CHECK_THROWS_AS(
      [] {
        Waveform s;
        s.sample_rate_hz = 8000;
        s.samples.assign(1599, 0.0);
        return frame_signal(s, 200.0, 100.0);
      }(),
      ValidationError);
}

TEST_CASE("framing: 3.25 s at 8 kHz matches the index-arithmetic oracle") {
  Waveform w;
  w.sample_rate_hz = 8000;
  w.samples = oracle::white_noise(static_cast<std::size_t>(3.25 * 8000), 11);
  const FrameSet fs = frame_signal(w, 200.0, 100.0);

  // loop-based slicing oracle
  const std::size_t frame_len = 1600, step = 800;
  std::size_t count = 0;
  for (std::size_t start = 0; start + frame_len <= w.samples.size(); start += step) ++count;
  REQUIRE(fs.n_frames() == count);
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t i = 0; i < frame_len; ++i) {
      REQUIRE(fs.frames.at(k, i) == w.samples[k * step + i]);
    }
  }
}

TEST_CASE("framing property: frame k reproduces samples [k*step, k*step+len)") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Waveform w;
    w.sample_rate_hz = 4000;
    w.samples = oracle::white_noise(3000, seed);
    const FrameSet fs = frame_signal(w, 150.0, 70.0);
    const std::size_t len = fs.frame_len(), step = fs.step_len();
    for (std::size_t k = 0; k < fs.n_frames(); ++k) {
      for (std::size_t i = 0; i < len; i += 37) {
        REQUIRE(fs.frames.at(k, i) == w.samples[k * step + i]);
      }
    }
  }
}

TEST_CASE("fft: all-zero frame gives all-zero magnitudes") {
  std::vector<double> frame(128, 0.0);
  const Spectrum s = magnitude_spectrum(frame, 8000);
  for (double m : s.magnitudes) CHECK(m == 0.0);
}

TEST_CASE("fft: sine at an exact bin dominates that bin") {
  const int fs = 8192;
  const std::size_t n = 512;
  std::vector<double> frame(n);
  const double f0 = 16.0 * fs / static_cast<double>(n);  // exactly bin 16
  for (std::size_t i = 0; i < n; ++i) frame[i] = std::sin(2.0 * M_PI * f0 * i / fs);
  const Spectrum s = magnitude_spectrum(frame, fs);
  std::size_t argmax = 0;
  for (std::size_t k = 1; k < s.magnitudes.size(); ++k) {
    if (s.magnitudes[k] > s.magnitudes[argmax]) argmax = k;
  }
  CHECK(argmax == 16);
  CHECK(s.magnitudes[16] > 10.0 * s.magnitudes[32]);
}

TEST_CASE("fft matches the naive DFT oracle within 1e-9 relative") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t n = 64 + 32 * seed;  // up to 224, n_fft up to 256
    const std::vector<double> frame = oracle::white_noise(n, 100 + seed, 1.0);
    const std::size_t n_fft = next_pow2(n);
    const Spectrum got = magnitude_spectrum(frame, 8000, n_fft);
    const std::vector<double> want = oracle::dft_magnitudes(frame, n_fft);
    REQUIRE(got.magnitudes.size() == want.size());
    double scale = 0.0;
    for (double v : want) scale = std::max(scale, std::abs(v));
    for (std::size_t k = 0; k < want.size(); ++k) {
      REQUIRE(std::abs(got.magnitudes[k] - want[k]) <= 1e-9 * scale);
    }
  }
}

TEST_CASE("fft: Parseval consistency for the windowed frame") {
  const std::vector<double> frame = oracle::white_noise(200, 42, 1.0);
  const std::size_t n_fft = next_pow2(frame.size());
  const Spectrum s = magnitude_spectrum(frame, 8000, n_fft);
  const std::vector<double> win = hamming_window(frame.size());
  double time_energy = 0.0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    time_energy += frame[i] * win[i] * frame[i] * win[i];
  }
  double freq_energy = s.magnitudes[0] * s.magnitudes[0] +
                       s.magnitudes[n_fft / 2] * s.magnitudes[n_fft / 2];
  for (std::size_t k = 1; k < n_fft / 2; ++k) {
    freq_energy += 2.0 * s.magnitudes[k] * s.magnitudes[k];
  }
  CHECK(freq_energy / static_cast<double>(n_fft) ==
        doctest::Approx(time_energy).epsilon(1e-9));
}

TEST_CASE("mel: all-zero spectrum is floored at log(eps) in every band") {
  Spectrum s;
  s.bin_width_hz = 8000.0 / 1024.0;
  s.magnitudes.assign(513, 0.0);
  const MelFilterbank mel(26, 20.0, 4000.0, 513, s.bin_width_hz);
  for (double v : mel.log_energies(s)) CHECK(v == doctest::Approx(std::log(1e-10)));
}

TEST_CASE("mel: tone at a band centre maximizes that band") {
  const double bin_width = 22050.0 / 8192.0;
  const std::size_t n_bins = 4097;
  const MelFilterbank mel(26, 20.0, 11025.0, n_bins, bin_width);
  for (std::size_t band : {3u, 10u, 20u}) {
    Spectrum s;
    s.bin_width_hz = bin_width;
    s.magnitudes.assign(n_bins, 0.0);
    const std::size_t centre_bin =
        static_cast<std::size_t>(std::lround(mel.center_hz(band) / bin_width));
    s.magnitudes[centre_bin] = 1.0;
    const std::vector<double> e = mel.energies(s);
    // direct filterbank-weight evaluation: band weights at the centre bin
    for (std::size_t b = 0; b < e.size(); ++b) {
      REQUIRE(e[b] == doctest::Approx(mel.weight(b, centre_bin)).epsilon(1e-12));
      if (b != band) REQUIRE(e[band] > e[b]);
    }
  }
}

TEST_CASE("mel: fmax <= fmin is rejected, repeated input is deterministic") {
  CHECK_THROWS_AS(MelFilterbank(26, 4000.0, 4000.0, 100, 10.0), ValidationError);
  Spectrum s;
  s.bin_width_hz = 10.0;
  s.magnitudes = oracle::white_noise(200, 5, 1.0);
  for (double& v : s.magnitudes) v = std::abs(v);
  const MelFilterbank mel(26, 20.0, 990.0, 200, 10.0);
  CHECK(mel.log_energies(s) == mel.log_energies(s));
}

namespace {

BandEnergyTrajectory make_traj(std::size_t frames, std::size_t bands, double fill) {
  BandEnergyTrajectory t;
  t.values = Matrix(frames, bands, fill);
  return t;
}

}  // namespace

TEST_CASE("rasta: constant trajectory converges to zero (DC rejection)") {
  // the 0.98 pole decays the start-up transient geometrically
  const BandEnergyTrajectory out = rasta_filter(make_traj(800, 3, 5.0));
  const std::size_t last = out.values.rows() - 1;
  for (std::size_t b = 0; b < 3; ++b) {
    CHECK(std::abs(out.values.at(last, b)) < 1e-4);
    CHECK(std::abs(out.values.at(last, b)) < std::abs(out.values.at(10, b)));
  }
}

TEST_CASE("rasta: impulse response equals the direct difference-equation recursion") {
  BandEnergyTrajectory t = make_traj(64, 1, 0.0);
  t.values.at(0, 0) = 1.0;
  const BandEnergyTrajectory out = rasta_filter(t);

  // direct form recursion oracle
  const double num[5] = {0.2, 0.1, 0.0, -0.1, -0.2};
  std::vector<double> y(64, 0.0);
  for (std::size_t i = 0; i < 64; ++i) {
    double acc = i < 5 ? num[i] : 0.0;  // x is the unit impulse
    if (i > 0) acc += 0.98 * y[i - 1];
    y[i] = acc;
  }
  for (std::size_t i = 0; i < 64; ++i) {
    REQUIRE(out.values.at(i, 0) == doctest::Approx(y[i]).epsilon(1e-12));
  }
}

TEST_CASE("rasta: linearity to 1e-12") {
  BandEnergyTrajectory t = make_traj(50, 2, 0.0);
  vbt::Rng rng(3);
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t b = 0; b < 2; ++b) t.values.at(i, b) = rng.normal();
  }
  BandEnergyTrajectory scaled = t;
  for (double& v : scaled.values.data()) v *= 3.5;
  const BandEnergyTrajectory a = rasta_filter(scaled);
  const BandEnergyTrajectory b = rasta_filter(t);
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      REQUIRE(a.values.at(i, c) == doctest::Approx(3.5 * b.values.at(i, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("rasta: time invariance on shifted impulses") {
  BandEnergyTrajectory t1 = make_traj(80, 1, 0.0);
  BandEnergyTrajectory t2 = make_traj(80, 1, 0.0);
  t1.values.at(0, 0) = 1.0;
  t2.values.at(7, 0) = 1.0;
  const BandEnergyTrajectory y1 = rasta_filter(t1);
  const BandEnergyTrajectory y2 = rasta_filter(t2);
  for (std::size_t i = 0; i + 7 < 80; ++i) {
    REQUIRE(y2.values.at(i + 7, 0) == doctest::Approx(y1.values.at(i, 0)).epsilon(1e-12));
  }
}

TEST_CASE("pitch: pure tones from 60 to 450 Hz within 2%") {
  const int fs = 22050;
  for (double f0 : {60.0, 82.0, 110.0, 155.0, 220.0, 290.0, 370.0, 450.0}) {
    const std::vector<double> frame = oracle::tone(f0, fs, 0.2);
    const PitchEstimate p = autocorrelation_pitch(frame, fs);
    INFO("f0 = " << f0 << " got " << p.f0_hz);
    REQUIRE(p.voicing_prob > 0.9);
    REQUIRE(std::abs(p.f0_hz - f0) / f0 < 0.02);
  }
}

TEST_CASE("pitch: white noise stays below the voicing threshold") {
  const int fs = 22050;
  int voiced = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::vector<double> frame = oracle::white_noise(4410, 900 + seed);
    const PitchEstimate p = autocorrelation_pitch(frame, fs);
    if (p.f0_hz != 0.0) ++voiced;
  }
  CHECK(voiced == 0);
}

TEST_CASE("pitch: all-zero frame gives f0 = 0, voicing 0") {
  std::vector<double> frame(4410, 0.0);
  const PitchEstimate p = autocorrelation_pitch(frame, 22050);
  CHECK(p.f0_hz == 0.0);
  CHECK(p.voicing_prob == 0.0);
}

TEST_CASE("pitch: frame shorter than the maximum lag is rejected") {
  std::vector<double> frame(100, 0.1);
  CHECK_THROWS_AS(autocorrelation_pitch(frame, 22050), ValidationError);
}

TEST_CASE("cepstrum: all-zero frame has c0 = log(eps), rest 0") {
  std::vector<double> frame(128, 0.0);
  const std::vector<double> c = real_cepstrum(frame, 8000);
  CHECK(c[0] == doctest::Approx(std::log(1e-10)).epsilon(1e-12));
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(std::abs(c[i]) < 1e-9);
}

TEST_CASE("cepstrum: pulse train peaks at its period quefrency") {
  const std::size_t period = 50;
  const std::vector<double> frame = oracle::pulse_train(1024, period);
  const std::vector<double> c = real_cepstrum(frame, 8000);
  std::size_t argmax = 20;  // search above the low-quefrency envelope
  for (std::size_t q = 20; q < 200; ++q) {
    if (c[q] > c[argmax]) argmax = q;
  }
  CHECK(argmax == period);
}

TEST_CASE("cepstrum: identical frames give identical cepstra") {
  const std::vector<double> frame = oracle::white_noise(256, 77);
  CHECK(real_cepstrum(frame, 8000) == real_cepstrum(frame, 8000));
}
