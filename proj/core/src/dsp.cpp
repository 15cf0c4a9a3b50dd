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

#include "vbt/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vbt/error.hpp"

namespace vbt {

std::size_t FrameSet::step_len() const {
  return static_cast<std::size_t>(std::lround(step_ms * sample_rate_hz / 1000.0));
}

FrameSet frame_signal(const Waveform& w, double window_ms, double step_ms) {
  if (w.sample_rate_hz <= 0) throw ValidationError("waveform has no sample rate");
  if (window_ms <= 0 || step_ms <= 0) throw ValidationError("window/step must be positive");
  const std::size_t frame_len =
      static_cast<std::size_t>(std::lround(window_ms * w.sample_rate_hz / 1000.0));
  const std::size_t step_len =
      static_cast<std::size_t>(std::lround(step_ms * w.sample_rate_hz / 1000.0));
  if (frame_len == 0 || step_len == 0) throw ValidationError("window/step shorter than one sample");
  if (w.samples.size() < frame_len) {
    throw ValidationError("waveform shorter than one analysis window");
  }
  const std::size_t n_frames = (w.samples.size() - frame_len) / step_len + 1;
  FrameSet fs;
  fs.window_ms = window_ms;
  fs.step_ms = step_ms;
  fs.sample_rate_hz = w.sample_rate_hz;
  fs.frames = Matrix(n_frames, frame_len);
  for (std::size_t k = 0; k < n_frames; ++k) {
    const double* src = w.samples.data() + k * step_len;
    std::copy(src, src + frame_len, fs.frames.row(k).begin());
  }
  return fs;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(n - 1));
  }
  return w;
}

void fft_radix2(std::vector<std::complex<double>>& x, bool inverse) {
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0) throw ComputeError("FFT size must be a power of two");

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& v : x) v /= static_cast<double>(n);
  }
}

Spectrum magnitude_spectrum(std::span<const double> frame, int sample_rate_hz,
                            std::size_t n_fft) {
  if (frame.empty()) throw ValidationError("empty frame");
  if (n_fft == 0) n_fft = next_pow2(frame.size());
  if (n_fft < frame.size()) throw ValidationError("n_fft smaller than the frame");

  const std::vector<double> win = hamming_window(frame.size());
  std::vector<std::complex<double>> buf(n_fft, {0.0, 0.0});
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i] * win[i];
  fft_radix2(buf);

  Spectrum spec;
  spec.bin_width_hz = static_cast<double>(sample_rate_hz) / static_cast<double>(n_fft);
  spec.magnitudes.resize(n_fft / 2 + 1);
  for (std::size_t k = 0; k <= n_fft / 2; ++k) spec.magnitudes[k] = std::abs(buf[k]);
  return spec;
}

double MelFilterbank::hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelFilterbank::mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(std::size_t n_bands, double fmin_hz, double fmax_hz,
                             std::size_t n_fft_bins, double bin_width_hz) {
  if (fmax_hz <= fmin_hz) throw ValidationError("mel filterbank needs fmax > fmin");
  if (n_bands == 0 || n_fft_bins == 0) throw ValidationError("empty mel filterbank");

  const double mel_lo = hz_to_mel(fmin_hz);
  const double mel_hi = hz_to_mel(fmax_hz);
  std::vector<double> edges(n_bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_bands + 1));
  }
  centers_hz_.assign(edges.begin() + 1, edges.end() - 1);

  weights_ = Matrix(n_bands, n_fft_bins);
  for (std::size_t b = 0; b < n_bands; ++b) {
    const double lo = edges[b], c = edges[b + 1], hi = edges[b + 2];
    for (std::size_t k = 0; k < n_fft_bins; ++k) {
      const double f = bin_width_hz * static_cast<double>(k);
      double w = 0.0;
      if (f > lo && f < c) {
        w = (f - lo) / (c - lo);
      } else if (f == c) {
        w = 1.0;
      } else if (f > c && f < hi) {
        w = (hi - f) / (hi - c);
      }
      weights_.at(b, k) = w;
    }
  }
}

std::vector<double> MelFilterbank::energies(const Spectrum& spec) const {
  if (spec.magnitudes.size() != weights_.cols()) {
    throw ValidationError("spectrum length does not match the filterbank");
  }
  std::vector<double> out(weights_.rows(), 0.0);
  for (std::size_t b = 0; b < weights_.rows(); ++b) {
    double acc = 0.0;
    const auto row = weights_.row(b);
    for (std::size_t k = 0; k < row.size(); ++k) acc += row[k] * spec.magnitudes[k];
    out[b] = acc;
  }
  return out;
}

std::vector<double> MelFilterbank::log_energies(const Spectrum& spec) const {
  std::vector<double> out = energies(spec);
  for (double& v : out) v = std::log(std::max(v, kLogFloor));
  return out;
}

BandEnergyTrajectory rasta_filter(const BandEnergyTrajectory& traj) {
  const std::size_t n_frames = traj.values.rows();
  const std::size_t n_bands = traj.values.cols();
  if (n_frames == 0) throw ValidationError("empty band trajectory");

  static constexpr double kNum[5] = {0.2, 0.1, 0.0, -0.1, -0.2};
  static constexpr double kPole = 0.98;

  BandEnergyTrajectory out;
  out.band_edges_hz = traj.band_edges_hz;
  out.values = Matrix(n_frames, n_bands);
  for (std::size_t b = 0; b < n_bands; ++b) {
    double y_prev = 0.0;
    for (std::size_t t = 0; t < n_frames; ++t) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 5; ++k) {
        if (t >= k) acc += kNum[k] * traj.values.at(t - k, b);
      }
      const double y = acc + kPole * y_prev;
      out.values.at(t, b) = y;
      y_prev = y;
    }
  }
  return out;
}

PitchEstimate autocorrelation_pitch(std::span<const double> frame, int sample_rate_hz,
                                    double fmin_hz, double fmax_hz,
                                    double voicing_threshold) {
  if (fmax_hz <= fmin_hz || fmin_hz <= 0) throw ValidationError("bad pitch search range");
  const int lag_min = std::max(1, static_cast<int>(std::ceil(sample_rate_hz / fmax_hz)));
  const int lag_max = static_cast<int>(std::floor(sample_rate_hz / fmin_hz));
  const int n = static_cast<int>(frame.size());
  if (n <= lag_max) throw ValidationError("frame shorter than the maximum pitch lag");

  PitchEstimate est;
  double frame_energy = 0.0;
  for (double v : frame) frame_energy += v * v;
  if (frame_energy <= 0.0) return est;  // silence: f0 = 0, voicing 0

  // normalized autocorrelation over the lag search range
  std::vector<double> r(static_cast<std::size_t>(lag_max) + 1, 0.0);
  for (int lag = lag_min; lag <= lag_max; ++lag) {
    double num = 0.0, e0 = 0.0, e1 = 0.0;
    for (int i = 0; i + lag < n; ++i) {
      num += frame[i] * frame[i + lag];
      e0 += frame[i] * frame[i];
      e1 += frame[i + lag] * frame[i + lag];
    }
    const double denom = std::sqrt(e0 * e1);
    r[lag] = denom > 0.0 ? num / denom : 0.0;
  }

  double r_max = 0.0;
  for (int lag = lag_min; lag <= lag_max; ++lag) r_max = std::max(r_max, r[lag]);
  if (r_max <= 0.0) return est;

  // smallest lag whose local peak is within 1% of the global maximum;
  // avoids halving errors from equal-height peaks at period multiples
  int peak = 0;
  for (int lag = lag_min; lag <= lag_max; ++lag) {
    const bool local_max = (lag == lag_min || r[lag] >= r[lag - 1]) &&
                           (lag == lag_max || r[lag] >= r[lag + 1]);
    if (local_max && r[lag] >= 0.99 * r_max) {
      peak = lag;
      break;
    }
  }
  if (peak == 0) return est;

  est.peak_lag = peak;
  est.voicing_prob = std::clamp(r[peak], 0.0, 1.0);

  // parabolic refinement of the peak position
  double lag_refined = static_cast<double>(peak);
  if (peak > lag_min && peak < lag_max) {
    const double a = r[peak - 1], b = r[peak], c = r[peak + 1];
    const double denom = a - 2.0 * b + c;
    if (std::abs(denom) > 1e-30) {
      const double delta = 0.5 * (a - c) / denom;
      if (std::abs(delta) <= 1.0) lag_refined += delta;
    }
  }

  if (est.voicing_prob >= voicing_threshold) {
    est.f0_hz = static_cast<double>(sample_rate_hz) / lag_refined;
  }
  return est;
}

std::vector<double> real_cepstrum(std::span<const double> frame, int sample_rate_hz,
                                  std::size_t n_fft) {
  if (frame.empty()) throw ValidationError("empty frame");
  if (n_fft == 0) n_fft = next_pow2(frame.size());
  const Spectrum spec = magnitude_spectrum(frame, sample_rate_hz, n_fft);

  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t k = 0; k <= n_fft / 2; ++k) {
    const double lv = std::log(std::max(spec.magnitudes[k], kLogFloor));
    buf[k] = lv;
    if (k > 0 && k < n_fft / 2) buf[n_fft - k] = lv;  // even symmetry
  }
  fft_radix2(buf, /*inverse=*/true);

  std::vector<double> ceps(n_fft);
  for (std::size_t i = 0; i < n_fft; ++i) ceps[i] = buf[i].real();
  return ceps;
}

}  // namespace vbt
