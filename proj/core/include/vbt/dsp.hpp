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

#ifndef VBT_DSP_HPP_
#define VBT_DSP_HPP_

#include <complex>
#include <span>
#include <vector>

#include "vbt/wav.hpp"

namespace vbt {

// Log-of-energy floor used everywhere a log of an energy-like value is taken.
inline constexpr double kLogFloor = 1e-10;

// Row-major matrix of doubles; rows() x cols() with flat storage.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::vector<double> col(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, c);
    return out;
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// Frames cut from a waveform (contiguous strided copies, trailing partial
// frame discarded).
struct FrameSet {
  Matrix frames;  // n_frames x frame_len
  double window_ms = 200.0;
  double step_ms = 100.0;
  int sample_rate_hz = 0;

  std::size_t frame_len() const { return frames.cols(); }
  std::size_t n_frames() const { return frames.rows(); }
  std::size_t step_len() const;
};

FrameSet frame_signal(const Waveform& w, double window_ms = 200.0,
                      double step_ms = 100.0);

// One-sided magnitude spectrum of a Hamming-windowed, zero-padded frame.
struct Spectrum {
  std::vector<double> magnitudes;  // n_fft/2 + 1 bins
  double bin_width_hz = 0.0;

  double freq(std::size_t bin) const { return bin_width_hz * static_cast<double>(bin); }
};

std::size_t next_pow2(std::size_t n);
std::vector<double> hamming_window(std::size_t n);

// In-place radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& x, bool inverse = false);

// n_fft = 0 picks the smallest power of two >= frame length.
Spectrum magnitude_spectrum(std::span<const double> frame, int sample_rate_hz,
                            std::size_t n_fft = 0);

// Triangular mel filterbank with unit-peak filters.
class MelFilterbank {
 public:
  MelFilterbank(std::size_t n_bands, double fmin_hz, double fmax_hz,
                std::size_t n_fft_bins, double bin_width_hz);

  // Log (natural) of filter-weighted magnitude sums, floored at kLogFloor.
  std::vector<double> log_energies(const Spectrum& spec) const;
  // Raw filter-weighted magnitude sums.
  std::vector<double> energies(const Spectrum& spec) const;

  std::size_t n_bands() const { return weights_.rows(); }
  double center_hz(std::size_t band) const { return centers_hz_[band]; }
  double weight(std::size_t band, std::size_t bin) const { return weights_.at(band, bin); }

  static double hz_to_mel(double hz);
  static double mel_to_hz(double mel);

 private:
  Matrix weights_;  // n_bands x n_bins
  std::vector<double> centers_hz_;
};

// Per-frame log band energies, typically mel bands over the frame sequence.
struct BandEnergyTrajectory {
  Matrix values;  // n_frames x n_bands
  std::vector<double> band_edges_hz;
};

// Band-pass temporal filter applied independently per band along the frame
// axis: numerator [0.2, 0.1, 0, -0.1, -0.2], single pole 0.98, zero initial
// state. Rejects DC (slow channel drift) and emphasises speech-rate
// modulations.
BandEnergyTrajectory rasta_filter(const BandEnergyTrajectory& traj);

struct PitchEstimate {
  double f0_hz = 0.0;        // 0 when unvoiced
  double voicing_prob = 0.0; // peak normalized autocorrelation in [0, 1]
  int peak_lag = 0;          // integer lag of the retained peak (0 if none)
};

// Normalized-autocorrelation pitch with parabolic peak refinement; f0 is
// zeroed when voicing_prob falls below `voicing_threshold`.
PitchEstimate autocorrelation_pitch(std::span<const double> frame,
                                    int sample_rate_hz, double fmin_hz = 50.0,
                                    double fmax_hz = 500.0,
                                    double voicing_threshold = 0.45);

// Real cepstrum: inverse FFT of floored log magnitudes; length n_fft.
std::vector<double> real_cepstrum(std::span<const double> frame,
                                  int sample_rate_hz, std::size_t n_fft = 0);

}  // namespace vbt

#endif  // VBT_DSP_HPP_
