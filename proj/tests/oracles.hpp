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
//
// Test-only oracles: independent reference computations the implementation is
// checked against. Everything here is written from definitions and must not
// call the code paths under test.

#ifndef VBT_TESTS_ORACLES_HPP_
#define VBT_TESTS_ORACLES_HPP_

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vbt/rng.hpp"

namespace oracle {

// --- signal fixtures ---------------------------------------------------------

inline std::vector<double> tone(double freq_hz, int fs, double seconds, double amp = 0.8) {
  const std::size_t n = static_cast<std::size_t>(seconds * fs);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / fs);
  }
  return x;
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double amp = 0.5) {
  vbt::Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = amp * (2.0 * rng.uniform() - 1.0);
  return x;
}

inline std::vector<double> pulse_train(std::size_t n, std::size_t period, double amp = 0.9) {
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; i += period) x[i] = amp;
  return x;
}

// --- naive DFT ----------------------------------------------------------------

// One-sided magnitudes of the Hamming-windowed, zero-padded frame, by direct
// O(n^2) summation of the DFT definition.
inline std::vector<double> dft_magnitudes(std::span<const double> frame, std::size_t n_fft) {
  std::vector<double> windowed(n_fft, 0.0);
  const std::size_t n = frame.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double w =
        n >= 2 ? 0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                        static_cast<double>(n - 1))
               : 1.0;
    windowed[i] = frame[i] * w;
  }
  std::vector<double> mags(n_fft / 2 + 1);
  for (std::size_t k = 0; k <= n_fft / 2; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n_fft; ++t) {
      const double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) /
                         static_cast<double>(n_fft);
      acc += windowed[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    mags[k] = std::abs(acc);
  }
  return mags;
}

// --- statistics ----------------------------------------------------------------

inline double mean(std::span<const double> xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

// population central moment of given order
inline double central_moment(std::span<const double> xs, int order) {
  const double m = mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += std::pow(x - m, order);
  return acc / static_cast<double>(xs.size());
}

// Student-t density
inline double t_density(double x, double dof) {
  const double c = std::exp(std::lgamma((dof + 1.0) / 2.0) - std::lgamma(dof / 2.0)) /
                   std::sqrt(dof * M_PI);
  return c * std::pow(1.0 + x * x / dof, -(dof + 1.0) / 2.0);
}

inline double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson(double a, double b, double fa, double fm, double fb, double eps,
                               double whole, double dof, int depth) {
  const double m = (a + b) / 2.0;
  const double lm = (a + m) / 2.0, rm = (m + b) / 2.0;
  const double flm = t_density(lm, dof), frm = t_density(rm, dof);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(a, m, fa, flm, fm, eps / 2.0, left, dof, depth - 1) +
         adaptive_simpson(m, b, fm, frm, fb, eps / 2.0, right, dof, depth - 1);
}

// two-sided p-value by adaptive quadrature of the central mass
inline double t_pvalue_quadrature(double t, double dof) {
  const double a = -std::abs(t), b = std::abs(t);
  if (a == b) return 1.0;
  const double fa = t_density(a, dof), fb = t_density(b, dof);
  const double fm = t_density(0.0, dof);
  const double whole = simpson(a, b, fa, fm, fb);
  const double central =
      adaptive_simpson(a, b, fa, fm, fb, 1e-12, whole, dof, 40);
  return 1.0 - central;
}

// --- WAV byte-level decoder ------------------------------------------------------

// Minimal independent decoder for files produced by the project's canonical
// writer (44-byte header). Returns channel 0 scaled like the library does.
inline std::vector<double> wav_channel0(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("oracle: cannot open " + path);
  std::vector<unsigned char> b{std::istreambuf_iterator<char>(f),
                               std::istreambuf_iterator<char>()};
  if (b.size() < 44) throw std::runtime_error("oracle: short file");
  auto u16 = [&](std::size_t o) { return static_cast<unsigned>(b[o]) | (b[o + 1] << 8); };
  auto u32 = [&](std::size_t o) {
    return static_cast<std::uint32_t>(b[o]) | (b[o + 1] << 8) | (b[o + 2] << 16) |
           (static_cast<std::uint32_t>(b[o + 3]) << 24);
  };
  const unsigned channels = u16(22);
  const unsigned bits = u16(34);
  const std::uint32_t data_len = u32(40);
  const std::size_t frame_bytes = channels * bits / 8;
  const std::size_t n = data_len / frame_bytes;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t o = 44 + i * frame_bytes;
    const std::int16_t v = static_cast<std::int16_t>(u16(o));
    out[i] = v / 32768.0;
  }
  return out;
}

// --- rank statistics ---------------------------------------------------------------

inline std::vector<double> ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] < xs[b];
  });
  std::vector<double> r(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) r[order[i]] = static_cast<double>(i + 1);
  return r;
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double ma = mean(ra), mb = mean(rb);
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace oracle

#endif  // VBT_TESTS_ORACLES_HPP_
