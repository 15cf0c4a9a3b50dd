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

#include "vbt/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "vbt/error.hpp"

namespace vbt {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

Waveform load_waveform(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open WAV file: " + path);
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw ValidationError("not a RIFF/WAVE file: " + path);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    std::uint32_t chunk_len = read_u32(bytes.data() + pos + 4);
    std::size_t body = pos + 8;
    if (body + chunk_len > bytes.size()) chunk_len = static_cast<std::uint32_t>(bytes.size() - body);
    if (std::memcmp(id, "fmt ", 4) == 0 && chunk_len >= 16) {
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible && chunk_len >= 26) {
        // first two bytes of the SubFormat GUID carry the real format tag
        format = read_u16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) throw ValidationError("missing fmt/data chunk: " + path);
  if (channels == 0 || rate == 0) throw ValidationError("malformed fmt chunk: " + path);
  if (format != kFormatPcm && format != kFormatFloat) {
    throw ValidationError("unsupported WAV encoding (only PCM int and float32): " + path);
  }
  const int bytes_per_sample = bits / 8;
  if (format == kFormatPcm && bits != 8 && bits != 16 && bits != 24) {
    throw ValidationError("unsupported PCM bit depth " + std::to_string(bits) + ": " + path);
  }
  if (format == kFormatFloat && bits != 32) {
    throw ValidationError("unsupported float bit depth " + std::to_string(bits) + ": " + path);
  }

  const std::size_t frame_bytes = static_cast<std::size_t>(bytes_per_sample) * channels;
  const std::size_t n = frame_bytes > 0 ? data_len / frame_bytes : 0;
  if (n == 0) throw ValidationError("zero-length audio: " + path);

  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* s = data + i * frame_bytes;  // channel 0
    double v = 0.0;
    if (format == kFormatFloat) {
      float f;
      std::memcpy(&f, s, 4);
      v = f;
    } else if (bits == 8) {
      v = (static_cast<int>(s[0]) - 128) / 128.0;
    } else if (bits == 16) {
      std::int16_t x = static_cast<std::int16_t>(s[0] | (s[1] << 8));
      v = x / 32768.0;
    } else {  // 24-bit
      std::int32_t x = s[0] | (s[1] << 8) | (s[2] << 16);
      if (x & 0x800000) x |= ~0xFFFFFF;
      v = x / 8388608.0;
    }
    if (!std::isfinite(v)) throw ValidationError("non-finite sample in " + path);
    w.samples[i] = std::clamp(v, -1.0, 1.0);
  }
  return w;
}

static void write_wav(const std::string& path, const Waveform& w, int channels,
                      bool as_float) {
  if (w.samples.empty() || w.sample_rate_hz <= 0) {
    throw ValidationError("refusing to write empty waveform: " + path);
  }
  const std::uint16_t bits = as_float ? 32 : 16;
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size() * block);

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, as_float ? kFormatFloat : kFormatPcm);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz) * block);
  put_u16(out, block);
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_len);
  for (double v : w.samples) {
    for (int c = 0; c < channels; ++c) {
      if (as_float) {
        float f = static_cast<float>(v);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        put_u32(out, u);
      } else {
        int x = static_cast<int>(std::lrint(std::clamp(v, -1.0, 1.0) * 32767.0));
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(x)));
      }
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ComputeError("cannot write WAV file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

void write_wav_pcm16(const std::string& path, const Waveform& w, int channels) {
  write_wav(path, w, channels, false);
}

void write_wav_float32(const std::string& path, const Waveform& w) {
  write_wav(path, w, 1, true);
}

Waveform resample_linear(const Waveform& w, int target_rate_hz) {
  if (target_rate_hz <= 0) throw ValidationError("target sample rate must be positive");
  if (w.sample_rate_hz == target_rate_hz || w.samples.empty()) return w;
  const double ratio = static_cast<double>(w.sample_rate_hz) / target_rate_hz;
  const std::size_t n_out = static_cast<std::size_t>(
      std::max(1.0, std::floor((w.samples.size() - 1) / ratio)) + 1);
  Waveform out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double x = i * ratio;
    const std::size_t k = std::min(static_cast<std::size_t>(x), w.samples.size() - 1);
    const std::size_t k1 = std::min(k + 1, w.samples.size() - 1);
    const double frac = x - static_cast<double>(k);
    out.samples[i] = w.samples[k] * (1.0 - frac) + w.samples[k1] * frac;
  }
  return out;
}

}  // namespace vbt
