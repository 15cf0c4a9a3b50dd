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

#ifndef VBT_WAV_HPP_
#define VBT_WAV_HPP_

#include <string>
#include <vector>

namespace vbt {

// Mono audio signal with amplitudes in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 0;

  double duration_s() const {
    return sample_rate_hz > 0
               ? static_cast<double>(samples.size()) / sample_rate_hz
               : 0.0;
  }
};

// Reads a PCM WAV file (8/16/24-bit integer or 32-bit float). Multi-channel
// input keeps channel 0. Integer samples are scaled by the full-scale
// magnitude of the negative range (e.g. 16-bit: x / 32768).
// Throws ValidationError on unreadable, unsupported or zero-length files.
Waveform load_waveform(const std::string& path);

// Writes 16-bit PCM. `channels` interleaved copies of the same signal are
// emitted when channels > 1 (test fixtures need stereo files).
void write_wav_pcm16(const std::string& path, const Waveform& w,
                     int channels = 1);

// Writes IEEE float32 WAV.
void write_wav_float32(const std::string& path, const Waveform& w);

// Linear-interpolation resampling. Returns the input unchanged when the
// rates already match.
Waveform resample_linear(const Waveform& w, int target_rate_hz);

}  // namespace vbt

#endif  // VBT_WAV_HPP_
