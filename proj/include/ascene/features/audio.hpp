// Copyright (c) 2026 The ascene Authors. All Rights Reserved.
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

#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace ascene::features {

/// Multi-channel waveform. Samples are float in [-1, 1], one vector per
/// channel, all channels the same length.
struct AudioClip {
  std::vector<std::vector<float>> channels;
  int sample_rate = 0;

  int num_channels() const { return static_cast<int>(channels.size()); }
  std::size_t num_samples() const {
    return channels.empty() ? 0 : channels.front().size();
  }

  /// Throws kData if the clip violates the AudioClip invariants
  /// (1 or 2 equal-length channels, positive rate, finite samples, non-empty).
  void Validate() const;

  static AudioClip Mono(std::vector<float> samples, int sample_rate);
};

enum class WavEncoding { kPcm16, kFloat32 };

/// Reads a RIFF WAV file (PCM16 or IEEE float32, 1-2 channels).
/// Failures carry ErrorCode::kFileNotFound, kMalformedHeader or
/// kUnsupportedEncoding.
AudioClip LoadWav(const std::filesystem::path& path);

void SaveWav(const std::filesystem::path& path, const AudioClip& clip,
             WavEncoding encoding = WavEncoding::kPcm16);

/// Averages channels into one.
AudioClip Downmix(const AudioClip& clip);

}  // namespace ascene::features
