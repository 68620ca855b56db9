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

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ascene/augment/feature_aug.hpp"
#include "ascene/features/audio.hpp"
#include "ascene/features/spectro.hpp"
#include "ascene/util/rng.hpp"

namespace ascene::augment {

using features::AudioClip;
using features::SpectroConfig;

// ---- spectrum correction -------------------------------------------------

/// Mean STFT magnitude per frequency bin for one device.
struct SpectrumProfile {
  std::string device;
  std::vector<double> mean_magnitude;
};

inline constexpr double kProfileFloor = 1e-8;

/// Averages every frame of every clip (all channels) per device label.
/// Entries are floored at kProfileFloor so they stay strictly positive.
std::map<std::string, SpectrumProfile> FitSpectrumProfiles(
    std::span<const std::pair<std::string, const AudioClip*>> corpus,
    const SpectroConfig& cfg);

/// Mean of the profiles of every device except `target_device`.
std::vector<double> ReferenceSpectrum(
    const std::map<std::string, SpectrumProfile>& profiles,
    const std::string& target_device);

/// reference[f] / max(profile[f], kProfileFloor).
std::vector<double> CorrectionCoefficients(std::span<const double> reference,
                                           std::span<const double> profile);

/// Scales each STFT frame by `coeffs` (phase untouched) and resynthesizes
/// by overlap-add to the original length.
AudioClip SpectrumCorrect(const AudioClip& clip, std::span<const double> coeffs,
                          const SpectroConfig& cfg);

// ---- reverberation + dynamic range compression ----------------------------

/// Exponentially decaying white noise with a unit direct path; amplitude
/// falls by 60 dB after rt60 seconds.
std::vector<float> SyntheticRir(int sample_rate, double rt60, Rng& rng);

/// Linear convolution truncated to the length of `x` (FFT based).
std::vector<float> ConvolveTruncated(std::span<const float> x,
                                     std::span<const float> h);

struct CompressorParams {
  double threshold_db = -20.0;
  double ratio = 4.0;  // infinity for a limiter
  double attack_ms = 5.0;
  double release_ms = 100.0;
  double makeup_db = 0.0;
};

struct CompressorOutput {
  AudioClip audio;
  /// Per-sample output level in dB: smoothed detector level plus gain.
  std::vector<double> output_envelope_db;
};

/// Feed-forward compressor: dB-domain peak detector with attack/release
/// smoothing, hard-knee gain computer, channels linked.
CompressorOutput Compress(const AudioClip& clip, const CompressorParams& p);

/// Reverb (one RIR per channel) then compression then peak normalization
/// to the input peak.
AudioClip ReverbDrcWith(const AudioClip& clip,
                        std::span<const std::vector<float>> rirs,
                        const CompressorParams& p);

/// Draws RT60 uniformly from the configured range.
AudioClip ReverbDrc(const AudioClip& clip, const AugmentConfig& cfg,
                    const CompressorParams& p, Rng& rng);

// ---- pitch / speed / noise / mixing ---------------------------------------

/// Linear-interpolation resampling that reads the input at positions
/// i * step; output length round(len / step).
std::vector<float> ResampleLinear(std::span<const float> x, double step);

/// Phase-vocoder time stretch; rate > 1 shortens. Output length
/// round(len / rate).
std::vector<float> TimeStretch(std::span<const float> x, double rate);

AudioClip PitchShiftBy(const AudioClip& clip, double semitones);
AudioClip PitchShift(const AudioClip& clip, const AugmentConfig& cfg, Rng& rng);

/// Resamples by `ratio` then truncates or zero-pads the tail to the
/// original length.
AudioClip SpeedChangeBy(const AudioClip& clip, double ratio);
AudioClip SpeedChange(const AudioClip& clip, const AugmentConfig& cfg, Rng& rng);

AudioClip AddNoise(const AudioClip& clip, double noise_std, Rng& rng);

/// w * a + (1 - w) * b. Throws on length or rate mismatch.
AudioClip MixWith(const AudioClip& a, const AudioClip& b, double w);
AudioClip MixSameClass(const AudioClip& a, const AudioClip& b,
                       const AugmentConfig& cfg, Rng& rng);

double PeakAbs(const AudioClip& clip);

}  // namespace ascene::augment
