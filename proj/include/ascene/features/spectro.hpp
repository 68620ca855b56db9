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

#include <complex>
#include <span>
#include <vector>

#include "ascene/features/audio.hpp"
#include "ascene/features/feature_tensor.hpp"

namespace ascene::features {

/// Row-major dense matrix of doubles (rows = time frames unless noted).
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  std::span<double> row(int r) {
    return {data.data() + static_cast<std::size_t>(r) * cols,
            static_cast<std::size_t>(cols)};
  }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols,
            static_cast<std::size_t>(cols)};
  }
};

struct SpectroConfig {
  int n_fft = 2048;
  int win_length = 2048;
  int hop = 1024;
  int n_mels = 128;
  double fmin = 0.0;
  double fmax = 0.0;  // <= 0 means Nyquist
  double log_floor = 1e-10;
  bool slaney_norm = true;  // area-normalize each mel triangle

  void Validate() const;
  double ResolvedFmax(int sample_rate) const {
    return fmax > 0.0 ? fmax : sample_rate / 2.0;
  }
};

/// Frame count of a centered STFT: floor(len / hop) + 1.
int NumFrames(std::size_t num_samples, int hop);

/// Periodic Hann window of win_length, zero-padded (centered) to n_fft.
std::vector<double> HannWindow(int win_length, int n_fft);

/// Complex STFT of one channel with n_fft/2 reflection padding on both
/// ends. Result is frames x (n_fft/2 + 1).
std::vector<std::vector<std::complex<double>>> Stft(
    std::span<const float> samples, const SpectroConfig& cfg);

/// Magnitude of Stft(); values >= 0.
Matrix StftMagnitude(std::span<const float> samples, const SpectroConfig& cfg);

/// Inverse of Stft() by weighted overlap-add with window-square
/// normalization. `length` is the number of output samples.
std::vector<float> Istft(
    const std::vector<std::vector<std::complex<double>>>& frames,
    const SpectroConfig& cfg, std::size_t length);

/// HTK mel scale: 2595 * log10(1 + f / 700).
double HzToMel(double hz);
double MelToHz(double mel);

/// n_mels x (n_fft/2 + 1) triangular filterbank with corners equally
/// spaced on the HTK mel scale. Throws if any filter is empty.
Matrix MelFilterbank(const SpectroConfig& cfg, int sample_rate);

/// log(bank * mag^2 + log_floor); frames x n_mels.
Matrix LogMel(const Matrix& magnitude, const Matrix& bank, double log_floor);

/// Regression delta with half-width 2, valid region only:
/// out[t] = (x[t+1] - x[t-1] + 2 (x[t+2] - x[t-2])) / 10 for t in [2, T-2).
/// Output has T - 4 rows.
Matrix Deltas(const Matrix& x);

/// Stacks [static, delta, delta-delta] aligned on the delta-delta range.
/// One entry in `statics` per audio channel; output has 3 * statics.size()
/// channels and T - 8 frames.
FeatureTensor AssembleTensor(std::span<const Matrix> statics);

/// Whole pipeline: per audio channel STFT -> log-mel -> assemble.
/// With `downmix`, stereo input is averaged to mono first.
FeatureTensor ExtractFeatures(const AudioClip& clip, const SpectroConfig& cfg,
                              bool downmix = false);

}  // namespace ascene::features
