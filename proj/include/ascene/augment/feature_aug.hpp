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

#include <span>
#include <vector>

#include "ascene/features/feature_tensor.hpp"
#include "ascene/util/rng.hpp"

namespace ascene::augment {

using features::FeatureTensor;

struct AugmentConfig {
  double mixup_alpha = 0.4;
  int crop_len = 400;  // frames
  double specaug_time_frac = 0.10;
  double specaug_freq_frac = 0.10;
  double pitch_semitone_range = 2.0;  // uniform on [-r, r]
  double speed_lo = 0.9;
  double speed_hi = 1.1;
  double noise_std = 0.003;
  double rt60_lo = 0.1;  // seconds
  double rt60_hi = 0.6;
  double mix_weight_lo = 0.4;
  double mix_weight_hi = 0.6;
  std::uint64_t rng_seed = 0;

  void Validate() const;
};

/// B x T x F x C tensors plus B x K soft labels, both row-major.
struct LabeledBatch {
  int batch = 0;
  int frames = 0;
  int bins = 0;
  int channels = 0;
  int num_classes = 0;
  std::vector<float> tensors;
  std::vector<float> labels;

  std::size_t item_size() const {
    return static_cast<std::size_t>(frames) * bins * channels;
  }
  std::span<float> item(int b) {
    return {tensors.data() + b * item_size(), item_size()};
  }
  std::span<const float> item(int b) const {
    return {tensors.data() + b * item_size(), item_size()};
  }
  std::span<float> label(int b) {
    return {labels.data() + static_cast<std::size_t>(b) * num_classes,
            static_cast<std::size_t>(num_classes)};
  }
  std::span<const float> label(int b) const {
    return {labels.data() + static_cast<std::size_t>(b) * num_classes,
            static_cast<std::size_t>(num_classes)};
  }

  /// Shapes consistent, B >= 1, label rows sum to 1 +- 1e-6.
  void Validate() const;
};

/// Stacks equally shaped tensors with one-hot labels.
LabeledBatch MakeBatch(std::span<const FeatureTensor> items,
                       std::span<const int> labels, int num_classes);

/// out = lambda * batch + (1 - lambda) * batch[perm], tensors and labels.
LabeledBatch MixupBatchWith(const LabeledBatch& batch, double lambda,
                            std::span<const int> perm);

/// Draws lambda ~ Beta(alpha, alpha) once and a random permutation.
/// Throws for B < 2.
LabeledBatch MixupBatch(const LabeledBatch& batch, double alpha, Rng& rng);

FeatureTensor CropAt(const FeatureTensor& t, int offset, int crop_len);

/// Contiguous time window with offset uniform on [0, T - crop_len].
FeatureTensor RandomCrop(const FeatureTensor& t, int crop_len, Rng& rng);

/// Exchanges channel groups [0,1,2] and [3,4,5]. Requires C == 6.
FeatureTensor SwapStereoGroups(const FeatureTensor& t);

/// With probability 1/2 swaps the stereo groups, otherwise identity.
FeatureTensor ChannelConfusion(const FeatureTensor& t, Rng& rng);

struct SpecAugmentMasks {
  int time_start = 0;
  int time_width = 0;
  int freq_start = 0;
  int freq_width = 0;
};

/// floor(frac * dim + 0.5)
int MaskWidth(double frac, int dim);

SpecAugmentMasks DrawSpecAugmentMasks(int frames, int bins,
                                      const AugmentConfig& cfg, Rng& rng);

/// Zeroes one time stripe and one frequency stripe across all channels.
FeatureTensor ApplySpecAugmentMasks(const FeatureTensor& t,
                                    const SpecAugmentMasks& m);

FeatureTensor SpecAugment(const FeatureTensor& t, const AugmentConfig& cfg,
                          Rng& rng);

}  // namespace ascene::augment
