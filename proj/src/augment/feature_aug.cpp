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

#include "ascene/augment/feature_aug.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ascene/error.hpp"

namespace ascene::augment {

void AugmentConfig::Validate() const {
  if (!(mixup_alpha > 0.0)) ThrowConfig("mixup_alpha must be positive");
  if (crop_len <= 0) ThrowConfig("crop_len must be positive");
  auto frac_ok = [](double f) { return f > 0.0 && f < 1.0; };
  if (!frac_ok(specaug_time_frac) || !frac_ok(specaug_freq_frac))
    ThrowConfig("spec-augment fractions must be in (0, 1)");
  if (pitch_semitone_range < 0.0)
    ThrowConfig("pitch_semitone_range must be non-negative");
  if (!(speed_lo > 0.0 && speed_lo <= speed_hi && speed_hi <= 2.0))
    ThrowConfig("speed range must lie within (0, 2]");
  if (noise_std < 0.0) ThrowConfig("noise_std must be non-negative");
  if (!(rt60_lo > 0.0 && rt60_lo <= rt60_hi))
    ThrowConfig("rt60 range must be positive and ordered");
  if (!(mix_weight_lo >= 0.0 && mix_weight_lo <= mix_weight_hi &&
        mix_weight_hi <= 1.0))
    ThrowConfig("mix weight range must lie within [0, 1]");
}

void LabeledBatch::Validate() const {
  if (batch < 1) ThrowData("batch must hold at least one item");
  if (tensors.size() != static_cast<std::size_t>(batch) * item_size())
    ThrowShape("batch tensor storage does not match dims");
  if (labels.size() != static_cast<std::size_t>(batch) * num_classes)
    ThrowShape("batch label storage does not match dims");
  for (int b = 0; b < batch; ++b) {
    double s = 0.0;
    for (float v : label(b)) s += v;
    if (std::abs(s - 1.0) > 1e-6)
      ThrowData("label row " + std::to_string(b) + " sums to " +
                std::to_string(s));
  }
}

LabeledBatch MakeBatch(std::span<const FeatureTensor> items,
                       std::span<const int> labels, int num_classes) {
  if (items.empty() || items.size() != labels.size())
    ThrowData("make_batch: need matching non-empty items and labels");
  LabeledBatch out;
  out.batch = static_cast<int>(items.size());
  out.frames = items[0].frames;
  out.bins = items[0].bins;
  out.channels = items[0].channels;
  out.num_classes = num_classes;
  out.tensors.reserve(out.batch * out.item_size());
  out.labels.assign(static_cast<std::size_t>(out.batch) * num_classes, 0.0f);
  for (int b = 0; b < out.batch; ++b) {
    const auto& t = items[b];
    if (t.frames != out.frames || t.bins != out.bins ||
        t.channels != out.channels)
      ThrowShape("make_batch: items differ in shape");
    if (labels[b] < 0 || labels[b] >= num_classes)
      ThrowData("make_batch: label out of range");
    out.tensors.insert(out.tensors.end(), t.data.begin(), t.data.end());
    out.label(b)[labels[b]] = 1.0f;
  }
  return out;
}

LabeledBatch MixupBatchWith(const LabeledBatch& batch, double lambda,
                            std::span<const int> perm) {
  if (perm.size() != static_cast<std::size_t>(batch.batch))
    ThrowShape("mixup: permutation length differs from batch size");
  LabeledBatch out = batch;
  const float lam = static_cast<float>(lambda);
  const float rest = static_cast<float>(1.0 - lambda);
  for (int b = 0; b < batch.batch; ++b) {
    const auto src = batch.item(b);
    const auto other = batch.item(perm[b]);
    auto dst = out.item(b);
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] = lam * src[i] + rest * other[i];
    const auto ls = batch.label(b);
    const auto lo = batch.label(perm[b]);
    auto ld = out.label(b);
    for (std::size_t k = 0; k < ld.size(); ++k)
      ld[k] = lam * ls[k] + rest * lo[k];
  }
  return out;
}

LabeledBatch MixupBatch(const LabeledBatch& batch, double alpha, Rng& rng) {
  if (batch.batch < 2) ThrowData("mixup needs a batch of at least 2 items");
  if (!(alpha > 0.0)) ThrowConfig("mixup alpha must be positive");
  const double lambda = SampleBeta(rng, alpha, alpha);
  std::vector<int> perm(static_cast<std::size_t>(batch.batch));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return MixupBatchWith(batch, lambda, perm);
}

FeatureTensor CropAt(const FeatureTensor& t, int offset, int crop_len) {
  if (crop_len <= 0 || crop_len > t.frames)
    ThrowData("crop length " + std::to_string(crop_len) +
              " invalid for " + std::to_string(t.frames) + " frames");
  if (offset < 0 || offset + crop_len > t.frames)
    ThrowData("crop offset out of range");
  FeatureTensor out(crop_len, t.bins, t.channels);
  const std::size_t row = static_cast<std::size_t>(t.bins) * t.channels;
  std::copy(t.data.begin() + offset * row,
            t.data.begin() + (offset + crop_len) * row, out.data.begin());
  return out;
}

FeatureTensor RandomCrop(const FeatureTensor& t, int crop_len, Rng& rng) {
  if (crop_len <= 0 || crop_len > t.frames)
    ThrowData("crop length " + std::to_string(crop_len) +
              " exceeds " + std::to_string(t.frames) + " frames");
  const int offset = static_cast<int>(UniformInt(rng, 0, t.frames - crop_len));
  return CropAt(t, offset, crop_len);
}

FeatureTensor SwapStereoGroups(const FeatureTensor& t) {
  if (t.channels != 6)
    ThrowData("channel confusion needs 6 channels, got " +
              std::to_string(t.channels));
  FeatureTensor out = t;
  for (std::size_t i = 0; i < t.data.size(); i += 6)
    for (int c = 0; c < 3; ++c) std::swap(out.data[i + c], out.data[i + c + 3]);
  return out;
}

FeatureTensor ChannelConfusion(const FeatureTensor& t, Rng& rng) {
  if (t.channels != 6)
    ThrowData("channel confusion needs 6 channels, got " +
              std::to_string(t.channels));
  const bool swap = std::bernoulli_distribution(0.5)(rng);
  return swap ? SwapStereoGroups(t) : t;
}

int MaskWidth(double frac, int dim) {
  return static_cast<int>(std::floor(frac * dim + 0.5));
}

SpecAugmentMasks DrawSpecAugmentMasks(int frames, int bins,
                                      const AugmentConfig& cfg, Rng& rng) {
  if (frames < 10 || bins < 10)
    ThrowData("spec-augment needs at least 10 frames and 10 bins");
  SpecAugmentMasks m;
  m.time_width = MaskWidth(cfg.specaug_time_frac, frames);
  m.freq_width = MaskWidth(cfg.specaug_freq_frac, bins);
  m.time_start = static_cast<int>(UniformInt(rng, 0, frames - m.time_width));
  m.freq_start = static_cast<int>(UniformInt(rng, 0, bins - m.freq_width));
  return m;
}

FeatureTensor ApplySpecAugmentMasks(const FeatureTensor& t,
                                    const SpecAugmentMasks& m) {
  FeatureTensor out = t;
  for (int f = 0; f < t.bins; ++f)
    for (int tt = 0; tt < t.frames; ++tt) {
      const bool in_time = tt >= m.time_start && tt < m.time_start + m.time_width;
      const bool in_freq = f >= m.freq_start && f < m.freq_start + m.freq_width;
      if (!in_time && !in_freq) continue;
      for (int c = 0; c < t.channels; ++c) out.at(tt, f, c) = 0.0f;
    }
  return out;
}

FeatureTensor SpecAugment(const FeatureTensor& t, const AugmentConfig& cfg,
                          Rng& rng) {
  return ApplySpecAugmentMasks(t, DrawSpecAugmentMasks(t.frames, t.bins, cfg, rng));
}

}  // namespace ascene::augment
