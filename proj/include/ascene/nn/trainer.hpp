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

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ascene/augment/feature_aug.hpp"
#include "ascene/features/feature_tensor.hpp"
#include "ascene/nn/network.hpp"
#include "ascene/nn/optim.hpp"
#include "ascene/scores.hpp"

namespace ascene::nn {

using features::FeatureTensor;

/// In-memory training set: feature maps with integer class labels.
struct Dataset {
  std::vector<FeatureTensor> items;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return items.size(); }
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  int first_cycle_epochs = 10;  // used when schedule.first_cycle_len == 0
  ScheduleConfig schedule;
  augment::AugmentConfig aug;
  bool mixup = true;
  bool spec_augment = true;
  bool random_crop = false;
  bool channel_confusion = false;
  std::uint64_t seed = 0;
  /// Called once per epoch with (epoch, mean loss).
  std::function<void(int, double)> on_epoch;
};

struct TrainResult {
  std::vector<double> step_loss;
  std::vector<double> epoch_loss;
  std::vector<Network<float>> snapshots;
  std::vector<long> snapshot_steps;
  long steps = 0;
  long first_cycle_len = 0;
};

/// Mini-batch SGD with momentum and cosine-decay restarts. Online
/// augmentation per batch: random crop, spec-augment and channel
/// confusion per item, then mixup over the batch. One snapshot is kept at
/// the end of every completed cycle, where the learning rate reaches
/// lr_min. Deterministic for a fixed seed; `net` holds the final weights.
TrainResult Train(Network<float>& net, const Dataset& data,
                  const TrainConfig& cfg);

/// Packs equally shaped feature maps into an NHWC batch.
Tensor4<float> ToBatch(std::span<const FeatureTensor> items);
Tensor4<float> ToBatch(std::span<const FeatureTensor* const> items);

/// Eval-mode class probabilities, one row per item.
ScoreMatrix Predict(Network<float>& net, std::span<const FeatureTensor> items,
                    int batch_size = 32);

/// Output-level average over snapshot models.
ScoreMatrix PredictSnapshots(std::span<Network<float>> snapshots,
                             std::span<const FeatureTensor> items,
                             int batch_size = 32);

}  // namespace ascene::nn
