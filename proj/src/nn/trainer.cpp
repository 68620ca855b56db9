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

#include "ascene/nn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ascene/error.hpp"

namespace ascene::nn {
namespace {

Tensor4<float> PackBatch(const augment::LabeledBatch& b) {
  Tensor4<float> x;
  x.shape = {b.batch, b.frames, b.bins, b.channels};
  x.data = b.tensors;
  return x;
}

void CheckDataset(const Dataset& data) {
  if (data.items.empty()) ThrowData("training set is empty");
  if (data.items.size() != data.labels.size())
    ThrowShape("dataset has " + std::to_string(data.items.size()) +
               " items but " + std::to_string(data.labels.size()) + " labels");
  if (data.num_classes < 2) ThrowConfig("num_classes must be >= 2");
  for (int y : data.labels)
    if (y < 0 || y >= data.num_classes)
      ThrowData("label " + std::to_string(y) + " out of range");
}

}  // namespace

Tensor4<float> ToBatch(std::span<const FeatureTensor* const> items) {
  if (items.empty()) ThrowShape("cannot batch zero items");
  const FeatureTensor& first = *items[0];
  Tensor4<float> x(Shape{static_cast<int>(items.size()), first.frames,
                         first.bins, first.channels});
  for (std::size_t i = 0; i < items.size(); ++i) {
    const FeatureTensor& t = *items[i];
    if (t.frames != first.frames || t.bins != first.bins ||
        t.channels != first.channels)
      ThrowShape("batch items differ in shape");
    std::copy(t.data.begin(), t.data.end(), x.item(static_cast<int>(i)));
  }
  return x;
}

Tensor4<float> ToBatch(std::span<const FeatureTensor> items) {
  std::vector<const FeatureTensor*> ptrs;
  ptrs.reserve(items.size());
  for (const auto& t : items) ptrs.push_back(&t);
  return ToBatch(std::span<const FeatureTensor* const>(ptrs));
}

ScoreMatrix Predict(Network<float>& net, std::span<const FeatureTensor> items,
                    int batch_size) {
  if (batch_size < 1) ThrowConfig("batch_size must be >= 1");
  ScoreMatrix out;
  const int n = static_cast<int>(items.size());
  int row = 0;
  while (row < n) {
    // Runs of equally shaped items share a batch.
    int end = row + 1;
    while (end < n && end - row < batch_size &&
           items[end].frames == items[row].frames &&
           items[end].bins == items[row].bins &&
           items[end].channels == items[row].channels)
      ++end;
    const Tensor4<float>& y =
        net.Forward(ToBatch(items.subspan(row, end - row)), Mode::kEval);
    if (out.rows == 0) out = ScoreMatrix(n, y.shape.c);
    for (int b = 0; b < y.shape.b; ++b)
      for (int k = 0; k < y.shape.c; ++k)
        out.at(row + b, k) = y.data[static_cast<std::size_t>(b) * y.shape.c + k];
    row = end;
  }
  return out;
}

ScoreMatrix PredictSnapshots(std::span<Network<float>> snapshots,
                             std::span<const FeatureTensor> items,
                             int batch_size) {
  if (snapshots.empty()) ThrowConfig("no snapshots to average");
  std::vector<ScoreMatrix> scores;
  for (auto& net : snapshots) {
    scores.push_back(Predict(net, items, batch_size));
    net.ClearCaches();
  }
  return SnapshotAverage(scores);
}

TrainResult Train(Network<float>& net, const Dataset& data,
                  const TrainConfig& cfg) {
  CheckDataset(data);
  if (cfg.epochs < 1) ThrowConfig("epochs must be >= 1");
  if (cfg.batch_size < 2) ThrowConfig("batch_size must be >= 2");
  cfg.aug.Validate();

  const int n = static_cast<int>(data.size());
  const int full = n / cfg.batch_size;
  const int rest = n % cfg.batch_size;
  const long steps_per_epoch = full + (rest >= 2 ? 1 : 0);
  if (steps_per_epoch < 1) ThrowData("training set smaller than two items");

  ScheduleConfig sched = cfg.schedule;
  if (sched.first_cycle_len == 0) {
    if (cfg.first_cycle_epochs < 1)
      ThrowConfig("first_cycle_epochs must be >= 1");
    sched.first_cycle_len = cfg.first_cycle_epochs * steps_per_epoch;
  }
  sched.Validate();

  TrainResult result;
  result.first_cycle_len = sched.first_cycle_len;
  Rng rng = DeriveRng(cfg.seed, "train");
  net.ReseedDropout(Mix64(cfg.seed ^ 0xd20f00dULL));
  SgdOptimizer<float> opt(sched.momentum);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    long loss_count = 0;
    for (long s = 0; s < steps_per_epoch; ++s) {
      const int lo = static_cast<int>(s) * cfg.batch_size;
      const int hi = std::min(n, lo + cfg.batch_size);
      std::vector<FeatureTensor> items;
      std::vector<int> labels;
      for (int i = lo; i < hi; ++i) {
        FeatureTensor t = data.items[order[i]];
        if (cfg.random_crop)
          t = augment::RandomCrop(t, std::min(cfg.aug.crop_len, t.frames), rng);
        if (cfg.channel_confusion) t = augment::ChannelConfusion(t, rng);
        if (cfg.spec_augment) t = augment::SpecAugment(t, cfg.aug, rng);
        items.push_back(std::move(t));
        labels.push_back(data.labels[order[i]]);
      }
      augment::LabeledBatch batch =
          augment::MakeBatch(items, labels, data.num_classes);
      if (cfg.mixup) batch = augment::MixupBatch(batch, cfg.aug.mixup_alpha, rng);

      const CyclePosition pos = LocateCycle(step, sched);
      const double lr = CycleLr(static_cast<double>(pos.offset), pos.length, sched);
      double loss = 0.0;
      try {
        net.Forward(PackBatch(batch), Mode::kTrain);
        loss = net.Backward(batch.labels);
        if (!std::isfinite(loss)) ThrowNumeric("loss is not finite");
        opt.Step(net, lr);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumeric) throw;
        ThrowNumeric("training diverged at epoch " + std::to_string(epoch) +
                     ", step " + std::to_string(step) +
                     " (lr " + std::to_string(lr) + "): " + e.what());
      }
      result.step_loss.push_back(loss);
      loss_sum += loss;
      ++loss_count;
      ++step;
      // The next step's offset would equal the cycle length: lr is at lr_min.
      if (pos.offset + 1 == pos.length) {
        Network<float> snap = net;
        snap.ClearCaches();
        result.snapshots.push_back(std::move(snap));
        result.snapshot_steps.push_back(step);
      }
    }
    const double mean = loss_sum / static_cast<double>(loss_count);
    result.epoch_loss.push_back(mean);
    if (cfg.on_epoch) cfg.on_epoch(epoch, mean);
  }
  result.steps = step;
  net.ClearCaches();
  return result;
}

}  // namespace ascene::nn
