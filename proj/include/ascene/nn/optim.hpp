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

#include "ascene/nn/network.hpp"
#include "ascene/scores.hpp"

namespace ascene::nn {

/// Cosine decay with warm restarts. Cycle i lasts
/// first_cycle_len * cycle_mult^i steps.
struct ScheduleConfig {
  double lr_max = 0.1;
  double lr_min = 1e-5;
  long first_cycle_len = 0;  // steps; 0 = derive from first_cycle_epochs
  double cycle_mult = 2.0;
  double momentum = 0.9;

  void Validate() const;
};

struct CyclePosition {
  int cycle = 0;
  long offset = 0;  // step offset t inside the cycle
  long length = 0;  // L_i
};

CyclePosition LocateCycle(long step, const ScheduleConfig& cfg);

/// lr_min + (lr_max - lr_min) (1 + cos(pi t / L)) / 2 for t in [0, L].
double CycleLr(double t, long length, const ScheduleConfig& cfg);

/// Learning rate used at global step `step` (restarts at each cycle start).
double CosineRestartLr(long step, const ScheduleConfig& cfg);

/// Classical momentum: v <- momentum v - lr g; p <- p + v.
/// Throws kNumeric on a non-finite update.
template <class Real>
void SgdStep(std::span<Real> params, std::span<const Real> grads, double lr,
             double momentum, std::span<Real> velocity);

/// Momentum SGD over every trainable parameter of a network.
template <class Real>
class SgdOptimizer {
 public:
  explicit SgdOptimizer(double momentum) : momentum_(momentum) {}
  void Step(Network<Real>& net, double lr);

 private:
  double momentum_;
  std::vector<std::vector<std::vector<Real>>> velocity_;
};

/// Elementwise mean of score batches (output-level averaging).
ScoreMatrix SnapshotAverage(std::span<const ScoreMatrix> snapshots);

}  // namespace ascene::nn
