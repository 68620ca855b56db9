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

#include "ascene/nn/optim.hpp"

#include <cmath>
#include <numbers>

#include "ascene/error.hpp"

namespace ascene::nn {

void ScheduleConfig::Validate() const {
  if (!(lr_min > 0.0 && lr_min < lr_max))
    ThrowConfig("schedule needs 0 < lr_min < lr_max");
  if (first_cycle_len < 1) ThrowConfig("first_cycle_len must be >= 1");
  if (!(cycle_mult >= 1.0)) ThrowConfig("cycle_mult must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0))
    ThrowConfig("momentum must be in [0, 1)");
}

CyclePosition LocateCycle(long step, const ScheduleConfig& cfg) {
  cfg.Validate();
  if (step < 0) ThrowConfig("step must be non-negative");
  CyclePosition pos;
  double len = static_cast<double>(cfg.first_cycle_len);
  long start = 0;
  for (;;) {
    const long L = std::max(1L, std::lround(len));
    if (step < start + L) {
      pos.offset = step - start;
      pos.length = L;
      return pos;
    }
    start += L;
    len *= cfg.cycle_mult;
    ++pos.cycle;
  }
}

double CycleLr(double t, long length, const ScheduleConfig& cfg) {
  const double frac = t / static_cast<double>(length);
  return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) *
                          (1.0 + std::cos(std::numbers::pi * frac));
}

double CosineRestartLr(long step, const ScheduleConfig& cfg) {
  const CyclePosition pos = LocateCycle(step, cfg);
  return CycleLr(static_cast<double>(pos.offset), pos.length, cfg);
}

template <class Real>
void SgdStep(std::span<Real> params, std::span<const Real> grads, double lr,
             double momentum, std::span<Real> velocity) {
  if (params.size() != grads.size() || params.size() != velocity.size())
    ThrowShape("sgd_step: params, grads and velocity differ in size");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double v = momentum * velocity[i] - lr * grads[i];
    const double p = params[i] + v;
    if (!std::isfinite(v) || !std::isfinite(p))
      ThrowNumeric("sgd_step produced a non-finite update");
    velocity[i] = static_cast<Real>(v);
    params[i] = static_cast<Real>(p);
  }
}

template <class Real>
void SgdOptimizer<Real>::Step(Network<Real>& net, double lr) {
  if (velocity_.empty()) {
    velocity_.resize(net.num_layers());
    for (int id = 0; id < net.num_layers(); ++id)
      for (const auto& p : net.params(id))
        velocity_[id].emplace_back(p.value.size(), Real(0));
  }
  for (int id = 0; id < net.num_layers(); ++id) {
    auto& ps = net.params(id);
    for (std::size_t k = 0; k < ps.size(); ++k) {
      if (!ps[k].trainable) continue;
      SgdStep<Real>(ps[k].value, ps[k].grad, lr, momentum_, velocity_[id][k]);
    }
  }
}

ScoreMatrix SnapshotAverage(std::span<const ScoreMatrix> snapshots) {
  if (snapshots.empty()) ThrowData("snapshot_average: no snapshots");
  ScoreMatrix out(snapshots[0].rows, snapshots[0].cols);
  for (const auto& s : snapshots) {
    if (s.rows != out.rows || s.cols != out.cols)
      ThrowShape("snapshot_average: snapshot shapes differ");
    for (std::size_t i = 0; i < s.data.size(); ++i) out.data[i] += s.data[i];
  }
  const double inv = 1.0 / static_cast<double>(snapshots.size());
  for (double& v : out.data) v *= inv;
  return out;
}

template void SgdStep<float>(std::span<float>, std::span<const float>, double,
                             double, std::span<float>);
template void SgdStep<double>(std::span<double>, std::span<const double>,
                              double, double, std::span<double>);
template class SgdOptimizer<float>;
template class SgdOptimizer<double>;

}  // namespace ascene::nn
