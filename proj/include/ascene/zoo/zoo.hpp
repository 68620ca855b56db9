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

#include <string>
#include <string_view>
#include <vector>

#include "ascene/nn/graph.hpp"

namespace ascene::zoo {

using nn::GraphSpec;

enum class Arch { kFcnn, kFsFcnn, kFsFcnnS, kResnet, kResnetD, kMobnet, kSmallFcnn };

std::string_view ArchName(Arch arch);
/// Throws kConfig listing the valid names.
Arch ArchFromName(std::string_view name);
std::vector<std::string> ArchNames();

struct ArchConfig {
  Arch arch = Arch::kFcnn;
  double width_mult = 0.0;  // 0 = architecture default
  int n_classes = 10;
  int frames = 423;
  int bins = 128;
  int channels = 3;
  bool attention = true;  // fcnn family only
  float dropout = 0.3f;

  /// width_mult >= 0, n_classes in {3, 10}, positive dims.
  void Validate() const;
  double EffectiveWidth() const;
};

/// Default width multiplier per architecture.
double DefaultWidth(Arch arch);

/// max(1, round(base * width))
int Scaled(int base, double width);

GraphSpec BuildFcnn(const ArchConfig& cfg);
GraphSpec BuildFsFcnn(const ArchConfig& cfg);
GraphSpec BuildFsFcnnS(const ArchConfig& cfg);
GraphSpec BuildResnet(const ArchConfig& cfg, bool doubled);
GraphSpec BuildMobnet(const ArchConfig& cfg);
GraphSpec BuildSmallFcnn(const ArchConfig& cfg);

/// Dispatches on cfg.arch. The returned graph has been shape-validated.
GraphSpec Build(const ArchConfig& cfg);

/// Base filter counts before width scaling.
inline constexpr int kFcnnFilters[9] = {32, 32, 64, 64, 128, 128, 128, 128, 256};
inline constexpr int kFsFcnnFilters[11] = {32,  32,  64,  64,  128, 128,
                                           128, 128, 256, 256, 256};
inline constexpr int kResnetFilters = 32;

}  // namespace ascene::zoo
