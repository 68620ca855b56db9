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
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ascene/augment/feature_aug.hpp"
#include "ascene/features/spectro.hpp"
#include "ascene/nn/trainer.hpp"
#include "ascene/zoo/zoo.hpp"

namespace ascene::cli {

/// Everything a command needs, read from an INI file:
///
///   [run]      seed, workers
///   [spectro]  n_fft, win_length, hop, n_mels, fmin, fmax, log_floor,
///              slaney_norm, stereo
///   [augment]  mixup_alpha, crop_len, specaug_time_frac, ...,
///              waveform_methods (comma list)
///   [arch]     name, width, n_classes, attention, dropout
///   [schedule] lr_max, lr_min, first_cycle_epochs, cycle_mult, momentum
///   [train]    epochs, batch_size, mixup, spec_augment, random_crop,
///              channel_confusion, label_level (scene | superclass)
///   [paths]    hierarchy
///
/// Unknown sections or keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  int workers = 1;

  features::SpectroConfig spectro;
  bool stereo = false;

  augment::AugmentConfig aug;
  std::vector<std::string> waveform_methods = {"pitch", "speed", "noise"};

  zoo::ArchConfig arch{.arch = zoo::Arch::kSmallFcnn};

  nn::TrainConfig train;
  std::string label_level = "scene";

  std::filesystem::path hierarchy;  // empty = built-in table

  /// Reads `path` over the defaults. Relative paths resolve against the
  /// config file's directory.
  static RunConfig Load(const std::filesystem::path& path);
  static RunConfig Parse(const std::string& text,
                         const std::filesystem::path& base_dir = {});

  /// Every key as "section.key = value", sorted; stable across runs.
  std::string Canonical() const;
  std::uint64_t Hash() const;

  void Validate() const;

  struct Field {
    std::string key;  // "section.key"
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
  };
  std::vector<Field> Fields();
};

}  // namespace ascene::cli
