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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ascene::features {

/// time x mel-bin x channel feature map, row-major (channel fastest).
struct FeatureTensor {
  int frames = 0;
  int bins = 0;
  int channels = 0;
  std::vector<float> data;

  FeatureTensor() = default;
  FeatureTensor(int t, int f, int c, float fill = 0.0f)
      : frames(t), bins(f), channels(c),
        data(static_cast<std::size_t>(t) * f * c, fill) {}

  std::size_t index(int t, int f, int c) const {
    return (static_cast<std::size_t>(t) * bins + f) * channels + c;
  }
  float& at(int t, int f, int c) { return data[index(t, f, c)]; }
  float at(int t, int f, int c) const { return data[index(t, f, c)]; }
  std::size_t size() const { return data.size(); }

  bool operator==(const FeatureTensor&) const = default;
};

/// Binary container: "ASCF", u32 version, u32 T, u32 F, u32 C,
/// u32 dtype tag (1 = f32), then row-major little-endian float32 data.
inline constexpr std::uint32_t kFeatureFileVersion = 1;
inline constexpr std::uint32_t kDtypeF32 = 1;

void WriteFeatureFile(const std::filesystem::path& path,
                      const FeatureTensor& t);
FeatureTensor ReadFeatureFile(const std::filesystem::path& path);

/// Per-channel min/max fitted on a training corpus.
struct ScaleStats {
  std::vector<float> min;
  std::vector<float> max;

  int num_channels() const { return static_cast<int>(min.size()); }
};

/// Streaming min/max reduction; Merge is associative and commutative.
class ScaleAccumulator {
 public:
  void Add(const FeatureTensor& t);
  void Merge(const ScaleAccumulator& other);
  bool empty() const { return min_.empty(); }
  /// Throws kNumeric/kDegenerate when any channel has max == min.
  ScaleStats Finish() const;

 private:
  std::vector<float> min_;
  std::vector<float> max_;
};

ScaleStats FitScale01(std::span<const FeatureTensor> corpus);

/// (x - min) / (max - min), clamped to [0, 1].
FeatureTensor ApplyScale01(const FeatureTensor& t, const ScaleStats& s);
void ApplyScale01InPlace(FeatureTensor& t, const ScaleStats& s);

/// Text format: one "channel min max" line per channel, '#' comments.
void SaveScaleStats(const std::filesystem::path& path, const ScaleStats& s);
ScaleStats LoadScaleStats(const std::filesystem::path& path);

}  // namespace ascene::features
