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

#include "ascene/features/feature_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ascene/error.hpp"
#include "ascene/util/binary_io.hpp"

namespace ascene::features {

void WriteFeatureFile(const std::filesystem::path& path,
                      const FeatureTensor& t) {
  if (t.data.size() != static_cast<std::size_t>(t.frames) * t.bins * t.channels)
    ThrowShape("feature tensor data does not match its dims");
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowData("cannot write feature file: " + path.string());
  os.write("ASCF", 4);
  io::WriteU32(os, kFeatureFileVersion);
  io::WriteU32(os, static_cast<std::uint32_t>(t.frames));
  io::WriteU32(os, static_cast<std::uint32_t>(t.bins));
  io::WriteU32(os, static_cast<std::uint32_t>(t.channels));
  io::WriteU32(os, kDtypeF32);
  io::WriteF32Array(os, t.data);
  if (!os) ThrowData("failed writing feature file: " + path.string());
}

FeatureTensor ReadFeatureFile(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    ThrowData("cannot open feature file: " + path.string(),
              ErrorCode::kFileNotFound);
  io::ExpectMagic(is, "ASCF", "feature file");
  const std::uint32_t version = io::ReadU32(is, "feature version");
  if (version != kFeatureFileVersion)
    ThrowData("unsupported feature file version " + std::to_string(version),
              ErrorCode::kUnsupportedEncoding);
  FeatureTensor t;
  t.frames = static_cast<int>(io::ReadU32(is, "feature dims"));
  t.bins = static_cast<int>(io::ReadU32(is, "feature dims"));
  t.channels = static_cast<int>(io::ReadU32(is, "feature dims"));
  if (io::ReadU32(is, "feature dtype") != kDtypeF32)
    ThrowData("unsupported feature dtype", ErrorCode::kUnsupportedEncoding);
  const std::size_t n = static_cast<std::size_t>(t.frames) * t.bins * t.channels;
  if (n > (1u << 30)) ThrowData("implausible feature dims in " + path.string());
  t.data = io::ReadF32Array(is, n, "feature data");
  return t;
}

void ScaleAccumulator::Add(const FeatureTensor& t) {
  if (t.channels <= 0 || t.data.empty()) ThrowData("empty feature tensor");
  if (min_.empty()) {
    min_.assign(t.channels, std::numeric_limits<float>::infinity());
    max_.assign(t.channels, -std::numeric_limits<float>::infinity());
  } else if (static_cast<int>(min_.size()) != t.channels) {
    ThrowShape("scale stats: channel count differs across corpus");
  }
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    const std::size_t c = i % static_cast<std::size_t>(t.channels);
    const float v = t.data[i];
    if (!std::isfinite(v)) ThrowNumeric("non-finite feature value");
    min_[c] = std::min(min_[c], v);
    max_[c] = std::max(max_[c], v);
  }
}

void ScaleAccumulator::Merge(const ScaleAccumulator& other) {
  if (other.min_.empty()) return;
  if (min_.empty()) {
    *this = other;
    return;
  }
  if (other.min_.size() != min_.size())
    ThrowShape("scale stats: channel count differs across corpus");
  for (std::size_t c = 0; c < min_.size(); ++c) {
    min_[c] = std::min(min_[c], other.min_[c]);
    max_[c] = std::max(max_[c], other.max_[c]);
  }
}

ScaleStats ScaleAccumulator::Finish() const {
  if (min_.empty()) ThrowData("cannot fit scale stats on an empty corpus");
  for (std::size_t c = 0; c < min_.size(); ++c)
    if (!(max_[c] > min_[c]))
      ThrowNumeric("degenerate channel " + std::to_string(c) +
                       " (max == min) while fitting scale stats",
                   ErrorCode::kDegenerate);
  return ScaleStats{min_, max_};
}

ScaleStats FitScale01(std::span<const FeatureTensor> corpus) {
  ScaleAccumulator acc;
  for (const auto& t : corpus) acc.Add(t);
  return acc.Finish();
}

void ApplyScale01InPlace(FeatureTensor& t, const ScaleStats& s) {
  if (s.num_channels() != t.channels)
    ThrowShape("scale stats have " + std::to_string(s.num_channels()) +
               " channels, tensor has " + std::to_string(t.channels));
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    const std::size_t c = i % static_cast<std::size_t>(t.channels);
    const float v = (t.data[i] - s.min[c]) / (s.max[c] - s.min[c]);
    t.data[i] = std::clamp(v, 0.0f, 1.0f);
  }
}

FeatureTensor ApplyScale01(const FeatureTensor& t, const ScaleStats& s) {
  FeatureTensor out = t;
  ApplyScale01InPlace(out, s);
  return out;
}

void SaveScaleStats(const std::filesystem::path& path, const ScaleStats& s) {
  std::ofstream os(path);
  if (!os) ThrowData("cannot write scale stats: " + path.string());
  os << "# channel min max\n";
  os.precision(std::numeric_limits<float>::max_digits10);
  for (int c = 0; c < s.num_channels(); ++c)
    os << c << ' ' << s.min[c] << ' ' << s.max[c] << '\n';
}

ScaleStats LoadScaleStats(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is)
    ThrowData("cannot open scale stats: " + path.string(),
              ErrorCode::kFileNotFound);
  ScaleStats s;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int c;
    float lo, hi;
    if (!(ls >> c >> lo >> hi) || c != s.num_channels())
      ThrowData("malformed scale stats line: " + line);
    s.min.push_back(lo);
    s.max.push_back(hi);
  }
  if (s.min.empty()) ThrowData("scale stats file is empty: " + path.string());
  return s;
}

}  // namespace ascene::features
