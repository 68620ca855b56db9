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

#include <filesystem>
#include <string>

#include "ascene/nn/network.hpp"

namespace ascene::nn {

/// Float checkpoint: "ASCM", u32 version, length-prefixed graph text, u32
/// blob count, then per parameter: u32 layer id, length-prefixed name,
/// u32 ndims, u32 dims..., float32 data (little-endian).
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string SerializeCheckpoint(const Network<float>& net);
Network<float> DeserializeCheckpoint(const std::string& bytes);

void SaveCheckpoint(const std::filesystem::path& path,
                    const Network<float>& net);
Network<float> LoadCheckpoint(const std::filesystem::path& path);

/// Byte size of the serialized checkpoint.
std::size_t CheckpointSize(const Network<float>& net);

std::string ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, const std::string& bytes);

}  // namespace ascene::nn
