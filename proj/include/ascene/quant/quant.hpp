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
#include <span>
#include <string>
#include <vector>

#include "ascene/nn/network.hpp"

namespace ascene::quant {

using nn::GraphSpec;
using nn::Network;
using nn::Tensor4;

/// Symmetric per-tensor int8, zero-point 0: w ~= q * scale.
struct QuantizedTensor {
  std::vector<std::int8_t> values;
  float scale = 1.0f;

  float Dequant(std::size_t i) const { return values[i] * scale; }
  std::vector<float> Dequantize() const;
};

/// scale = max|w| / 127, q = round_half_away(w / scale) clamped to
/// [-127, 127]. An all-zero tensor gets scale 1 and q = 0.
QuantizedTensor QuantizeTensor(std::span<const float> w);

/// Returns an equivalent eval-mode network without batchnorm layers: each
/// BN is folded into the conv / depthwise / dense layer feeding it.
/// Throws kData when a BN has no such producer or the producer has other
/// consumers.
Network<float> FoldBatchNorm(const Network<float>& net);

/// One parameter of a quantized model. Weights of conv, depthwise, dense
/// and attention layers are int8; everything else stays float32.
struct QParam {
  int layer = 0;
  std::string name;
  std::vector<int> dims;
  bool quantized = false;
  QuantizedTensor q;
  std::vector<float> f;

  std::size_t count() const;
};

/// Largest multiply-accumulate count per output that keeps a 32-bit
/// accumulator safe for 8-bit operands: floor((2^31 - 1) / 127^2).
inline constexpr long kMaxMacsPerOutput = 133144;

struct QuantizedModel {
  GraphSpec graph;  // batchnorm-free
  std::vector<QParam> params;

  /// Checks the accumulator bound for every integer layer.
  void Validate() const;
  const QParam& param(int layer, std::string_view name) const;
  /// Float network with dequantized weights (weight-only path).
  Network<float> Dequantized() const;
};

/// Folds batchnorm, then quantizes every weight tensor.
QuantizedModel QuantizeModel(const Network<float>& net);

/// "ASCQ", u32 version, length-prefixed graph text, u32 param count, then
/// per param: u32 layer, name, u32 ndims, dims, u8 kind (1 = int8,
/// 0 = float32); int8 params carry f32 scale + raw bytes.
inline constexpr std::uint32_t kQuantVersion = 1;

std::string SerializeQuantized(const QuantizedModel& m);
QuantizedModel DeserializeQuantized(const std::string& bytes);
void SaveQuantized(const std::filesystem::path& path, const QuantizedModel& m);
QuantizedModel LoadQuantized(const std::filesystem::path& path);

enum class ActivationMode {
  kDynamic,     // int8 activations, int32 accumulation
  kWeightOnly,  // float activations, dequantized weights
};

/// Eval-mode forward pass. In dynamic mode every conv / depthwise / dense
/// input is quantized with a_scale = max|a| / 127 over the whole batch
/// tensor, accumulated in int32 and rescaled by a_scale * w_scale before
/// the float bias.
Tensor4<float> QuantizedForward(const QuantizedModel& m, const Tensor4<float>& x,
                                ActivationMode mode = ActivationMode::kDynamic);

struct SizeReport {
  std::size_t float_file = 0;      // serialized float checkpoint
  std::size_t quant_file = 0;      // serialized quantized model
  std::size_t float_weights = 0;   // float32 bytes of quantizable tensors
  std::size_t quant_weights = 0;   // int8 bytes + per-tensor scales
  std::size_t quant_float_params = 0;  // biases etc. kept as float32
  std::size_t quant_topology = 0;      // graph text

  double weight_ratio() const {
    return static_cast<double>(quant_weights) / static_cast<double>(float_weights);
  }
  double file_ratio() const {
    return static_cast<double>(quant_file) / static_cast<double>(float_file);
  }
  std::string ToText() const;
};

SizeReport MeasureSizes(const Network<float>& net, const QuantizedModel& m);

}  // namespace ascene::quant
