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

#include "ascene/nn/tensor.hpp"

namespace ascene::nn {

enum class LayerKind {
  kInput,
  kConv2d,
  kDepthwiseConv2d,
  kBatchNorm,
  kRelu,
  kMaxPool,
  kGlobalAvgPool,
  kDense,
  kSoftmax,
  kDropout,
  kChannelAttention,
  kResidualAdd,
  kFreqSplit,
  kConcat,
};

std::string_view KindName(LayerKind kind);
LayerKind KindFromName(std::string_view name);

/// One node of a model graph. Only the fields relevant to `kind` are used.
/// Convolutions use TF-style "same" padding.
struct LayerSpec {
  LayerKind kind = LayerKind::kInput;
  std::string name;
  std::vector<int> inputs;  // indices of earlier layers

  int kernel_h = 0, kernel_w = 0;  // conv, depthwise
  int stride_h = 1, stride_w = 1;  // conv, depthwise
  int filters = 0;                 // conv, dense (units)
  int pool_h = 0, pool_w = 0;      // maxpool (time x frequency)
  float rate = 0.0f;               // dropout
  int reduction = 0;               // channel attention bottleneck factor
  int split_lo = 0, split_hi = 0;  // freq_split range [lo, hi)
  Shape input_dims;                // input: b ignored

  bool operator==(const LayerSpec&) const = default;
};

/// Topologically ordered layer list. Layer 0 is the input; the last layer
/// is the single output.
struct GraphSpec {
  std::string arch;  // informational, e.g. "fcnn"
  std::vector<LayerSpec> layers;

  int Add(LayerSpec spec);
  int size() const { return static_cast<int>(layers.size()); }
  Shape input_shape() const { return layers.at(0).input_dims; }

  bool operator==(const GraphSpec&) const = default;
};

/// Propagates shapes through the graph for a given input (batch `b`, time
/// `h`). Throws ErrorKind::kData naming the offending layer on any
/// mismatch, cycle, dangling node or hyperparameter out of range.
std::vector<Shape> InferShapes(const GraphSpec& graph, Shape input);

/// Validates with the graph's declared input dims.
std::vector<Shape> ValidateGraph(const GraphSpec& graph);

/// Structured text form used inside checkpoints.
std::string SerializeGraph(const GraphSpec& graph);
GraphSpec ParseGraph(std::string_view text);

/// Parameter tensor descriptors a layer owns, as (name, dims, trainable).
struct ParamInfo {
  std::string name;
  std::vector<int> dims;
  bool trainable = true;
};
std::vector<ParamInfo> LayerParams(const LayerSpec& spec, const Shape& in);

int CountLayers(const GraphSpec& graph, LayerKind kind);

}  // namespace ascene::nn
