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

#include "ascene/nn/graph.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <limits>
#include <sstream>

#include "ascene/error.hpp"

namespace ascene::nn {
namespace {

struct KindEntry {
  LayerKind kind;
  std::string_view name;
};

constexpr std::array<KindEntry, 14> kKinds{{
    {LayerKind::kInput, "input"},
    {LayerKind::kConv2d, "conv2d"},
    {LayerKind::kDepthwiseConv2d, "depthwise_conv2d"},
    {LayerKind::kBatchNorm, "batchnorm"},
    {LayerKind::kRelu, "relu"},
    {LayerKind::kMaxPool, "maxpool"},
    {LayerKind::kGlobalAvgPool, "global_avg_pool"},
    {LayerKind::kDense, "dense"},
    {LayerKind::kSoftmax, "softmax"},
    {LayerKind::kDropout, "dropout"},
    {LayerKind::kChannelAttention, "channel_attention"},
    {LayerKind::kResidualAdd, "residual_add"},
    {LayerKind::kFreqSplit, "freq_split"},
    {LayerKind::kConcat, "concat"},
}};

[[noreturn]] void LayerError(int id, const LayerSpec& spec,
                             const std::string& what) {
  ThrowShape("layer " + std::to_string(id) + " (" + spec.name + ", " +
             std::string(KindName(spec.kind)) + "): " + what);
}

int CeilDiv(int a, int b) { return (a + b - 1) / b; }

std::vector<int> ParseInts(std::string_view s) {
  std::vector<int> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const std::string_view tok = s.substr(0, comma);
    int v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
      ThrowData("bad integer list in graph text: " + std::string(s));
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

std::string JoinInts(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

std::string_view KindName(LayerKind kind) {
  for (const auto& e : kKinds)
    if (e.kind == kind) return e.name;
  return "unknown";
}

LayerKind KindFromName(std::string_view name) {
  for (const auto& e : kKinds)
    if (e.name == name) return e.kind;
  ThrowData("unknown layer kind: " + std::string(name));
}

int GraphSpec::Add(LayerSpec spec) {
  layers.push_back(std::move(spec));
  return size() - 1;
}

int CountLayers(const GraphSpec& graph, LayerKind kind) {
  return static_cast<int>(
      std::count_if(graph.layers.begin(), graph.layers.end(),
                    [kind](const LayerSpec& l) { return l.kind == kind; }));
}

std::vector<Shape> InferShapes(const GraphSpec& graph, Shape input) {
  if (graph.layers.empty() || graph.layers[0].kind != LayerKind::kInput)
    ThrowShape("graph must start with an input layer");
  const int n = graph.size();
  std::vector<Shape> shapes(static_cast<std::size_t>(n));
  std::vector<int> consumers(static_cast<std::size_t>(n), 0);

  for (int id = 0; id < n; ++id) {
    const LayerSpec& l = graph.layers[id];
    for (int in : l.inputs) {
      if (in < 0 || in >= id)
        LayerError(id, l, "input " + std::to_string(in) +
                              " is not an earlier layer (graph must be "
                              "acyclic and topologically ordered)");
      ++consumers[in];
    }
    auto expect_inputs = [&](std::size_t k) {
      if (l.inputs.size() != k)
        LayerError(id, l, "expects " + std::to_string(k) + " input(s), has " +
                              std::to_string(l.inputs.size()));
    };
    Shape out;
    switch (l.kind) {
      case LayerKind::kInput: {
        if (id != 0) LayerError(id, l, "only layer 0 may be an input");
        expect_inputs(0);
        const Shape& d = l.input_dims;
        if (input.w != d.w || input.c != d.c)
          LayerError(id, l, "input " + input.str() + " does not match declared " +
                                "frequency/channel dims " + d.str());
        if (input.h <= 0 || input.b <= 0) LayerError(id, l, "empty input");
        out = input;
        break;
      }
      case LayerKind::kConv2d:
      case LayerKind::kDepthwiseConv2d: {
        expect_inputs(1);
        const Shape in = shapes[l.inputs[0]];
        if (l.kernel_h < 1 || l.kernel_w < 1 || l.kernel_h > 15 ||
            l.kernel_w > 15)
          LayerError(id, l, "kernel size out of range [1,15]");
        if (l.stride_h < 1 || l.stride_w < 1 || l.stride_h > 4 ||
            l.stride_w > 4)
          LayerError(id, l, "stride out of range [1,4]");
        out = {in.b, CeilDiv(in.h, l.stride_h), CeilDiv(in.w, l.stride_w),
               l.kind == LayerKind::kConv2d ? l.filters : in.c};
        if (l.kind == LayerKind::kConv2d && l.filters < 1)
          LayerError(id, l, "filters must be >= 1");
        break;
      }
      case LayerKind::kBatchNorm:
      case LayerKind::kRelu:
      case LayerKind::kSoftmax:
        expect_inputs(1);
        out = shapes[l.inputs[0]];
        break;
      case LayerKind::kDropout:
        expect_inputs(1);
        if (!(l.rate >= 0.0f && l.rate < 1.0f))
          LayerError(id, l, "dropout rate must be in [0,1)");
        out = shapes[l.inputs[0]];
        break;
      case LayerKind::kChannelAttention:
        expect_inputs(1);
        if (l.reduction < 1) LayerError(id, l, "reduction must be >= 1");
        out = shapes[l.inputs[0]];
        break;
      case LayerKind::kMaxPool: {
        expect_inputs(1);
        const Shape in = shapes[l.inputs[0]];
        if (l.pool_h < 1 || l.pool_h > 2 || l.pool_w < 1 || l.pool_w > 2 ||
            (l.pool_h == 1 && l.pool_w == 1))
          LayerError(id, l, "pool shape must be 2x2, 1x2 or 2x1");
        out = {in.b, in.h / l.pool_h, in.w / l.pool_w, in.c};
        if (out.h < 1 || out.w < 1)
          LayerError(id, l, "input " + in.str() + " too small to pool");
        break;
      }
      case LayerKind::kGlobalAvgPool: {
        expect_inputs(1);
        const Shape in = shapes[l.inputs[0]];
        out = {in.b, 1, 1, in.c};
        break;
      }
      case LayerKind::kDense: {
        expect_inputs(1);
        if (l.filters < 1) LayerError(id, l, "units must be >= 1");
        out = {shapes[l.inputs[0]].b, 1, 1, l.filters};
        break;
      }
      case LayerKind::kResidualAdd: {
        expect_inputs(2);
        const Shape a = shapes[l.inputs[0]];
        const Shape b = shapes[l.inputs[1]];
        if (!(a == b))
          LayerError(id, l, "operand shapes differ: " + a.str() + " vs " +
                                b.str());
        out = a;
        break;
      }
      case LayerKind::kFreqSplit: {
        expect_inputs(1);
        const Shape in = shapes[l.inputs[0]];
        if (l.split_lo < 0 || l.split_hi > in.w || l.split_lo >= l.split_hi)
          LayerError(id, l, "split range [" + std::to_string(l.split_lo) + "," +
                                std::to_string(l.split_hi) +
                                ") invalid for width " + std::to_string(in.w));
        out = {in.b, in.h, l.split_hi - l.split_lo, in.c};
        break;
      }
      case LayerKind::kConcat: {
        if (l.inputs.size() < 2) LayerError(id, l, "concat needs >= 2 inputs");
        out = shapes[l.inputs[0]];
        out.c = 0;
        for (int in : l.inputs) {
          const Shape s = shapes[in];
          if (s.b != out.b || s.h != out.h || s.w != out.w)
            LayerError(id, l, "concat operands differ in b/h/w: " + s.str());
          out.c += s.c;
        }
        break;
      }
    }
    shapes[id] = out;
  }
  for (int id = 0; id + 1 < n; ++id)
    if (consumers[id] == 0)
      LayerError(id, graph.layers[id],
                 "output is never consumed (graph must have a single output)");
  return shapes;
}

std::vector<Shape> ValidateGraph(const GraphSpec& graph) {
  if (graph.layers.empty()) ThrowShape("empty graph");
  Shape in = graph.layers[0].input_dims;
  in.b = 1;
  return InferShapes(graph, in);
}

std::vector<ParamInfo> LayerParams(const LayerSpec& l, const Shape& in) {
  switch (l.kind) {
    case LayerKind::kConv2d:
      return {{"weight", {l.kernel_h, l.kernel_w, in.c, l.filters}, true},
              {"bias", {l.filters}, true}};
    case LayerKind::kDepthwiseConv2d:
      return {{"weight", {l.kernel_h, l.kernel_w, in.c}, true},
              {"bias", {in.c}, true}};
    case LayerKind::kBatchNorm:
      return {{"gamma", {in.c}, true},
              {"beta", {in.c}, true},
              {"running_mean", {in.c}, false},
              {"running_var", {in.c}, false}};
    case LayerKind::kDense:
      return {{"weight", {static_cast<int>(in.per_item()), l.filters}, true},
              {"bias", {l.filters}, true}};
    case LayerKind::kChannelAttention: {
      const int hidden = std::max(1, in.c / l.reduction);
      return {{"w1", {in.c, hidden}, true},
              {"b1", {hidden}, true},
              {"w2", {hidden, in.c}, true},
              {"b2", {in.c}, true}};
    }
    default:
      return {};
  }
}

std::string SerializeGraph(const GraphSpec& graph) {
  std::ostringstream os;
  os.precision(std::numeric_limits<float>::max_digits10);
  os << "ascene-graph 1\n";
  os << "arch " << (graph.arch.empty() ? "-" : graph.arch) << '\n';
  for (int id = 0; id < graph.size(); ++id) {
    const LayerSpec& l = graph.layers[id];
    os << "layer " << id << ' ' << KindName(l.kind) << " name=" << l.name;
    if (!l.inputs.empty()) os << " in=" << JoinInts(l.inputs);
    switch (l.kind) {
      case LayerKind::kInput:
        os << " dims=" << l.input_dims.h << ',' << l.input_dims.w << ','
           << l.input_dims.c;
        break;
      case LayerKind::kConv2d:
      case LayerKind::kDepthwiseConv2d:
        os << " k=" << l.kernel_h << ',' << l.kernel_w << " s=" << l.stride_h
           << ',' << l.stride_w;
        if (l.kind == LayerKind::kConv2d) os << " filters=" << l.filters;
        break;
      case LayerKind::kDense:
        os << " filters=" << l.filters;
        break;
      case LayerKind::kMaxPool:
        os << " pool=" << l.pool_h << ',' << l.pool_w;
        break;
      case LayerKind::kDropout:
        os << " rate=" << l.rate;
        break;
      case LayerKind::kChannelAttention:
        os << " reduction=" << l.reduction;
        break;
      case LayerKind::kFreqSplit:
        os << " split=" << l.split_lo << ',' << l.split_hi;
        break;
      default:
        break;
    }
    os << '\n';
  }
  return os.str();
}

GraphSpec ParseGraph(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  GraphSpec graph;
  if (!std::getline(is, line) || line != "ascene-graph 1")
    ThrowData("graph text: missing 'ascene-graph 1' header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "arch") {
      ls >> graph.arch;
      if (graph.arch == "-") graph.arch.clear();
      continue;
    }
    if (word != "layer") ThrowData("graph text: unexpected line: " + line);
    int id = -1;
    std::string kind;
    ls >> id >> kind;
    if (id != graph.size()) ThrowData("graph text: layers out of order");
    LayerSpec l;
    l.kind = KindFromName(kind);
    std::string kv;
    while (ls >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) ThrowData("graph text: bad token " + kv);
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "name") {
        l.name = val;
      } else if (key == "in") {
        l.inputs = ParseInts(val);
      } else if (key == "dims") {
        const auto v = ParseInts(val);
        if (v.size() != 3) ThrowData("graph text: dims needs 3 values");
        l.input_dims = {1, v[0], v[1], v[2]};
      } else if (key == "k" || key == "s" || key == "pool" || key == "split") {
        const auto v = ParseInts(val);
        if (v.size() != 2) ThrowData("graph text: " + key + " needs 2 values");
        if (key == "k") {
          l.kernel_h = v[0];
          l.kernel_w = v[1];
        } else if (key == "s") {
          l.stride_h = v[0];
          l.stride_w = v[1];
        } else if (key == "pool") {
          l.pool_h = v[0];
          l.pool_w = v[1];
        } else {
          l.split_lo = v[0];
          l.split_hi = v[1];
        }
      } else if (key == "filters") {
        l.filters = ParseInts(val).at(0);
      } else if (key == "reduction") {
        l.reduction = ParseInts(val).at(0);
      } else if (key == "rate") {
        l.rate = std::stof(val);
      } else {
        ThrowData("graph text: unknown key " + key);
      }
    }
    graph.layers.push_back(std::move(l));
  }
  ValidateGraph(graph);
  return graph;
}

}  // namespace ascene::nn
