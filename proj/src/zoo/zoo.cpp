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

#include "ascene/zoo/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "ascene/error.hpp"

namespace ascene::zoo {

using nn::LayerKind;
using nn::LayerSpec;
using nn::Shape;

namespace {

struct ArchEntry {
  Arch arch;
  std::string_view name;
  double width;
};

constexpr ArchEntry kArchTable[] = {
    {Arch::kFcnn, "fcnn", 1.0},         {Arch::kFsFcnn, "fsfcnn", 1.0},
    {Arch::kFsFcnnS, "fsfcnn_s", 1.0},  {Arch::kResnet, "resnet", 1.0},
    {Arch::kResnetD, "resnet_d", 1.0},  {Arch::kMobnet, "mobnet", 1.0},
    {Arch::kSmallFcnn, "small_fcnn", 0.625},
};

// Thin helper that names layers sequentially and wires single inputs.
class Builder {
 public:
  Builder(std::string arch, int frames, int bins, int channels) {
    g_.arch = std::move(arch);
    LayerSpec in;
    in.kind = LayerKind::kInput;
    in.name = "input";
    in.input_dims = Shape{1, frames, bins, channels};
    g_.Add(in);
  }

  int Conv(int x, int filters, int k, int stride_h = 1, int stride_w = 1) {
    LayerSpec l = Make(LayerKind::kConv2d, "conv", x);
    l.kernel_h = l.kernel_w = k;
    l.stride_h = stride_h;
    l.stride_w = stride_w;
    l.filters = filters;
    return g_.Add(l);
  }
  int Depthwise(int x, int k, int stride) {
    LayerSpec l = Make(LayerKind::kDepthwiseConv2d, "dwconv", x);
    l.kernel_h = l.kernel_w = k;
    l.stride_h = l.stride_w = stride;
    return g_.Add(l);
  }
  int Bn(int x) { return g_.Add(Make(LayerKind::kBatchNorm, "bn", x)); }
  int Relu(int x) { return g_.Add(Make(LayerKind::kRelu, "relu", x)); }
  int Pool(int x, int ph, int pw) {
    LayerSpec l = Make(LayerKind::kMaxPool, "pool", x);
    l.pool_h = ph;
    l.pool_w = pw;
    return g_.Add(l);
  }
  int Dropout(int x, float rate) {
    LayerSpec l = Make(LayerKind::kDropout, "dropout", x);
    l.rate = rate;
    return g_.Add(l);
  }
  int Attention(int x, int reduction) {
    LayerSpec l = Make(LayerKind::kChannelAttention, "attention", x);
    l.reduction = reduction;
    return g_.Add(l);
  }
  int Split(int x, int lo, int hi) {
    LayerSpec l = Make(LayerKind::kFreqSplit, "split", x);
    l.split_lo = lo;
    l.split_hi = hi;
    return g_.Add(l);
  }
  int Add(int a, int b) {
    LayerSpec l = Make(LayerKind::kResidualAdd, "add", a);
    l.inputs.push_back(b);
    return g_.Add(l);
  }
  int Concat(std::vector<int> xs) {
    LayerSpec l = Make(LayerKind::kConcat, "concat", xs.at(0));
    l.inputs = std::move(xs);
    return g_.Add(l);
  }
  int Head(int x, int n_classes) {
    x = g_.Add(Make(LayerKind::kGlobalAvgPool, "gap", x));
    LayerSpec d = Make(LayerKind::kDense, "dense", x);
    d.filters = n_classes;
    x = g_.Add(d);
    return g_.Add(Make(LayerKind::kSoftmax, "softmax", x));
  }

  GraphSpec Finish() {
    nn::ValidateGraph(g_);
    return std::move(g_);
  }

 private:
  LayerSpec Make(LayerKind kind, const char* stem, int input) {
    LayerSpec l;
    l.kind = kind;
    l.name = std::string(stem) + std::to_string(g_.size());
    l.inputs = {input};
    return l;
  }

  GraphSpec g_;
};

// conv3x3 + BN + ReLU, dropout from the `dropout_from`-th conv (1-based).
int ConvBlock(Builder& b, int x, int filters, int index, int dropout_from,
              float rate) {
  x = b.Relu(b.Bn(b.Conv(x, filters, 3)));
  if (index >= dropout_from && rate > 0.0f) x = b.Dropout(x, rate);
  return x;
}

// First `n_convs` blocks of the fsFCNN trunk, with its pool schedule.
int FsFcnnTrunk(Builder& b, int x, int n_convs, double width, float rate) {
  for (int i = 1; i <= n_convs; ++i) {
    x = ConvBlock(b, x, Scaled(kFsFcnnFilters[i - 1], width), i, 5, rate);
    if (i == 2 || i == 4) x = b.Pool(x, 2, 2);
    if (i == 6 || i == 8) x = b.Pool(x, 1, 2);
  }
  return x;
}

int ResidualBlock(Builder& b, int x, int filters) {
  int y = b.Relu(b.Bn(b.Conv(x, filters, 3)));
  y = b.Bn(b.Conv(y, filters, 3));
  return b.Relu(b.Add(y, x));
}

void RequireEvenBins(const ArchConfig& cfg) {
  if (cfg.bins % 2 != 0)
    ThrowConfig(std::string(ArchName(cfg.arch)) +
                " splits the frequency axis and needs an even bin count, got " +
                std::to_string(cfg.bins));
}

void RequireAtLeast(const ArchConfig& cfg, int min_t, int min_f) {
  if (cfg.frames < min_t || cfg.bins < min_f)
    ThrowConfig(std::string(ArchName(cfg.arch)) + " needs input of at least " +
                std::to_string(min_t) + "x" + std::to_string(min_f) +
                " (time x frequency), got " + std::to_string(cfg.frames) + "x" +
                std::to_string(cfg.bins));
}

}  // namespace

std::string_view ArchName(Arch arch) {
  for (const auto& e : kArchTable)
    if (e.arch == arch) return e.name;
  ThrowConfig("unknown architecture enum");
}

Arch ArchFromName(std::string_view name) {
  for (const auto& e : kArchTable)
    if (e.name == name) return e.arch;
  std::string valid;
  for (const auto& e : kArchTable) valid += (valid.empty() ? "" : ", ") + std::string(e.name);
  ThrowConfig("unknown architecture '" + std::string(name) + "' (valid: " +
              valid + ")");
}

std::vector<std::string> ArchNames() {
  std::vector<std::string> out;
  for (const auto& e : kArchTable) out.emplace_back(e.name);
  return out;
}

double DefaultWidth(Arch arch) {
  for (const auto& e : kArchTable)
    if (e.arch == arch) return e.width;
  return 1.0;
}

void ArchConfig::Validate() const {
  if (!(width_mult >= 0.0) || !std::isfinite(width_mult))
    ThrowConfig("width_mult must be positive (0 selects the default)");
  if (n_classes != 3 && n_classes != 10)
    ThrowConfig("n_classes must be 3 or 10, got " + std::to_string(n_classes));
  if (frames < 1 || bins < 1 || channels < 1)
    ThrowConfig("input dims must be positive");
  if (!(dropout >= 0.0f && dropout < 1.0f))
    ThrowConfig("dropout must be in [0, 1)");
}

double ArchConfig::EffectiveWidth() const {
  return width_mult > 0.0 ? width_mult : DefaultWidth(arch);
}

int Scaled(int base, double width) {
  return std::max(1, static_cast<int>(std::lround(base * width)));
}

GraphSpec BuildFcnn(const ArchConfig& cfg) {
  cfg.Validate();
  RequireAtLeast(cfg, 8, 8);
  const double w = cfg.EffectiveWidth();
  Builder b(std::string(ArchName(cfg.arch)), cfg.frames, cfg.bins, cfg.channels);
  int x = 0;
  for (int i = 1; i <= 9; ++i) {
    x = ConvBlock(b, x, Scaled(kFcnnFilters[i - 1], w), i, 5, cfg.dropout);
    if (i == 2 || i == 4 || i == 8) x = b.Pool(x, 2, 2);
  }
  if (cfg.attention) x = b.Attention(x, 4);
  b.Head(x, cfg.n_classes);
  return b.Finish();
}

GraphSpec BuildSmallFcnn(const ArchConfig& cfg) {
  ArchConfig c = cfg;
  c.arch = Arch::kSmallFcnn;
  return BuildFcnn(c);
}

GraphSpec BuildFsFcnn(const ArchConfig& cfg) {
  cfg.Validate();
  RequireAtLeast(cfg, 4, 16);
  const double w = cfg.EffectiveWidth();
  Builder b("fsfcnn", cfg.frames, cfg.bins, cfg.channels);
  int x = FsFcnnTrunk(b, 0, 11, w, cfg.dropout);
  if (cfg.attention) x = b.Attention(x, 4);
  b.Head(x, cfg.n_classes);
  return b.Finish();
}

GraphSpec BuildFsFcnnS(const ArchConfig& cfg) {
  cfg.Validate();
  RequireEvenBins(cfg);
  RequireAtLeast(cfg, 4, 32);
  const double w = cfg.EffectiveWidth();
  Builder b("fsfcnn_s", cfg.frames, cfg.bins, cfg.channels);
  const int half = cfg.bins / 2;
  const int lo = FsFcnnTrunk(b, b.Split(0, 0, half), 9, w, cfg.dropout);
  const int hi = FsFcnnTrunk(b, b.Split(0, half, cfg.bins), 9, w, cfg.dropout);
  int x = b.Concat({lo, hi});
  x = ConvBlock(b, x, Scaled(kFsFcnnFilters[9], w), 10, 5, cfg.dropout);
  x = ConvBlock(b, x, Scaled(kFsFcnnFilters[10], w), 11, 5, cfg.dropout);
  b.Head(x, cfg.n_classes);
  return b.Finish();
}

GraphSpec BuildResnet(const ArchConfig& cfg, bool doubled) {
  cfg.Validate();
  RequireEvenBins(cfg);
  const double w = cfg.EffectiveWidth() * (doubled ? 2.0 : 1.0);
  const int filters = Scaled(kResnetFilters, w);
  Builder b(doubled ? "resnet_d" : "resnet", cfg.frames, cfg.bins,
            cfg.channels);
  // Input conv, then 4 two-conv residual blocks on each frequency half:
  // 1 + 2 * 4 * 2 = 17 convolutions.
  const int stem = b.Relu(b.Bn(b.Conv(0, filters, 3)));
  const int half = cfg.bins / 2;
  std::vector<int> branches;
  for (auto [lo, hi] : {std::pair{0, half}, std::pair{half, cfg.bins}}) {
    int x = b.Split(stem, lo, hi);
    for (int k = 0; k < 4; ++k) x = ResidualBlock(b, x, filters);
    branches.push_back(x);
  }
  b.Head(b.Concat(branches), cfg.n_classes);
  return b.Finish();
}

GraphSpec BuildMobnet(const ArchConfig& cfg) {
  cfg.Validate();
  RequireAtLeast(cfg, 16, 16);
  const double w = cfg.EffectiveWidth();
  constexpr int kExpansion = 6;
  constexpr std::pair<int, int> kBlocks[] = {{16, 1}, {24, 2}, {24, 1},
                                             {32, 2}, {32, 1}, {64, 2},
                                             {64, 1}, {96, 1}};
  Builder b("mobnet", cfg.frames, cfg.bins, cfg.channels);
  int cin = Scaled(32, w);
  int x = b.Relu(b.Bn(b.Conv(0, cin, 3, 2, 2)));
  for (auto [base, stride] : kBlocks) {
    const int cout = Scaled(base, w);
    int y = b.Relu(b.Bn(b.Conv(x, cin * kExpansion, 1)));
    y = b.Relu(b.Bn(b.Depthwise(y, 3, stride)));
    y = b.Bn(b.Conv(y, cout, 1));
    x = (stride == 1 && cin == cout) ? b.Add(y, x) : y;
    cin = cout;
  }
  x = b.Relu(b.Bn(b.Conv(x, Scaled(1280, w), 1)));
  if (cfg.dropout > 0.0f) x = b.Dropout(x, cfg.dropout);
  b.Head(x, cfg.n_classes);
  return b.Finish();
}

GraphSpec Build(const ArchConfig& cfg) {
  switch (cfg.arch) {
    case Arch::kFcnn: return BuildFcnn(cfg);
    case Arch::kSmallFcnn: return BuildSmallFcnn(cfg);
    case Arch::kFsFcnn: return BuildFsFcnn(cfg);
    case Arch::kFsFcnnS: return BuildFsFcnnS(cfg);
    case Arch::kResnet: return BuildResnet(cfg, false);
    case Arch::kResnetD: return BuildResnet(cfg, true);
    case Arch::kMobnet: return BuildMobnet(cfg);
  }
  ThrowConfig("unknown architecture");
}

}  // namespace ascene::zoo
