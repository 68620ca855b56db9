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

#include "ascene/quant/quant.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ascene/error.hpp"
#include "ascene/nn/checkpoint.hpp"
#include "ascene/util/binary_io.hpp"

namespace ascene::quant {

using nn::LayerKind;
using nn::LayerSpec;
using nn::Shape;

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool HasWeights(LayerKind k) {
  return k == LayerKind::kConv2d || k == LayerKind::kDepthwiseConv2d ||
         k == LayerKind::kDense;
}

bool IsQuantizable(LayerKind k, const std::string& name) {
  if (HasWeights(k)) return name == "weight";
  if (k == LayerKind::kChannelAttention) return name == "w1" || name == "w2";
  return false;
}

struct Padding {
  int top = 0;
  int left = 0;
};

Shape ConvOut(const Shape& in, const LayerSpec& l, int filters) {
  return {in.b, (in.h + l.stride_h - 1) / l.stride_h,
          (in.w + l.stride_w - 1) / l.stride_w, filters};
}

Padding SamePadding(const Shape& in, const Shape& out, const LayerSpec& l) {
  const int ph = std::max((out.h - 1) * l.stride_h + l.kernel_h - in.h, 0);
  const int pw = std::max((out.w - 1) * l.stride_w + l.kernel_w - in.w, 0);
  return {ph / 2, pw / 2};
}

// Zero-padded patches of one item: (out.h * out.w) x (kh * kw * in.c).
template <class T>
void Im2Col(const T* x, const Shape& in, const Shape& out, const LayerSpec& l,
            RowMat<T>& cols) {
  const Padding pad = SamePadding(in, out, l);
  const int patch = l.kernel_h * l.kernel_w * in.c;
  cols.setZero(static_cast<Eigen::Index>(out.h) * out.w, patch);
  for (int oy = 0; oy < out.h; ++oy)
    for (int ox = 0; ox < out.w; ++ox) {
      T* row = cols.data() + (static_cast<std::size_t>(oy) * out.w + ox) * patch;
      for (int ky = 0; ky < l.kernel_h; ++ky) {
        const int iy = oy * l.stride_h - pad.top + ky;
        if (iy < 0 || iy >= in.h) continue;
        for (int kx = 0; kx < l.kernel_w; ++kx) {
          const int ix = ox * l.stride_w - pad.left + kx;
          if (ix < 0 || ix >= in.w) continue;
          const T* src = x + (static_cast<std::size_t>(iy) * in.w + ix) * in.c;
          std::copy(src, src + in.c, row + (ky * l.kernel_w + kx) * in.c);
        }
      }
    }
}

// Dynamic per-tensor activation quantization.
float ActivationScale(std::span<const float> a) {
  float mx = 0.0f;
  for (float v : a) mx = std::max(mx, std::fabs(v));
  return mx > 0.0f ? mx / 127.0f : 0.0f;
}

std::int32_t QuantizeValue(float v, float scale) {
  if (scale == 0.0f) return 0;
  const double q = std::round(static_cast<double>(v) / scale);
  return static_cast<std::int32_t>(std::clamp(q, -127.0, 127.0));
}

std::vector<std::int32_t> QuantizeActivations(std::span<const float> a,
                                              float scale) {
  std::vector<std::int32_t> q(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) q[i] = QuantizeValue(a[i], scale);
  return q;
}

std::vector<std::int32_t> Widen(const QuantizedTensor& t) {
  return {t.values.begin(), t.values.end()};
}

class Interpreter {
 public:
  Interpreter(const QuantizedModel& m, ActivationMode mode)
      : m_(m), mode_(mode) {
    const int n = m.graph.size();
    weights_.resize(n);
    for (const QParam& p : m.params) weights_[p.layer].push_back(&p);
  }

  Tensor4<float> Run(const Tensor4<float>& x) {
    const auto& g = m_.graph;
    nn::InferShapes(g, x.shape);
    acts_.assign(g.size(), {});
    acts_[0] = x;
    for (int id = 1; id < g.size(); ++id) Layer(id);
    return std::move(acts_.back());
  }

 private:
  const QParam& P(int id, std::string_view name) const {
    for (const QParam* p : weights_[id])
      if (p->name == name) return *p;
    ThrowData("quantized model lacks " + std::string(name) + " for layer " +
              std::to_string(id));
  }

  std::vector<float> Floats(const QParam& p) const {
    return p.quantized ? p.q.Dequantize() : p.f;
  }

  void Conv(int id, const LayerSpec& l, const Tensor4<float>& x,
            Tensor4<float>& y) {
    const Shape in = x.shape;
    const Shape out = ConvOut(in, l, l.filters);
    y.Reset(out);
    const QParam& w = P(id, "weight");
    const std::vector<float>& bias = P(id, "bias").f;
    const int patch = l.kernel_h * l.kernel_w * in.c;
    const Eigen::Index pixels = static_cast<Eigen::Index>(out.h) * out.w;
    if (mode_ == ActivationMode::kDynamic) {
      const float a_scale = ActivationScale(x.data);
      const std::vector<std::int32_t> xq = QuantizeActivations(x.data, a_scale);
      const std::vector<std::int32_t> wq = Widen(w.q);
      Eigen::Map<const RowMat<std::int32_t>> W(wq.data(), patch, l.filters);
      const double mult = static_cast<double>(a_scale) * w.q.scale;
      RowMat<std::int32_t> cols;
      for (int b = 0; b < in.b; ++b) {
        Im2Col(xq.data() + b * in.per_item(), in, out, l, cols);
        const RowMat<std::int32_t> acc = cols * W;
        float* dst = y.item(b);
        for (Eigen::Index i = 0; i < pixels; ++i)
          for (int f = 0; f < l.filters; ++f)
            dst[i * l.filters + f] =
                static_cast<float>(acc(i, f) * mult) + bias[f];
      }
    } else {
      const std::vector<float> wf = Floats(w);
      Eigen::Map<const RowMat<float>> W(wf.data(), patch, l.filters);
      RowMat<float> cols;
      for (int b = 0; b < in.b; ++b) {
        Im2Col(x.item(b), in, out, l, cols);
        Eigen::Map<RowMat<float>> Y(y.item(b), pixels, l.filters);
        Y.noalias() = cols * W;
        for (Eigen::Index i = 0; i < pixels; ++i)
          for (int f = 0; f < l.filters; ++f) Y(i, f) += bias[f];
      }
    }
  }

  void Depthwise(int id, const LayerSpec& l, const Tensor4<float>& x,
                 Tensor4<float>& y) {
    const Shape in = x.shape;
    const Shape out = ConvOut(in, l, in.c);
    y.Reset(out);
    const Padding pad = SamePadding(in, out, l);
    const QParam& w = P(id, "weight");
    const std::vector<float>& bias = P(id, "bias").f;
    const bool dyn = mode_ == ActivationMode::kDynamic;
    const float a_scale = dyn ? ActivationScale(x.data) : 0.0f;
    const std::vector<std::int32_t> xq =
        dyn ? QuantizeActivations(x.data, a_scale) : std::vector<std::int32_t>{};
    const std::vector<float> wf = dyn ? std::vector<float>{} : Floats(w);
    const double mult = static_cast<double>(a_scale) * w.q.scale;
    std::vector<std::int32_t> acc(in.c);
    for (int b = 0; b < in.b; ++b)
      for (int oy = 0; oy < out.h; ++oy)
        for (int ox = 0; ox < out.w; ++ox) {
          float* dst = y.data.data() + y.index(b, oy, ox, 0);
          if (dyn) std::fill(acc.begin(), acc.end(), 0);
          else std::copy(bias.begin(), bias.end(), dst);
          for (int ky = 0; ky < l.kernel_h; ++ky) {
            const int iy = oy * l.stride_h - pad.top + ky;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < l.kernel_w; ++kx) {
              const int ix = ox * l.stride_w - pad.left + kx;
              if (ix < 0 || ix >= in.w) continue;
              const std::size_t src = x.index(b, iy, ix, 0);
              const std::size_t wk = static_cast<std::size_t>(ky * l.kernel_w + kx) * in.c;
              if (dyn) {
                for (int c = 0; c < in.c; ++c)
                  acc[c] += xq[src + c] * static_cast<std::int32_t>(w.q.values[wk + c]);
              } else {
                for (int c = 0; c < in.c; ++c) dst[c] += x.data[src + c] * wf[wk + c];
              }
            }
          }
          if (dyn)
            for (int c = 0; c < in.c; ++c)
              dst[c] = static_cast<float>(acc[c] * mult) + bias[c];
        }
  }

  void Dense(int id, const LayerSpec& l, const Tensor4<float>& x,
             Tensor4<float>& y) {
    const Shape in = x.shape;
    y.Reset({in.b, 1, 1, l.filters});
    const int fan_in = static_cast<int>(in.per_item());
    const QParam& w = P(id, "weight");
    const std::vector<float>& bias = P(id, "bias").f;
    Eigen::Map<RowMat<float>> Y(y.data.data(), in.b, l.filters);
    if (mode_ == ActivationMode::kDynamic) {
      const float a_scale = ActivationScale(x.data);
      const std::vector<std::int32_t> xq = QuantizeActivations(x.data, a_scale);
      const std::vector<std::int32_t> wq = Widen(w.q);
      Eigen::Map<const RowMat<std::int32_t>> X(xq.data(), in.b, fan_in);
      Eigen::Map<const RowMat<std::int32_t>> W(wq.data(), fan_in, l.filters);
      const RowMat<std::int32_t> acc = X * W;
      const double mult = static_cast<double>(a_scale) * w.q.scale;
      for (int b = 0; b < in.b; ++b)
        for (int f = 0; f < l.filters; ++f)
          Y(b, f) = static_cast<float>(acc(b, f) * mult) + bias[f];
    } else {
      const std::vector<float> wf = Floats(w);
      Eigen::Map<const RowMat<float>> X(x.data.data(), in.b, fan_in);
      Eigen::Map<const RowMat<float>> W(wf.data(), fan_in, l.filters);
      Y.noalias() = X * W;
      for (int b = 0; b < in.b; ++b)
        for (int f = 0; f < l.filters; ++f) Y(b, f) += bias[f];
    }
  }

  // Squeeze-excitation with dequantized weights in both modes.
  void Attention(int id, const Tensor4<float>& x, Tensor4<float>& y) {
    const Shape in = x.shape;
    y.Reset(in);
    const std::vector<float> w1 = Floats(P(id, "w1"));
    const std::vector<float> w2 = Floats(P(id, "w2"));
    const std::vector<float>& b1 = P(id, "b1").f;
    const std::vector<float>& b2 = P(id, "b2").f;
    const int C = in.c;
    const int H = static_cast<int>(b1.size());
    const std::size_t pixels = static_cast<std::size_t>(in.h) * in.w;
    std::vector<float> s(C), z(H), gate(C);
    for (int b = 0; b < in.b; ++b) {
      const float* src = x.item(b);
      std::fill(s.begin(), s.end(), 0.0f);
      for (std::size_t p = 0; p < pixels; ++p)
        for (int c = 0; c < C; ++c) s[c] += src[p * C + c];
      for (float& v : s) v /= static_cast<float>(pixels);
      for (int h = 0; h < H; ++h) {
        float acc = b1[h];
        for (int c = 0; c < C; ++c) acc += s[c] * w1[c * H + h];
        z[h] = std::max(acc, 0.0f);
      }
      for (int c = 0; c < C; ++c) {
        float acc = b2[c];
        for (int h = 0; h < H; ++h) acc += z[h] * w2[h * C + c];
        gate[c] = 1.0f / (1.0f + std::exp(-acc));
      }
      float* dst = y.item(b);
      for (std::size_t p = 0; p < pixels; ++p)
        for (int c = 0; c < C; ++c) dst[p * C + c] = src[p * C + c] * gate[c];
    }
  }

  void Layer(int id) {
    const LayerSpec& l = m_.graph.layers[id];
    const Tensor4<float>& x = acts_[l.inputs[0]];
    const Shape in = x.shape;
    Tensor4<float>& y = acts_[id];
    switch (l.kind) {
      case LayerKind::kInput:
        break;
      case LayerKind::kConv2d:
        Conv(id, l, x, y);
        break;
      case LayerKind::kDepthwiseConv2d:
        Depthwise(id, l, x, y);
        break;
      case LayerKind::kDense:
        Dense(id, l, x, y);
        break;
      case LayerKind::kChannelAttention:
        Attention(id, x, y);
        break;
      case LayerKind::kBatchNorm:
        ThrowData("quantized model still contains batchnorm layer " + l.name);
      case LayerKind::kRelu:
        y = x;
        for (float& v : y.data) v = std::max(v, 0.0f);
        break;
      case LayerKind::kDropout:
        y = x;
        break;
      case LayerKind::kMaxPool: {
        y.Reset({in.b, in.h / l.pool_h, in.w / l.pool_w, in.c});
        for (int b = 0; b < y.shape.b; ++b)
          for (int oy = 0; oy < y.shape.h; ++oy)
            for (int ox = 0; ox < y.shape.w; ++ox)
              for (int c = 0; c < in.c; ++c) {
                float best = -std::numeric_limits<float>::infinity();
                for (int py = 0; py < l.pool_h; ++py)
                  for (int px = 0; px < l.pool_w; ++px)
                    best = std::max(best, x.at(b, oy * l.pool_h + py,
                                               ox * l.pool_w + px, c));
                y.at(b, oy, ox, c) = best;
              }
        break;
      }
      case LayerKind::kGlobalAvgPool: {
        y.Reset({in.b, 1, 1, in.c});
        const std::size_t pixels = static_cast<std::size_t>(in.h) * in.w;
        for (int b = 0; b < in.b; ++b) {
          std::vector<double> acc(in.c, 0.0);
          const float* src = x.item(b);
          for (std::size_t p = 0; p < pixels; ++p)
            for (int c = 0; c < in.c; ++c) acc[c] += src[p * in.c + c];
          for (int c = 0; c < in.c; ++c)
            y.at(b, 0, 0, c) = static_cast<float>(acc[c] / static_cast<double>(pixels));
        }
        break;
      }
      case LayerKind::kSoftmax: {
        y = x;
        for (std::size_t r = 0; r < y.data.size(); r += in.c) {
          float* row = y.data.data() + r;
          const float mx = *std::max_element(row, row + in.c);
          float sum = 0.0f;
          for (int c = 0; c < in.c; ++c) sum += (row[c] = std::exp(row[c] - mx));
          for (int c = 0; c < in.c; ++c) row[c] /= sum;
        }
        break;
      }
      case LayerKind::kResidualAdd: {
        y = x;
        const Tensor4<float>& x2 = acts_[l.inputs[1]];
        for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += x2.data[i];
        break;
      }
      case LayerKind::kFreqSplit: {
        const int width = l.split_hi - l.split_lo;
        y.Reset({in.b, in.h, width, in.c});
        for (int b = 0; b < in.b; ++b)
          for (int t = 0; t < in.h; ++t) {
            const float* src = x.data.data() + x.index(b, t, l.split_lo, 0);
            std::copy(src, src + static_cast<std::size_t>(width) * in.c,
                      y.data.data() + y.index(b, t, 0, 0));
          }
        break;
      }
      case LayerKind::kConcat: {
        int total = 0;
        for (int i : l.inputs) total += acts_[i].shape.c;
        y.Reset({in.b, in.h, in.w, total});
        const std::size_t pixels = static_cast<std::size_t>(in.b) * in.h * in.w;
        int c0 = 0;
        for (int i : l.inputs) {
          const Tensor4<float>& src = acts_[i];
          const int c = src.shape.c;
          for (std::size_t p = 0; p < pixels; ++p)
            std::copy(src.data.data() + p * c, src.data.data() + (p + 1) * c,
                      y.data.data() + p * total + c0);
          c0 += c;
        }
        break;
      }
    }
  }

  const QuantizedModel& m_;
  ActivationMode mode_;
  std::vector<std::vector<const QParam*>> weights_;
  std::vector<Tensor4<float>> acts_;
};

}  // namespace

std::vector<float> QuantizedTensor::Dequantize() const {
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = Dequant(i);
  return out;
}

QuantizedTensor QuantizeTensor(std::span<const float> w) {
  if (w.empty()) ThrowData("cannot quantize an empty tensor");
  float mx = 0.0f;
  for (float v : w) {
    if (!std::isfinite(v)) ThrowNumeric("cannot quantize a non-finite weight");
    mx = std::max(mx, std::fabs(v));
  }
  QuantizedTensor q;
  q.values.assign(w.size(), 0);
  if (mx == 0.0f) return q;  // degenerate rule: scale 1, all zeros
  q.scale = mx / 127.0f;
  for (std::size_t i = 0; i < w.size(); ++i)
    q.values[i] = static_cast<std::int8_t>(QuantizeValue(w[i], q.scale));
  return q;
}

Network<float> FoldBatchNorm(const Network<float>& net) {
  const GraphSpec& g = net.graph();
  const int n = g.size();
  std::vector<int> consumers(n, 0);
  for (const auto& l : g.layers)
    for (int i : l.inputs) ++consumers[i];

  std::vector<int> remap(n, -1);
  GraphSpec folded;
  folded.arch = g.arch;
  for (int id = 0; id < n; ++id) {
    const LayerSpec& l = g.layers[id];
    if (l.kind == LayerKind::kBatchNorm) {
      const int src = l.inputs[0];
      const LayerKind pk = g.layers[src].kind;
      if (!HasWeights(pk))
        ThrowData("cannot fold batchnorm " + l.name + ": it follows a " +
                  std::string(nn::KindName(pk)) + " layer");
      if (consumers[src] != 1)
        ThrowData("cannot fold batchnorm " + l.name + ": " +
                  g.layers[src].name + " has other consumers");
      remap[id] = remap[src];
      continue;
    }
    LayerSpec copy = l;
    for (int& i : copy.inputs) i = remap[i];
    remap[id] = folded.Add(copy);
  }

  Network<float> out = Network<float>::Build(std::move(folded), 0);
  for (int id = 0; id < n; ++id) {
    if (g.layers[id].kind == LayerKind::kBatchNorm) continue;
    for (const auto& p : net.params(id)) out.param(remap[id], p.name).value = p.value;
  }
  for (int id = 0; id < n; ++id) {
    const LayerSpec& l = g.layers[id];
    if (l.kind != LayerKind::kBatchNorm) continue;
    const auto& gamma = net.param(id, "gamma").value;
    const auto& beta = net.param(id, "beta").value;
    const auto& mean = net.param(id, "running_mean").value;
    const auto& var = net.param(id, "running_var").value;
    const int target = remap[id];
    auto& w = out.param(target, "weight").value;
    auto& b = out.param(target, "bias").value;
    const std::size_t C = b.size();
    std::vector<double> mul(C);
    for (std::size_t c = 0; c < C; ++c)
      mul[c] = gamma[c] / std::sqrt(static_cast<double>(var[c]) + nn::kBatchNormEps);
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = static_cast<float>(w[i] * mul[i % C]);
    for (std::size_t c = 0; c < C; ++c)
      b[c] = static_cast<float>((static_cast<double>(b[c]) - mean[c]) * mul[c] + beta[c]);
  }
  return out;
}

std::size_t QParam::count() const {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

void QuantizedModel::Validate() const {
  const std::vector<Shape> shapes = nn::ValidateGraph(graph);
  for (int id = 0; id < graph.size(); ++id) {
    const LayerSpec& l = graph.layers[id];
    if (l.kind == LayerKind::kBatchNorm)
      ThrowData("quantized graph must not contain batchnorm (" + l.name + ")");
    long macs = 0;
    const Shape in = l.inputs.empty() ? Shape{} : shapes[l.inputs[0]];
    if (l.kind == LayerKind::kConv2d)
      macs = static_cast<long>(l.kernel_h) * l.kernel_w * in.c;
    else if (l.kind == LayerKind::kDepthwiseConv2d)
      macs = static_cast<long>(l.kernel_h) * l.kernel_w;
    else if (l.kind == LayerKind::kDense)
      macs = static_cast<long>(in.per_item());
    if (macs > kMaxMacsPerOutput)
      ThrowData("layer " + l.name + " needs " + std::to_string(macs) +
                " MACs per output; 32-bit accumulation is safe up to " +
                std::to_string(kMaxMacsPerOutput));
  }
}

const QParam& QuantizedModel::param(int layer, std::string_view name) const {
  for (const QParam& p : params)
    if (p.layer == layer && p.name == name) return p;
  ThrowData("quantized model has no parameter " + std::string(name) +
            " for layer " + std::to_string(layer));
}

Network<float> QuantizedModel::Dequantized() const {
  Network<float> net = Network<float>::Build(graph, 0);
  for (const QParam& p : params)
    net.param(p.layer, p.name).value = p.quantized ? p.q.Dequantize() : p.f;
  return net;
}

QuantizedModel QuantizeModel(const Network<float>& net) {
  const Network<float> folded = FoldBatchNorm(net);
  QuantizedModel m;
  m.graph = folded.graph();
  for (int id = 0; id < folded.num_layers(); ++id) {
    const LayerKind kind = m.graph.layers[id].kind;
    for (const auto& p : folded.params(id)) {
      QParam q;
      q.layer = id;
      q.name = p.name;
      q.dims = p.dims;
      q.quantized = IsQuantizable(kind, p.name);
      if (q.quantized) q.q = QuantizeTensor(p.value);
      else q.f = p.value;
      m.params.push_back(std::move(q));
    }
  }
  m.Validate();
  return m;
}

std::string SerializeQuantized(const QuantizedModel& m) {
  std::ostringstream os(std::ios::binary);
  os.write("ASCQ", 4);
  io::WriteU32(os, kQuantVersion);
  io::WriteString(os, nn::SerializeGraph(m.graph));
  io::WriteU32(os, static_cast<std::uint32_t>(m.params.size()));
  for (const QParam& p : m.params) {
    io::WriteU32(os, static_cast<std::uint32_t>(p.layer));
    io::WriteString(os, p.name);
    io::WriteU32(os, static_cast<std::uint32_t>(p.dims.size()));
    for (int d : p.dims) io::WriteU32(os, static_cast<std::uint32_t>(d));
    const char kind = p.quantized ? 1 : 0;
    os.write(&kind, 1);
    if (p.quantized) {
      io::WriteF32(os, p.q.scale);
      os.write(reinterpret_cast<const char*>(p.q.values.data()),
               static_cast<std::streamsize>(p.q.values.size()));
    } else {
      io::WriteF32Array(os, p.f);
    }
  }
  return std::move(os).str();
}

QuantizedModel DeserializeQuantized(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  io::ExpectMagic(is, "ASCQ", "quantized model");
  const std::uint32_t version = io::ReadU32(is, "quantized model version");
  if (version != kQuantVersion)
    ThrowData("unsupported quantized model version " + std::to_string(version),
              ErrorCode::kUnsupportedEncoding);
  QuantizedModel m;
  m.graph = nn::ParseGraph(io::ReadString(is, "quantized topology"));
  const Network<float> shape_ref = Network<float>::Build(m.graph, 0);
  const std::uint32_t count = io::ReadU32(is, "quantized param count");
  for (std::uint32_t k = 0; k < count; ++k) {
    QParam p;
    p.layer = static_cast<int>(io::ReadU32(is, "param layer"));
    if (p.layer >= m.graph.size()) ThrowData("quantized param refers to unknown layer");
    p.name = io::ReadString(is, "param name", 256);
    const std::uint32_t ndims = io::ReadU32(is, "param ndims");
    if (ndims > 8) ThrowData("implausible param rank", ErrorCode::kMalformedHeader);
    p.dims.resize(ndims);
    for (int& d : p.dims) d = static_cast<int>(io::ReadU32(is, "param dims"));
    if (p.dims != shape_ref.param(p.layer, p.name).dims)
      ThrowShape("quantized param " + p.name + " of layer " +
                 std::to_string(p.layer) + " has unexpected dims");
    char kind = 0;
    io::ReadExact(is, &kind, 1, "param kind");
    p.quantized = kind == 1;
    if (p.quantized) {
      p.q.scale = io::ReadF32(is, "param scale");
      p.q.values.resize(p.count());
      io::ReadExact(is, p.q.values.data(), p.q.values.size(), "int8 weights");
    } else {
      p.f = io::ReadF32Array(is, p.count(), "float param");
    }
    m.params.push_back(std::move(p));
  }
  if (is.peek() != std::char_traits<char>::eof())
    ThrowData("trailing bytes after quantized model", ErrorCode::kMalformedHeader);
  m.Validate();
  return m;
}

void SaveQuantized(const std::filesystem::path& path, const QuantizedModel& m) {
  nn::WriteFileBytes(path, SerializeQuantized(m));
}

QuantizedModel LoadQuantized(const std::filesystem::path& path) {
  return DeserializeQuantized(nn::ReadFileBytes(path));
}

Tensor4<float> QuantizedForward(const QuantizedModel& m, const Tensor4<float>& x,
                                ActivationMode mode) {
  for (float v : x.data)
    if (!std::isfinite(v)) ThrowNumeric("non-finite value in quantized input");
  return Interpreter(m, mode).Run(x);
}

SizeReport MeasureSizes(const Network<float>& net, const QuantizedModel& m) {
  SizeReport r;
  r.float_file = nn::CheckpointSize(net);
  r.quant_file = SerializeQuantized(m).size();
  r.quant_topology = nn::SerializeGraph(m.graph).size();
  for (const QParam& p : m.params) {
    if (p.quantized) {
      r.float_weights += p.count() * sizeof(float);
      r.quant_weights += p.count() + sizeof(float);
    } else {
      r.quant_float_params += p.count() * sizeof(float);
    }
  }
  return r;
}

std::string SizeReport::ToText() const {
  std::ostringstream os;
  os << "float checkpoint bytes      " << float_file << '\n'
     << "quantized file bytes        " << quant_file << '\n'
     << "  topology bytes            " << quant_topology << '\n'
     << "  int8 weights+scales bytes " << quant_weights << '\n'
     << "  float32 params bytes      " << quant_float_params << '\n'
     << "float weight bytes          " << float_weights << '\n';
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "weight blob ratio           " << weight_ratio() << '\n'
     << "file ratio                  " << file_ratio() << '\n';
  return os.str();
}

}  // namespace ascene::quant
