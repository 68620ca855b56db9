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

#include "ascene/nn/network.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ascene/error.hpp"

namespace ascene::nn {
namespace {

template <class Real>
using RowMat =
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using MapMat = Eigen::Map<RowMat<Real>>;
template <class Real>
using CMapMat = Eigen::Map<const RowMat<Real>>;

struct Padding {
  int top = 0;
  int left = 0;
};

Padding SamePadding(const Shape& in, const Shape& out, const LayerSpec& l) {
  const int ph = std::max((out.h - 1) * l.stride_h + l.kernel_h - in.h, 0);
  const int pw = std::max((out.w - 1) * l.stride_w + l.kernel_w - in.w, 0);
  return {ph / 2, pw / 2};
}

bool IsPointwise(const LayerSpec& l) {
  return l.kernel_h == 1 && l.kernel_w == 1 && l.stride_h == 1 &&
         l.stride_w == 1;
}

// cols: (out.h * out.w) x (kh * kw * in.c)
template <class Real>
void Im2Col(const Real* x, const Shape& in, const Shape& out,
            const LayerSpec& l, std::vector<Real>& cols) {
  const Padding pad = SamePadding(in, out, l);
  const int patch = l.kernel_h * l.kernel_w * in.c;
  cols.assign(static_cast<std::size_t>(out.h) * out.w * patch, Real(0));
  for (int oy = 0; oy < out.h; ++oy)
    for (int ox = 0; ox < out.w; ++ox) {
      Real* row = cols.data() + (static_cast<std::size_t>(oy) * out.w + ox) * patch;
      for (int ky = 0; ky < l.kernel_h; ++ky) {
        const int iy = oy * l.stride_h - pad.top + ky;
        if (iy < 0 || iy >= in.h) continue;
        for (int kx = 0; kx < l.kernel_w; ++kx) {
          const int ix = ox * l.stride_w - pad.left + kx;
          if (ix < 0 || ix >= in.w) continue;
          const Real* src = x + (static_cast<std::size_t>(iy) * in.w + ix) * in.c;
          std::copy(src, src + in.c, row + (ky * l.kernel_w + kx) * in.c);
        }
      }
    }
}

template <class Real>
void Col2ImAdd(const std::vector<Real>& cols, const Shape& in,
               const Shape& out, const LayerSpec& l, Real* dx) {
  const Padding pad = SamePadding(in, out, l);
  const int patch = l.kernel_h * l.kernel_w * in.c;
  for (int oy = 0; oy < out.h; ++oy)
    for (int ox = 0; ox < out.w; ++ox) {
      const Real* row =
          cols.data() + (static_cast<std::size_t>(oy) * out.w + ox) * patch;
      for (int ky = 0; ky < l.kernel_h; ++ky) {
        const int iy = oy * l.stride_h - pad.top + ky;
        if (iy < 0 || iy >= in.h) continue;
        for (int kx = 0; kx < l.kernel_w; ++kx) {
          const int ix = ox * l.stride_w - pad.left + kx;
          if (ix < 0 || ix >= in.w) continue;
          Real* dst = dx + (static_cast<std::size_t>(iy) * in.w + ix) * in.c;
          const Real* src = row + (ky * l.kernel_w + kx) * in.c;
          for (int c = 0; c < in.c; ++c) dst[c] += src[c];
        }
      }
    }
}

template <class Real>
Real Sigmoid(Real v) {
  return Real(1) / (Real(1) + std::exp(-v));
}

template <class Real>
void CheckFinite(const Tensor4<Real>& t, int id, const LayerSpec& l) {
  for (Real v : t.data)
    if (!std::isfinite(v))
      ThrowNumeric("non-finite activation at layer " + std::to_string(id) +
                   " (" + l.name + ")");
}

}  // namespace

template <class Real>
Network<Real> Network<Real>::Build(GraphSpec graph, std::uint64_t seed) {
  Network net;
  net.declared_shapes_ = ValidateGraph(graph);
  net.graph_ = std::move(graph);
  const int n = net.graph_.size();
  net.params_.resize(n);
  for (int id = 0; id < n; ++id) {
    const LayerSpec& l = net.graph_.layers[id];
    const Shape in =
        l.inputs.empty() ? Shape{} : net.declared_shapes_[l.inputs[0]];
    Rng rng(Mix64(seed ^ Mix64(static_cast<std::uint64_t>(id) + 1)));
    for (const ParamInfo& info : LayerParams(l, in)) {
      Param<Real> p;
      p.name = info.name;
      p.dims = info.dims;
      p.trainable = info.trainable;
      std::size_t count = 1;
      for (int d : info.dims) count *= static_cast<std::size_t>(d);
      p.value.assign(count, Real(0));
      p.grad.assign(count, Real(0));
      double fan_in = 0.0;
      if (info.name == "weight") {
        if (l.kind == LayerKind::kConv2d)
          fan_in = double(l.kernel_h) * l.kernel_w * in.c;
        else if (l.kind == LayerKind::kDepthwiseConv2d)
          fan_in = double(l.kernel_h) * l.kernel_w;
        else
          fan_in = info.dims[0];
      } else if (info.name == "w1" || info.name == "w2") {
        fan_in = info.dims[0];
      }
      if (fan_in > 0.0) {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
        for (Real& v : p.value) v = static_cast<Real>(dist(rng));
      } else if (info.name == "gamma" || info.name == "running_var") {
        std::fill(p.value.begin(), p.value.end(), Real(1));
      }
      net.params_[id].push_back(std::move(p));
    }
  }
  return net;
}

template <class Real>
Param<Real>& Network<Real>::param(int layer, std::string_view name) {
  for (auto& p : params_.at(layer))
    if (p.name == name) return p;
  ThrowData("layer " + std::to_string(layer) + " has no parameter " +
            std::string(name));
}

template <class Real>
const Param<Real>& Network<Real>::param(int layer, std::string_view name) const {
  return const_cast<Network*>(this)->param(layer, name);
}

template <class Real>
std::size_t Network<Real>::NumTrainableParams() const {
  std::size_t n = 0;
  for (const auto& layer : params_)
    for (const auto& p : layer)
      if (p.trainable) n += p.value.size();
  return n;
}

template <class Real>
std::size_t Network<Real>::NumParams() const {
  std::size_t n = 0;
  for (const auto& layer : params_)
    for (const auto& p : layer) n += p.value.size();
  return n;
}

template <class Real>
void Network<Real>::ZeroGrad() {
  for (auto& layer : params_)
    for (auto& p : layer) std::fill(p.grad.begin(), p.grad.end(), Real(0));
}

template <class Real>
void Network<Real>::ClearCaches() {
  acts_.clear();
  grads_.clear();
  grad_live_.clear();
  aux_.clear();
  aux_index_.clear();
}

template <class Real>
const Tensor4<Real>& Network<Real>::Forward(const Tensor4<Real>& x,
                                            Mode mode) {
  const std::vector<Shape> shapes = InferShapes(graph_, x.shape);
  (void)shapes;
  const int n = graph_.size();
  acts_.resize(n);
  aux_.assign(n, {});
  aux_index_.assign(n, {});
  last_mode_ = mode;
  acts_[0] = x;
  CheckFinite(acts_[0], 0, graph_.layers[0]);
  for (int id = 1; id < n; ++id) {
    ForwardLayer(id, mode);
    CheckFinite(acts_[id], id, graph_.layers[id]);
  }
  return acts_[n - 1];
}

template <class Real>
void Network<Real>::ForwardLayer(int id, Mode mode) {
  const LayerSpec& l = graph_.layers[id];
  const Tensor4<Real>& x = acts_[l.inputs[0]];
  const Shape in = x.shape;
  Tensor4<Real>& y = acts_[id];
  auto& aux = aux_[id];

  switch (l.kind) {
    case LayerKind::kInput:
      break;

    case LayerKind::kConv2d: {
      const Shape out{in.b, (in.h + l.stride_h - 1) / l.stride_h,
                      (in.w + l.stride_w - 1) / l.stride_w, l.filters};
      y.Reset(out);
      const auto& w = params_[id][0].value;
      const auto& bias = params_[id][1].value;
      const int patch = l.kernel_h * l.kernel_w * in.c;
      CMapMat<Real> W(w.data(), patch, l.filters);
      Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> B(bias.data(),
                                                                 l.filters);
      std::vector<Real> cols;
      const int pixels = out.h * out.w;
      for (int b = 0; b < in.b; ++b) {
        MapMat<Real> Y(y.item(b), pixels, l.filters);
        if (IsPointwise(l)) {
          CMapMat<Real> X(x.item(b), pixels, in.c);
          Y.noalias() = X * W;
        } else {
          Im2Col(x.item(b), in, out, l, cols);
          CMapMat<Real> C(cols.data(), pixels, patch);
          Y.noalias() = C * W;
        }
        Y.rowwise() += B;
      }
      break;
    }

    case LayerKind::kDepthwiseConv2d: {
      const Shape out{in.b, (in.h + l.stride_h - 1) / l.stride_h,
                      (in.w + l.stride_w - 1) / l.stride_w, in.c};
      y.Reset(out);
      const auto& w = params_[id][0].value;
      const auto& bias = params_[id][1].value;
      const Padding pad = SamePadding(in, out, l);
      for (int b = 0; b < in.b; ++b)
        for (int oy = 0; oy < out.h; ++oy)
          for (int ox = 0; ox < out.w; ++ox) {
            Real* dst = &y.at(b, oy, ox, 0);
            for (int c = 0; c < in.c; ++c) dst[c] = bias[c];
            for (int ky = 0; ky < l.kernel_h; ++ky) {
              const int iy = oy * l.stride_h - pad.top + ky;
              if (iy < 0 || iy >= in.h) continue;
              for (int kx = 0; kx < l.kernel_w; ++kx) {
                const int ix = ox * l.stride_w - pad.left + kx;
                if (ix < 0 || ix >= in.w) continue;
                const Real* src = x.data.data() + x.index(b, iy, ix, 0);
                const Real* wk = &w[(ky * l.kernel_w + kx) * in.c];
                for (int c = 0; c < in.c; ++c) dst[c] += src[c] * wk[c];
              }
            }
          }
      break;
    }

    case LayerKind::kBatchNorm: {
      y.Reset(in);
      auto& P = params_[id];
      const auto& gamma = P[0].value;
      const auto& beta = P[1].value;
      auto& rmean = P[2].value;
      auto& rvar = P[3].value;
      const std::size_t count = static_cast<std::size_t>(in.b) * in.h * in.w;
      const int C = in.c;
      aux.assign(2, {});
      auto& xhat = aux[0];
      auto& inv_std = aux[1];
      xhat.assign(x.data.size(), Real(0));
      inv_std.assign(C, Real(0));
      if (mode == Mode::kTrain) {
        std::vector<double> mean(C, 0.0), var(C, 0.0);
        for (std::size_t i = 0; i < count; ++i)
          for (int c = 0; c < C; ++c) mean[c] += x.data[i * C + c];
        for (int c = 0; c < C; ++c) mean[c] /= static_cast<double>(count);
        for (std::size_t i = 0; i < count; ++i)
          for (int c = 0; c < C; ++c) {
            const double d = x.data[i * C + c] - mean[c];
            var[c] += d * d;
          }
        for (int c = 0; c < C; ++c) {
          var[c] /= static_cast<double>(count);
          inv_std[c] = static_cast<Real>(1.0 / std::sqrt(var[c] + kBatchNormEps));
          rmean[c] = static_cast<Real>(kBatchNormMomentum * rmean[c] +
                                       (1.0 - kBatchNormMomentum) * mean[c]);
          rvar[c] = static_cast<Real>(kBatchNormMomentum * rvar[c] +
                                      (1.0 - kBatchNormMomentum) * var[c]);
        }
        for (std::size_t i = 0; i < count; ++i)
          for (int c = 0; c < C; ++c) {
            const Real xh =
                static_cast<Real>((x.data[i * C + c] - mean[c]) * inv_std[c]);
            xhat[i * C + c] = xh;
            y.data[i * C + c] = gamma[c] * xh + beta[c];
          }
      } else {
        for (int c = 0; c < C; ++c)
          inv_std[c] = static_cast<Real>(1.0 / std::sqrt(double(rvar[c]) + kBatchNormEps));
        for (std::size_t i = 0; i < count; ++i)
          for (int c = 0; c < C; ++c) {
            const Real xh = (x.data[i * C + c] - rmean[c]) * inv_std[c];
            xhat[i * C + c] = xh;
            y.data[i * C + c] = gamma[c] * xh + beta[c];
          }
      }
      break;
    }

    case LayerKind::kRelu:
      y.Reset(in);
      for (std::size_t i = 0; i < x.data.size(); ++i)
        y.data[i] = x.data[i] > Real(0) ? x.data[i] : Real(0);
      break;

    case LayerKind::kMaxPool: {
      const Shape out{in.b, in.h / l.pool_h, in.w / l.pool_w, in.c};
      y.Reset(out);
      auto& arg = aux_index_[id];
      arg.assign(out.size(), 0);
      for (int b = 0; b < out.b; ++b)
        for (int oy = 0; oy < out.h; ++oy)
          for (int ox = 0; ox < out.w; ++ox)
            for (int c = 0; c < out.c; ++c) {
              Real best = -std::numeric_limits<Real>::infinity();
              int best_idx = 0;
              for (int py = 0; py < l.pool_h; ++py)
                for (int px = 0; px < l.pool_w; ++px) {
                  const std::size_t idx =
                      x.index(b, oy * l.pool_h + py, ox * l.pool_w + px, c);
                  if (x.data[idx] > best) {
                    best = x.data[idx];
                    best_idx = static_cast<int>(idx);
                  }
                }
              const std::size_t o = y.index(b, oy, ox, c);
              y.data[o] = best;
              arg[o] = best_idx;
            }
      break;
    }

    case LayerKind::kGlobalAvgPool: {
      y.Reset({in.b, 1, 1, in.c});
      const std::size_t pixels = static_cast<std::size_t>(in.h) * in.w;
      for (int b = 0; b < in.b; ++b) {
        const Real* src = x.item(b);
        std::vector<double> acc(in.c, 0.0);
        for (std::size_t p = 0; p < pixels; ++p)
          for (int c = 0; c < in.c; ++c) acc[c] += src[p * in.c + c];
        for (int c = 0; c < in.c; ++c)
          y.at(b, 0, 0, c) = static_cast<Real>(acc[c] / static_cast<double>(pixels));
      }
      break;
    }

    case LayerKind::kDense: {
      y.Reset({in.b, 1, 1, l.filters});
      const int fan_in = static_cast<int>(in.per_item());
      CMapMat<Real> X(x.data.data(), in.b, fan_in);
      CMapMat<Real> W(params_[id][0].value.data(), fan_in, l.filters);
      Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> B(
          params_[id][1].value.data(), l.filters);
      MapMat<Real> Y(y.data.data(), in.b, l.filters);
      Y.noalias() = X * W;
      Y.rowwise() += B;
      break;
    }

    case LayerKind::kSoftmax: {
      y.Reset(in);
      const std::size_t rows = x.data.size() / in.c;
      for (std::size_t r = 0; r < rows; ++r) {
        const Real* src = x.data.data() + r * in.c;
        Real* dst = y.data.data() + r * in.c;
        const Real mx = *std::max_element(src, src + in.c);
        Real sum = 0;
        for (int c = 0; c < in.c; ++c) {
          dst[c] = std::exp(src[c] - mx);
          sum += dst[c];
        }
        for (int c = 0; c < in.c; ++c) dst[c] /= sum;
      }
      break;
    }

    case LayerKind::kDropout: {
      y = x;
      if (mode == Mode::kTrain && l.rate > 0.0f) {
        aux.assign(1, std::vector<Real>(x.data.size()));
        const Real keep_scale = Real(1) / (Real(1) - static_cast<Real>(l.rate));
        std::bernoulli_distribution keep(1.0 - l.rate);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
          aux[0][i] = keep(dropout_rng_) ? keep_scale : Real(0);
          y.data[i] *= aux[0][i];
        }
      }
      break;
    }

    case LayerKind::kChannelAttention: {
      y.Reset(in);
      const auto& P = params_[id];
      const int C = in.c;
      const int H = P[0].dims[1];
      const std::size_t pixels = static_cast<std::size_t>(in.h) * in.w;
      aux.assign(3, {});
      auto& s = aux[0];  // B x C squeeze
      auto& z = aux[1];  // B x H hidden (post ReLU)
      auto& g = aux[2];  // B x C gate
      s.assign(static_cast<std::size_t>(in.b) * C, Real(0));
      for (int b = 0; b < in.b; ++b) {
        const Real* src = x.item(b);
        for (std::size_t p = 0; p < pixels; ++p)
          for (int c = 0; c < C; ++c) s[b * C + c] += src[p * C + c];
        for (int c = 0; c < C; ++c) s[b * C + c] /= static_cast<Real>(pixels);
      }
      CMapMat<Real> S(s.data(), in.b, C);
      CMapMat<Real> W1(P[0].value.data(), C, H);
      CMapMat<Real> W2(P[2].value.data(), H, C);
      Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> B1(P[1].value.data(), H);
      Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> B2(P[3].value.data(), C);
      z.assign(static_cast<std::size_t>(in.b) * H, Real(0));
      g.assign(static_cast<std::size_t>(in.b) * C, Real(0));
      MapMat<Real> Z(z.data(), in.b, H);
      MapMat<Real> G(g.data(), in.b, C);
      Z.noalias() = S * W1;
      Z.rowwise() += B1;
      Z = Z.cwiseMax(Real(0));
      G.noalias() = Z * W2;
      G.rowwise() += B2;
      for (Real& v : g) v = Sigmoid(v);
      for (int b = 0; b < in.b; ++b) {
        const Real* src = x.item(b);
        Real* dst = y.item(b);
        for (std::size_t p = 0; p < pixels; ++p)
          for (int c = 0; c < C; ++c) dst[p * C + c] = src[p * C + c] * g[b * C + c];
      }
      break;
    }

    case LayerKind::kResidualAdd: {
      const Tensor4<Real>& x2 = acts_[l.inputs[1]];
      y = x;
      for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += x2.data[i];
      break;
    }

    case LayerKind::kFreqSplit: {
      const int width = l.split_hi - l.split_lo;
      y.Reset({in.b, in.h, width, in.c});
      for (int b = 0; b < in.b; ++b)
        for (int t = 0; t < in.h; ++t) {
          const Real* src = x.data.data() + x.index(b, t, l.split_lo, 0);
          std::copy(src, src + static_cast<std::size_t>(width) * in.c,
                    &y.at(b, t, 0, 0));
        }
      break;
    }

    case LayerKind::kConcat: {
      Shape out = in;
      out.c = 0;
      for (int src : l.inputs) out.c += acts_[src].shape.c;
      y.Reset(out);
      const std::size_t rows = static_cast<std::size_t>(out.b) * out.h * out.w;
      int offset = 0;
      for (int src : l.inputs) {
        const Tensor4<Real>& part = acts_[src];
        const int pc = part.shape.c;
        for (std::size_t r = 0; r < rows; ++r)
          std::copy(part.data.data() + r * pc, part.data.data() + (r + 1) * pc,
                    y.data.data() + r * out.c + offset);
        offset += pc;
      }
      break;
    }
  }
}

template <class Real>
Tensor4<Real>& Network<Real>::GradFor(int id) {
  if (!grad_live_[id]) {
    grads_[id].Reset(acts_[id].shape);
    grad_live_[id] = true;
  }
  return grads_[id];
}

template <class Real>
double CrossEntropy(const Tensor4<Real>& probs, std::span<const Real> targets) {
  const int K = probs.shape.c;
  const std::size_t rows = probs.data.size() / K;
  if (targets.size() != probs.data.size())
    ThrowShape("cross-entropy: targets have " + std::to_string(targets.size()) +
               " entries, predictions " + std::to_string(probs.data.size()));
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.data.size(); ++i) {
    if (targets[i] == Real(0)) continue;
    const double p = std::max(static_cast<double>(probs.data[i]), 1e-30);
    loss -= static_cast<double>(targets[i]) * std::log(p);
  }
  loss /= static_cast<double>(rows);
  if (!std::isfinite(loss)) ThrowNumeric("non-finite loss");
  return loss;
}

template <class Real>
double Network<Real>::Backward(std::span<const Real> targets) {
  const int n = graph_.size();
  if (acts_.size() != static_cast<std::size_t>(n))
    ThrowData("backward called before forward");
  const LayerSpec& out = graph_.layers[n - 1];
  if (out.kind != LayerKind::kSoftmax)
    ThrowData("backward with targets requires a softmax output layer");
  const Tensor4<Real>& probs = acts_[n - 1];
  const double loss = CrossEntropy(probs, targets);

  ZeroGrad();
  grads_.assign(n, {});
  grad_live_.assign(n, false);
  const int K = probs.shape.c;
  const Real inv_rows = Real(1) / static_cast<Real>(probs.data.size() / K);
  // Softmax + cross-entropy combine into (p - t) / rows.
  Tensor4<Real>& g = GradFor(out.inputs[0]);
  for (std::size_t i = 0; i < probs.data.size(); ++i)
    g.data[i] += (probs.data[i] - targets[i]) * inv_rows;
  for (int id = n - 2; id >= 1; --id)
    if (grad_live_[id]) BackwardLayer(id);
  return loss;
}

template <class Real>
void Network<Real>::BackwardFrom(const Tensor4<Real>& output_grad) {
  const int n = graph_.size();
  if (acts_.size() != static_cast<std::size_t>(n))
    ThrowData("backward called before forward");
  if (!(output_grad.shape == acts_[n - 1].shape))
    ThrowShape("output gradient shape mismatch");
  ZeroGrad();
  grads_.assign(n, {});
  grad_live_.assign(n, false);
  GradFor(n - 1) = output_grad;
  for (int id = n - 1; id >= 1; --id)
    if (grad_live_[id]) BackwardLayer(id);
}

template <class Real>
void Network<Real>::BackwardLayer(int id) {
  const LayerSpec& l = graph_.layers[id];
  const Tensor4<Real>& dy = grads_[id];
  const Tensor4<Real>& x = acts_[l.inputs[0]];
  const Shape in = x.shape;
  const Shape out = acts_[id].shape;
  auto& aux = aux_[id];

  switch (l.kind) {
    case LayerKind::kInput:
      break;

    case LayerKind::kConv2d: {
      auto& P = params_[id];
      const int patch = l.kernel_h * l.kernel_w * in.c;
      const int pixels = out.h * out.w;
      CMapMat<Real> W(P[0].value.data(), patch, l.filters);
      MapMat<Real> dW(P[0].grad.data(), patch, l.filters);
      Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>> dB(P[1].grad.data(),
                                                            l.filters);
      Tensor4<Real>& dx = GradFor(l.inputs[0]);
      std::vector<Real> cols, dcols;
      for (int b = 0; b < in.b; ++b) {
        CMapMat<Real> dY(dy.item(b), pixels, l.filters);
        dB += dY.colwise().sum();
        if (IsPointwise(l)) {
          CMapMat<Real> X(x.item(b), pixels, in.c);
          dW.noalias() += X.transpose() * dY;
          MapMat<Real> dX(dx.item(b), pixels, in.c);
          dX.noalias() += dY * W.transpose();
        } else {
          Im2Col(x.item(b), in, out, l, cols);
          CMapMat<Real> C(cols.data(), pixels, patch);
          dW.noalias() += C.transpose() * dY;
          dcols.assign(static_cast<std::size_t>(pixels) * patch, Real(0));
          MapMat<Real> dC(dcols.data(), pixels, patch);
          dC.noalias() = dY * W.transpose();
          Col2ImAdd(dcols, in, out, l, dx.item(b));
        }
      }
      break;
    }

    case LayerKind::kDepthwiseConv2d: {
      auto& P = params_[id];
      const auto& w = P[0].value;
      auto& dw = P[0].grad;
      auto& db = P[1].grad;
      Tensor4<Real>& dx = GradFor(l.inputs[0]);
      const Padding pad = SamePadding(in, out, l);
      for (int b = 0; b < in.b; ++b)
        for (int oy = 0; oy < out.h; ++oy)
          for (int ox = 0; ox < out.w; ++ox) {
            const Real* g = dy.data.data() + dy.index(b, oy, ox, 0);
            for (int c = 0; c < in.c; ++c) db[c] += g[c];
            for (int ky = 0; ky < l.kernel_h; ++ky) {
              const int iy = oy * l.stride_h - pad.top + ky;
              if (iy < 0 || iy >= in.h) continue;
              for (int kx = 0; kx < l.kernel_w; ++kx) {
                const int ix = ox * l.stride_w - pad.left + kx;
                if (ix < 0 || ix >= in.w) continue;
                const Real* src = x.data.data() + x.index(b, iy, ix, 0);
                Real* dsrc = &dx.at(b, iy, ix, 0);
                const std::size_t k = static_cast<std::size_t>(ky * l.kernel_w + kx) * in.c;
                for (int c = 0; c < in.c; ++c) {
                  dw[k + c] += g[c] * src[c];
                  dsrc[c] += g[c] * w[k + c];
                }
              }
            }
          }
      break;
    }

    case LayerKind::kBatchNorm: {
      auto& P = params_[id];
      const auto& gamma = P[0].value;
      auto& dgamma = P[0].grad;
      auto& dbeta = P[1].grad;
      const auto& xhat = aux[0];
      const auto& inv_std = aux[1];
      const int C = in.c;
      const std::size_t count = static_cast<std::size_t>(in.b) * in.h * in.w;
      Tensor4<Real>& dx = GradFor(l.inputs[0]);
      std::vector<double> sum_dy(C, 0.0), sum_dy_xhat(C, 0.0);
      for (std::size_t i = 0; i < count; ++i)
        for (int c = 0; c < C; ++c) {
          const double g = dy.data[i * C + c];
          sum_dy[c] += g;
          sum_dy_xhat[c] += g * xhat[i * C + c];
        }
      for (int c = 0; c < C; ++c) {
        dgamma[c] += static_cast<Real>(sum_dy_xhat[c]);
        dbeta[c] += static_cast<Real>(sum_dy[c]);
      }
      if (last_mode_ == Mode::kTrain) {
        const double inv_n = 1.0 / static_cast<double>(count);
        for (std::size_t i = 0; i < count; ++i)
          for (int c = 0; c < C; ++c) {
            const double g = dy.data[i * C + c];
            const double v = gamma[c] * inv_std[c] *
                             (g - inv_n * sum_dy[c] -
                              xhat[i * C + c] * inv_n * sum_dy_xhat[c]);
            dx.data[i * C + c] += static_cast<Real>(v);
          }
      } else {
        for (std::size_t i = 0; i < count; ++i)
          for (int c = 0; c < C; ++c)
            dx.data[i * C + c] += dy.data[i * C + c] * gamma[c] * inv_std[c];
      }
      break;
    }

    case LayerKind::kRelu: {
      Tensor4<Real>& dx = GradFor(l.inputs[0]);
      for (std::size_t i = 0; i < x.data.size(); ++i)
        if (x.data[i] > Real(0)) dx.data[i] += dy.data[i];
      break;
    }

    case LayerKind::kMaxPool: {
      Tensor4<Real>& dx = GradFor(l.inputs[0]);
      const auto& arg = aux_index_[id];
      for (std::size_t o = 0; o < dy.data.size(); ++o)
        dx.data[arg[o]] += dy.data[o];
      break;
    }

    case LayerKind::kGlobalAvgPool: {
      Tensor4<Real>& dx = GradFor(l.inputs[0]);
      const std::size_t pixels = static_cast<std::size_t>(in.h) * in.w;
      const Real inv = Real(1) / static_cast<Real>(pixels);
      for (int b = 0; b < in.b; ++b) {
        Real* d = dx.item(b);
        for (std::size_t p = 0; p < pixels; ++p)
          for (int c = 0; c < in.c; ++c) d[p * in.c + c] += dy.at(b, 0, 0, c) * inv;
      }
      break;
    }

    case LayerKind::kDense: {
      auto& P = params_[id];
      const int fan_in = static_cast<int>(in.per_item());
      CMapMat<Real> X(x.data.data(), in.b, fan_in);
      CMapMat<Real> W(P[0].value.data(), fan_in, l.filters);
      CMapMat<Real> dY(dy.data.data(), in.b, l.filters);
      MapMat<Real> dW(P[0].grad.data(), fan_in, l.filters);
      Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>> dB(P[1].grad.data(),
                                                            l.filters);
      dW.noalias() += X.transpose() * dY;
      dB += dY.colwise().sum();
      Tensor4<Real>& dx = GradFor(l.inputs[0]);
      MapMat<Real> dX(dx.data.data(), in.b, fan_in);
      dX.noalias() += dY * W.transpose();
      break;
    }

    case LayerKind::kSoftmax: {
      Tensor4<Real>& dx = GradFor(l.inputs[0]);
      const Tensor4<Real>& p = acts_[id];
      const std::size_t rows = p.data.size() / in.c;
      for (std::size_t r = 0; r < rows; ++r) {
        const Real* pr = p.data.data() + r * in.c;
        const Real* gr = dy.data.data() + r * in.c;
        Real dot = 0;
        for (int c = 0; c < in.c; ++c) dot += pr[c] * gr[c];
        for (int c = 0; c < in.c; ++c)
          dx.data[r * in.c + c] += pr[c] * (gr[c] - dot);
      }
      break;
    }

    case LayerKind::kDropout: {
      Tensor4<Real>& dx = GradFor(l.inputs[0]);
      if (aux.empty()) {
        for (std::size_t i = 0; i < dy.data.size(); ++i) dx.data[i] += dy.data[i];
      } else {
        for (std::size_t i = 0; i < dy.data.size(); ++i)
          dx.data[i] += dy.data[i] * aux[0][i];
      }
      break;
    }

    case LayerKind::kChannelAttention: {
      auto& P = params_[id];
      const int C = in.c;
      const int H = P[0].dims[1];
      const std::size_t pixels = static_cast<std::size_t>(in.h) * in.w;
      const auto& s = aux[0];
      const auto& z = aux[1];
      const auto& g = aux[2];
      Tensor4<Real>& dx = GradFor(l.inputs[0]);
      // dL/dgate, then through sigmoid.
      std::vector<Real> da2(static_cast<std::size_t>(in.b) * C, Real(0));
      for (int b = 0; b < in.b; ++b) {
        const Real* src = x.item(b);
        const Real* gy = dy.item(b);
        Real* d = dx.item(b);
        for (std::size_t p = 0; p < pixels; ++p)
          for (int c = 0; c < C; ++c) {
            da2[b * C + c] += gy[p * C + c] * src[p * C + c];
            d[p * C + c] += gy[p * C + c] * g[b * C + c];
          }
      }
      for (std::size_t i = 0; i < da2.size(); ++i) da2[i] *= g[i] * (Real(1) - g[i]);
      CMapMat<Real> S(s.data(), in.b, C);
      CMapMat<Real> Z(z.data(), in.b, H);
      CMapMat<Real> W1(P[0].value.data(), C, H);
      CMapMat<Real> W2(P[2].value.data(), H, C);
      CMapMat<Real> DA2(da2.data(), in.b, C);
      MapMat<Real> dW1(P[0].grad.data(), C, H);
      MapMat<Real> dW2(P[2].grad.data(), H, C);
      Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>> dB1(P[1].grad.data(), H);
      Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>> dB2(P[3].grad.data(), C);
      dW2.noalias() += Z.transpose() * DA2;
      dB2 += DA2.colwise().sum();
      RowMat<Real> dZ = DA2 * W2.transpose();
      for (int b = 0; b < in.b; ++b)
        for (int h = 0; h < H; ++h)
          if (!(Z(b, h) > Real(0))) dZ(b, h) = Real(0);
      dW1.noalias() += S.transpose() * dZ;
      dB1 += dZ.colwise().sum();
      RowMat<Real> dS = dZ * W1.transpose();
      const Real inv = Real(1) / static_cast<Real>(pixels);
      for (int b = 0; b < in.b; ++b) {
        Real* d = dx.item(b);
        for (std::size_t p = 0; p < pixels; ++p)
          for (int c = 0; c < C; ++c) d[p * C + c] += dS(b, c) * inv;
      }
      break;
    }

    case LayerKind::kResidualAdd: {
      for (int src : l.inputs) {
        Tensor4<Real>& dx = GradFor(src);
        for (std::size_t i = 0; i < dy.data.size(); ++i) dx.data[i] += dy.data[i];
      }
      break;
    }

    case LayerKind::kFreqSplit: {
      Tensor4<Real>& dx = GradFor(l.inputs[0]);
      const int width = l.split_hi - l.split_lo;
      for (int b = 0; b < in.b; ++b)
        for (int t = 0; t < in.h; ++t) {
          const Real* src = dy.data.data() + dy.index(b, t, 0, 0);
          Real* dst = &dx.at(b, t, l.split_lo, 0);
          for (std::size_t i = 0; i < static_cast<std::size_t>(width) * in.c; ++i)
            dst[i] += src[i];
        }
      break;
    }

    case LayerKind::kConcat: {
      const std::size_t rows = static_cast<std::size_t>(out.b) * out.h * out.w;
      int offset = 0;
      for (int src : l.inputs) {
        Tensor4<Real>& dx = GradFor(src);
        const int pc = dx.shape.c;
        for (std::size_t r = 0; r < rows; ++r)
          for (int c = 0; c < pc; ++c)
            dx.data[r * pc + c] += dy.data[r * out.c + offset + c];
        offset += pc;
      }
      break;
    }
  }
}

template <class Real>
template <class Other>
Network<Other> Network<Real>::Cast() const {
  Network<Other> out;
  out.graph_ = graph_;
  out.declared_shapes_ = declared_shapes_;
  out.params_.resize(params_.size());
  for (std::size_t id = 0; id < params_.size(); ++id)
    for (const auto& p : params_[id]) {
      Param<Other> q;
      q.name = p.name;
      q.dims = p.dims;
      q.trainable = p.trainable;
      q.value.assign(p.value.begin(), p.value.end());
      q.grad.assign(p.grad.size(), Other(0));
      out.params_[id].push_back(std::move(q));
    }
  return out;
}

template class Network<float>;
template class Network<double>;
template Network<double> Network<float>::Cast<double>() const;
template Network<float> Network<double>::Cast<float>() const;
template Network<float> Network<float>::Cast<float>() const;
template double CrossEntropy<float>(const Tensor4<float>&, std::span<const float>);
template double CrossEntropy<double>(const Tensor4<double>&, std::span<const double>);

}  // namespace ascene::nn
