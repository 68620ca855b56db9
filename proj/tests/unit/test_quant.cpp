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

#include <cmath>

#include "ascene/nn/checkpoint.hpp"
#include "ascene/quant/quant.hpp"
#include "ascene/zoo/zoo.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace ascene;
using namespace ascene::quant;
using nn::LayerKind;
using nn::LayerSpec;
using nn::Mode;
using nn::Shape;
using ascene::testing::KindOf;
using ascene::testing::TempDir;

namespace {

LayerSpec Layer(LayerKind kind, std::vector<int> inputs, std::string name) {
  LayerSpec l;
  l.kind = kind;
  l.inputs = std::move(inputs);
  l.name = std::move(name);
  return l;
}

GraphSpec ConvBnNet() {
  GraphSpec g;
  LayerSpec in = Layer(LayerKind::kInput, {}, "input");
  in.input_dims = {1, 8, 8, 3};
  g.Add(in);
  LayerSpec c = Layer(LayerKind::kConv2d, {0}, "conv");
  c.kernel_h = c.kernel_w = 3;
  c.filters = 4;
  g.Add(c);
  g.Add(Layer(LayerKind::kBatchNorm, {1}, "bn"));
  g.Add(Layer(LayerKind::kRelu, {2}, "relu"));
  LayerSpec d = Layer(LayerKind::kDepthwiseConv2d, {3}, "dw");
  d.kernel_h = d.kernel_w = 3;
  g.Add(d);
  g.Add(Layer(LayerKind::kBatchNorm, {4}, "bn2"));
  g.Add(Layer(LayerKind::kGlobalAvgPool, {5}, "gap"));
  LayerSpec fc = Layer(LayerKind::kDense, {6}, "fc");
  fc.filters = 3;
  g.Add(fc);
  g.Add(Layer(LayerKind::kBatchNorm, {7}, "bn3"));
  g.Add(Layer(LayerKind::kSoftmax, {8}, "softmax"));
  return g;
}

void RandomizeBn(Network<float>& net, Rng& rng) {
  for (int l = 0; l < net.num_layers(); ++l) {
    if (net.graph().layers[l].kind != LayerKind::kBatchNorm) continue;
    for (auto& p : net.params(l))
      for (float& v : p.value) {
        if (p.name == "running_var") v = static_cast<float>(Uniform(rng, 0.2, 3.0));
        else if (p.name == "gamma") v = static_cast<float>(Uniform(rng, 0.5, 1.5));
        else v = static_cast<float>(Uniform(rng, -0.5, 0.5));
      }
  }
}

Tensor4<float> RandomInput(Shape s, Rng& rng) {
  Tensor4<float> x(s);
  for (float& v : x.data) v = static_cast<float>(Uniform(rng, -1.0, 1.0));
  return x;
}

}  // namespace

TEST_CASE("quantize tensor endpoints and zero rule") {
  const std::vector<float> w{-1.0f, 0.0f, 1.0f};
  const QuantizedTensor q = QuantizeTensor(w);
  CHECK(q.scale == doctest::Approx(1.0 / 127.0));
  CHECK(q.values == std::vector<std::int8_t>{-127, 0, 127});
  const std::vector<float> z(5, 0.0f);
  const QuantizedTensor qz = QuantizeTensor(z);
  CHECK(qz.scale == 1.0f);
  for (float v : qz.Dequantize()) CHECK(v == 0.0f);
}

TEST_CASE("quantize tensor rounds half away from zero") {
  const std::vector<float> w{127.0f, 0.5f, -0.5f, 1.5f, -2.5f, 2.5f};
  const QuantizedTensor q = QuantizeTensor(w);
  REQUIRE(q.scale == 1.0f);
  CHECK(q.values == std::vector<std::int8_t>{127, 1, -1, 2, -3, 3});
}

TEST_CASE("dequantization error is within half a step") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<float> w(257);
    const double amp = std::pow(10.0, Uniform(rng, -4, 2));
    for (float& v : w) v = static_cast<float>(Uniform(rng, -amp, amp));
    const QuantizedTensor q = QuantizeTensor(w);
    CHECK(q.scale > 0.0f);
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(q.values[i] >= -127);
      CHECK(std::fabs(q.Dequant(i) - w[i]) <= q.scale / 2 * (1 + 1e-6));
    }
  }
  const std::vector<float> bad{1.0f, std::nanf("")};
  CHECK(KindOf([&] { QuantizeTensor(bad); }) == ErrorKind::kNumeric);
  CHECK(KindOf([&] { QuantizeTensor(std::vector<float>{}); }) == ErrorKind::kData);
}

TEST_CASE("identity batch norm folds to the same function") {
  Network<float> net = Network<float>::Build(ConvBnNet(), 3);
  // running var 1 is not quite identity because of eps; make it exact
  for (int l = 0; l < net.num_layers(); ++l)
    if (net.graph().layers[l].kind == LayerKind::kBatchNorm)
      for (float& v : net.param(l, "running_var").value)
        v = static_cast<float>(1.0 - nn::kBatchNormEps);
  const Network<float> folded = FoldBatchNorm(net);
  Rng rng(2);
  const Tensor4<float> x = RandomInput({4, 8, 8, 3}, rng);
  Network<float> a = net;
  Network<float> b = folded;
  const auto ya = a.Forward(x, Mode::kEval);
  const auto yb = b.Forward(x, Mode::kEval);
  for (std::size_t i = 0; i < ya.data.size(); ++i)
    CHECK(yb.data[i] == doctest::Approx(ya.data[i]).epsilon(1e-6));
  CHECK(folded.param(1, "weight").value == net.param(1, "weight").value);
}

TEST_CASE("folded forward matches the unfolded forward") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Network<float> net = Network<float>::Build(ConvBnNet(), trial);
    RandomizeBn(net, rng);
    Network<float> folded = FoldBatchNorm(net);
    CHECK(folded.num_layers() == net.num_layers() - 3);
    CHECK(nn::CountLayers(folded.graph(), LayerKind::kBatchNorm) == 0);
    const Tensor4<float> x = RandomInput({3, 8, 8, 3}, rng);
    const auto ya = net.Forward(x, Mode::kEval);
    const auto yb = folded.Forward(x, Mode::kEval);
    for (std::size_t i = 0; i < ya.data.size(); ++i)
      CHECK(std::fabs(ya.data[i] - yb.data[i]) <= 1e-5);
  }
}

TEST_CASE("batch norm folding rejects unfoldable producers") {
  GraphSpec g;
  LayerSpec in = Layer(LayerKind::kInput, {}, "input");
  in.input_dims = {1, 4, 4, 2};
  g.Add(in);
  g.Add(Layer(LayerKind::kRelu, {0}, "relu"));
  g.Add(Layer(LayerKind::kBatchNorm, {1}, "bn"));
  const Network<float> net = Network<float>::Build(g, 1);
  CHECK(KindOf([&] { FoldBatchNorm(net); }) == ErrorKind::kData);

  GraphSpec shared;
  shared.Add(in);
  LayerSpec c = Layer(LayerKind::kConv2d, {0}, "conv");
  c.kernel_h = c.kernel_w = 1;
  c.filters = 2;
  shared.Add(c);
  shared.Add(Layer(LayerKind::kBatchNorm, {1}, "bn"));
  shared.Add(Layer(LayerKind::kResidualAdd, {2, 1}, "add"));
  const Network<float> net2 = Network<float>::Build(shared, 1);
  CHECK(KindOf([&] { FoldBatchNorm(net2); }) == ErrorKind::kData);
}

TEST_CASE("dense layer integer arithmetic matches a hand computation") {
  GraphSpec g;
  LayerSpec in = Layer(LayerKind::kInput, {}, "input");
  in.input_dims = {1, 1, 1, 3};
  g.Add(in);
  LayerSpec fc = Layer(LayerKind::kDense, {0}, "fc");
  fc.filters = 2;
  g.Add(fc);
  Network<float> net = Network<float>::Build(g, 1);
  // weight is in x out
  net.param(1, "weight").value = {0.5f, -1.0f, 0.25f, 0.75f, -0.125f, 0.3f};
  net.param(1, "bias").value = {0.1f, -0.2f};
  const QuantizedModel m = QuantizeModel(net);
  const QParam& w = m.param(1, "weight");
  REQUIRE(w.quantized);
  // scale = 1/127: 0.5 -> 63.5 -> 64, -1 -> -127, 0.25 -> 31.75 -> 32,
  // 0.75 -> 95.25 -> 95, -0.125 -> -15.875 -> -16, 0.3 -> 38.1 -> 38
  CHECK(w.q.values == std::vector<std::int8_t>{64, -127, 32, 95, -16, 38});

  Tensor4<float> x({1, 1, 1, 3});
  x.data = {0.2f, -0.4f, 1.0f};
  // a_scale = 1/127: 0.2 -> 25.4 -> 25, -0.4 -> -50.8 -> -51, 1 -> 127
  const int qa[3] = {25, -51, 127};
  const int qw[3][2] = {{64, -127}, {32, 95}, {-16, 38}};
  const float a_scale = 1.0f / 127.0f;
  const float w_scale = w.q.scale;
  for (int o = 0; o < 2; ++o) {
    std::int32_t acc = 0;
    for (int i = 0; i < 3; ++i) acc += qa[i] * qw[i][o];
    if (o == 0) CHECK(acc == 25 * 64 - 51 * 32 - 127 * 16);
    const float want = static_cast<float>(acc) * (a_scale * w_scale) +
                       net.param(1, "bias").value[o];
    const Tensor4<float> y = QuantizedForward(m, x);
    CHECK(y.data[o] == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("one-layer quantization error stays within the analytic bound") {
  Rng rng(12);
  GraphSpec g;
  LayerSpec in = Layer(LayerKind::kInput, {}, "input");
  in.input_dims = {1, 1, 1, 64};
  g.Add(in);
  LayerSpec fc = Layer(LayerKind::kDense, {0}, "fc");
  fc.filters = 8;
  g.Add(fc);
  Network<float> net = Network<float>::Build(g, 5);
  const QuantizedModel m = QuantizeModel(net);
  const float sw = m.param(1, "weight").q.scale;
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor4<float> x = RandomInput({1, 1, 1, 64}, rng);
    float amax = 0;
    for (float v : x.data) amax = std::max(amax, std::fabs(v));
    const float sa = amax / 127.0f;
    const auto yf = net.Forward(x, Mode::kEval);
    const auto yq = QuantizedForward(m, x);
    const auto& wv = net.param(1, "weight").value;
    for (int o = 0; o < 8; ++o) {
      double bound = 0;
      for (int i = 0; i < 64; ++i)
        bound += std::fabs(x.data[i]) * sw / 2 + std::fabs(wv[i * 8 + o]) * sa / 2 + sa * sw / 4;
      CHECK(std::fabs(yf.data[o] - yq.data[o]) <= bound * 1.001 + 1e-6);
    }
  }
}

TEST_CASE("all-zero input yields the bias path") {
  GraphSpec g;
  LayerSpec in = Layer(LayerKind::kInput, {}, "input");
  in.input_dims = {1, 1, 1, 4};
  g.Add(in);
  LayerSpec fc = Layer(LayerKind::kDense, {0}, "fc");
  fc.filters = 3;
  g.Add(fc);
  Network<float> net = Network<float>::Build(g, 1);
  net.param(1, "bias").value = {0.3f, -0.1f, 2.0f};
  const QuantizedModel m = QuantizeModel(net);
  const Tensor4<float> x({2, 1, 1, 4});
  const auto y = QuantizedForward(m, x);
  for (int b = 0; b < 2; ++b)
    for (int o = 0; o < 3; ++o)
      CHECK(std::fabs(y.at(b, 0, 0, o) - net.param(1, "bias").value[o]) <= 1e-6);
}

TEST_CASE("weight-only mode equals the dequantized float network") {
  Rng rng(3);
  Network<float> net = Network<float>::Build(ConvBnNet(), 4);
  RandomizeBn(net, rng);
  const QuantizedModel m = QuantizeModel(net);
  const Tensor4<float> x = RandomInput({2, 8, 8, 3}, rng);
  Network<float> deq = m.Dequantized();
  const auto a = deq.Forward(x, Mode::kEval);
  const auto b = QuantizedForward(m, x, ActivationMode::kWeightOnly);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    CHECK(b.data[i] == doctest::Approx(a.data[i]).epsilon(1e-6));
}

TEST_CASE("re-quantizing a dequantized model is idempotent") {
  Rng rng(4);
  Network<float> net = Network<float>::Build(ConvBnNet(), 9);
  RandomizeBn(net, rng);
  const QuantizedModel m = QuantizeModel(net);
  const QuantizedModel again = QuantizeModel(m.Dequantized());
  REQUIRE(again.params.size() == m.params.size());
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    CHECK(again.params[i].quantized == m.params[i].quantized);
    if (m.params[i].quantized) CHECK(again.params[i].q.values == m.params[i].q.values);
    else CHECK(again.params[i].f == m.params[i].f);
  }
}

TEST_CASE("quantized file round trip and corruption") {
  TempDir dir;
  const Network<float> net = Network<float>::Build(ConvBnNet(), 2);
  const QuantizedModel m = QuantizeModel(net);
  SaveQuantized(dir / "m.ascq", m);
  const QuantizedModel r = LoadQuantized(dir / "m.ascq");
  CHECK(r.graph == m.graph);
  Rng rng(1);
  const Tensor4<float> x = RandomInput({2, 8, 8, 3}, rng);
  CHECK(QuantizedForward(r, x).data == QuantizedForward(m, x).data);
  std::string bytes = SerializeQuantized(m);
  CHECK(KindOf([&] { DeserializeQuantized(bytes.substr(0, bytes.size() - 5)); }) ==
        ErrorKind::kData);
  bytes[1] = '?';
  CHECK(KindOf([&] { DeserializeQuantized(bytes); }) == ErrorKind::kData);
}

TEST_CASE("accumulator guard rejects oversized dot products") {
  GraphSpec g;
  LayerSpec in = Layer(LayerKind::kInput, {}, "input");
  in.input_dims = {1, 1, 1, static_cast<int>(kMaxMacsPerOutput) + 1};
  g.Add(in);
  LayerSpec fc = Layer(LayerKind::kDense, {0}, "fc");
  fc.filters = 1;
  g.Add(fc);
  const Network<float> net = Network<float>::Build(g, 1);
  CHECK(KindOf([&] { QuantizeModel(net); }) == ErrorKind::kData);
  CHECK(127L * 127L * kMaxMacsPerOutput <= 2147483647L);
  CHECK(127L * 127L * (kMaxMacsPerOutput + 1) > 2147483647L);
}

TEST_CASE("zoo models shrink to a quarter of their weight bytes") {
  for (const auto& name : zoo::ArchNames()) {
    zoo::ArchConfig cfg;
    cfg.arch = zoo::ArchFromName(name);
    const Network<float> net = Network<float>::Build(zoo::Build(cfg), 1);
    const QuantizedModel m = QuantizeModel(net);
    const SizeReport s = MeasureSizes(net, m);
    INFO(name << "\n" << s.ToText());
    CHECK(s.float_file == nn::CheckpointSize(net));
    CHECK(s.quant_file == SerializeQuantized(m).size());
    CHECK(s.weight_ratio() >= 0.24);
    CHECK(s.weight_ratio() <= 0.26);
    CHECK(s.file_ratio() <= 0.30);
    if (cfg.arch == zoo::Arch::kSmallFcnn) CHECK(s.quant_file < 500'000u);
  }
}
