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
#include <functional>
#include <numbers>

#include "ascene/nn/checkpoint.hpp"
#include "ascene/nn/graph.hpp"
#include "ascene/nn/network.hpp"
#include "ascene/nn/optim.hpp"
#include "doctest.h"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace ascene;
using namespace ascene::nn;
using namespace ascene::testing;

TEST_CASE("gradient check: every layer kind") {
  for (const auto& [label, make] : GradCheckCases()) {
    const double worst = WorstGradError(label, make);
    INFO(label << " worst relative error " << worst);
    CHECK(worst <= kGradTol);
  }
}

TEST_CASE("cross-entropy backward matches finite differences of the loss") {
  GraphSpec g;
  g.Add(Input(3, 3, 2));
  g.Add(Conv(0, 3, 3));
  g.Add(Make(LayerKind::kGlobalAvgPool, {1}));
  LayerSpec d = Make(LayerKind::kDense, {2});
  d.filters = 4;
  g.Add(d);
  g.Add(Make(LayerKind::kSoftmax, {3}));
  Rng rng(17);
  Network<double> net = Network<double>::Build(g, 3);
  Randomize(net, rng);
  Tensor4<double> x = RandomTensor<double>({3, 3, 3, 2}, rng);
  std::vector<double> t(12, 0.0);
  t[1] = 1.0;
  t[4] = 0.3;
  t[7] = 0.7;
  t[8] = 0.5;
  t[11] = 0.5;
  net.Forward(x, Mode::kTrain);
  const double loss0 = net.Backward(t);
  CHECK(loss0 == doctest::Approx(CrossEntropy(net.activation(4), std::span<const double>(t))));
  std::vector<double>& w = net.param(3, "weight").value;
  const std::vector<double> analytic = net.param(3, "weight").grad;
  std::vector<double> numeric(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double keep = w[i];
    w[i] = keep + 1e-6;
    const double up = CrossEntropy(net.Forward(x, Mode::kTrain), std::span<const double>(t));
    w[i] = keep - 1e-6;
    const double down = CrossEntropy(net.Forward(x, Mode::kTrain), std::span<const double>(t));
    w[i] = keep;
    numeric[i] = (up - down) / 2e-6;
  }
  CHECK(RelError(analytic, numeric) <= kGradTol);
}

TEST_CASE("uniform prediction has loss ln K") {
  Tensor4<double> p({2, 1, 1, 10}, 0.1);
  std::vector<double> t(20, 0.0);
  t[3] = 1.0;
  t[19] = 1.0;
  CHECK(CrossEntropy(p, std::span<const double>(t)) == doctest::Approx(std::log(10.0)));
}

TEST_CASE("conv forward matches a direct same-padded convolution") {
  Rng rng(5);
  for (int stride : {1, 2}) {
    GraphSpec g;
    g.Add(Input(5, 6, 2));
    g.Add(Conv(0, 3, 3, stride));
    Network<double> net = Network<double>::Build(g, 1);
    Randomize(net, rng);
    const Tensor4<double> x = RandomTensor<double>({2, 5, 6, 2}, rng);
    const Tensor4<double> y = net.Forward(x, Mode::kEval);
    const auto& w = net.param(1, "weight").value;
    const auto& b = net.param(1, "bias").value;
    const int oh = (5 + stride - 1) / stride, ow = (6 + stride - 1) / stride;
    REQUIRE(y.shape == Shape{2, oh, ow, 3});
    const int ph = std::max((oh - 1) * stride + 3 - 5, 0) / 2;
    const int pw = std::max((ow - 1) * stride + 3 - 6, 0) / 2;
    for (int n = 0; n < 2; ++n)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j)
          for (int o = 0; o < 3; ++o) {
            double acc = b[o];
            for (int ki = 0; ki < 3; ++ki)
              for (int kj = 0; kj < 3; ++kj) {
                const int r = i * stride + ki - ph, c = j * stride + kj - pw;
                if (r < 0 || r >= 5 || c < 0 || c >= 6) continue;
                for (int ci = 0; ci < 2; ++ci)
                  acc += x.at(n, r, c, ci) * w[((ki * 3 + kj) * 2 + ci) * 3 + o];
              }
            CHECK(y.at(n, i, j, o) == doctest::Approx(acc).epsilon(1e-12));
          }
  }
}

TEST_CASE("batch norm eval uses running statistics") {
  GraphSpec g;
  g.Add(Input(1, 1, 2));
  g.Add(Make(LayerKind::kBatchNorm, {0}));
  Network<double> net = Network<double>::Build(g, 1);
  net.param(1, "running_mean").value = {1.0, -2.0};
  net.param(1, "running_var").value = {4.0, 0.25};
  net.param(1, "gamma").value = {2.0, 1.0};
  net.param(1, "beta").value = {0.5, 0.0};
  Tensor4<double> x({1, 1, 1, 2});
  x.data = {3.0, -1.0};
  const auto& y = net.Forward(x, Mode::kEval);
  CHECK(y.data[0] == doctest::Approx(2.0 * 2.0 / std::sqrt(4.0 + kBatchNormEps) + 0.5));
  CHECK(y.data[1] == doctest::Approx(1.0 / std::sqrt(0.25 + kBatchNormEps)));
}

TEST_CASE("batch norm running statistics update with momentum") {
  GraphSpec g;
  g.Add(Input(1, 1, 1));
  g.Add(Make(LayerKind::kBatchNorm, {0}));
  Network<double> net = Network<double>::Build(g, 1);
  Tensor4<double> x({4, 1, 1, 1});
  x.data = {1.0, 2.0, 3.0, 6.0};
  net.Forward(x, Mode::kTrain);
  const double mean = 3.0;
  const double var = (4.0 + 1.0 + 0.0 + 9.0) / 4.0;
  CHECK(net.param(1, "running_mean").value[0] ==
        doctest::Approx(kBatchNormMomentum * 0.0 + (1 - kBatchNormMomentum) * mean));
  const double rv = net.param(1, "running_var").value[0];
  // biased or unbiased batch variance are both acceptable conventions
  const bool biased = std::fabs(rv - (0.9 + 0.1 * var)) < 1e-12;
  const bool unbiased = std::fabs(rv - (0.9 + 0.1 * var * 4.0 / 3.0)) < 1e-12;
  CHECK((biased || unbiased));
}

TEST_CASE("dropout is identity in eval and rescales in train") {
  GraphSpec g;
  g.Add(Input(4, 4, 4));
  LayerSpec l = Make(LayerKind::kDropout, {0});
  l.rate = 0.5f;
  g.Add(l);
  Network<double> net = Network<double>::Build(g, 1);
  Tensor4<double> x({2, 4, 4, 4}, 1.0);
  for (double v : net.Forward(x, Mode::kEval).data) CHECK(v == 1.0);
  int kept = 0;
  for (double v : net.Forward(x, Mode::kTrain).data) {
    CHECK((v == 0.0 || v == doctest::Approx(2.0)));
    kept += v != 0.0;
  }
  CHECK(kept > 20);
  CHECK(kept < 108);
}

TEST_CASE("cosine restart schedule") {
  ScheduleConfig cfg;
  cfg.lr_max = 0.1;
  cfg.lr_min = 1e-5;
  cfg.first_cycle_len = 10;
  cfg.cycle_mult = 2.0;
  CHECK(CosineRestartLr(0, cfg) == doctest::Approx(0.1));
  CHECK(CycleLr(10, 10, cfg) == doctest::Approx(1e-5));
  CHECK(CycleLr(5, 10, cfg) == doctest::Approx((0.1 + 1e-5) / 2));
  // restarts at 10, then 30, 70
  CHECK(LocateCycle(9, cfg).cycle == 0);
  CHECK(LocateCycle(10, cfg).cycle == 1);
  CHECK(LocateCycle(10, cfg).length == 20);
  CHECK(LocateCycle(29, cfg).offset == 19);
  CHECK(LocateCycle(30, cfg).cycle == 2);
  CHECK(LocateCycle(70, cfg).cycle == 3);
  CHECK(CosineRestartLr(10, cfg) == doctest::Approx(0.1));
  CHECK(CosineRestartLr(30, cfg) == doctest::Approx(0.1));
  for (long s = 0; s < 200; ++s) {
    const double lr = CosineRestartLr(s, cfg);
    CHECK(lr <= 0.1 + 1e-12);
    CHECK(lr >= 1e-5 - 1e-12);
  }
}

TEST_CASE("momentum sgd step") {
  std::vector<double> p{1.0, -1.0}, v{0.0, 0.5};
  const std::vector<double> g{0.5, 2.0};
  SgdStep<double>(p, g, 0.1, 0.9, v);
  CHECK(v[0] == doctest::Approx(-0.05));
  CHECK(v[1] == doctest::Approx(0.45 - 0.2));
  CHECK(p[0] == doctest::Approx(0.95));
  CHECK(p[1] == doctest::Approx(-0.75));
  const std::vector<double> bad{std::nan(""), 0.0};
  CHECK(KindOf([&] { SgdStep<double>(p, bad, 0.1, 0.9, v); }) == ErrorKind::kNumeric);
}

TEST_CASE("sgd training reduces loss on a separable toy problem") {
  GraphSpec g;
  g.Add(Input(1, 1, 2));
  LayerSpec d = Make(LayerKind::kDense, {0});
  d.filters = 2;
  g.Add(d);
  g.Add(Make(LayerKind::kSoftmax, {1}));
  Network<float> net = Network<float>::Build(g, 4);
  Tensor4<float> x({4, 1, 1, 2});
  x.data = {1, 0, 0.9f, 0.1f, 0, 1, 0.1f, 0.9f};
  const std::vector<float> t{1, 0, 1, 0, 0, 1, 0, 1};
  SgdOptimizer<float> opt(0.9);
  net.Forward(x, Mode::kTrain);
  const double first = net.Backward(t);
  double last = first;
  for (int i = 0; i < 100; ++i) {
    opt.Step(net, 0.1);
    net.Forward(x, Mode::kTrain);
    last = net.Backward(t);
  }
  CHECK(last < 0.1 * first);
}

TEST_CASE("snapshot averaging is elementwise") {
  ScoreMatrix a(2, 2), b(2, 2);
  a.data = {0.2, 0.8, 1.0, 0.0};
  b.data = {0.4, 0.6, 0.0, 1.0};
  const std::vector<ScoreMatrix> snaps{a, b};
  const ScoreMatrix m = SnapshotAverage(snaps);
  CHECK(m.data[0] == doctest::Approx(0.3));
  CHECK(m.data[1] == doctest::Approx(0.7));
  CHECK(m.data[2] == doctest::Approx(0.5));
}

TEST_CASE("graph validation names the offending layer") {
  GraphSpec g;
  g.Add(Input(4, 4, 1));
  LayerSpec p = Make(LayerKind::kMaxPool, {0});
  p.name = "bad_pool";
  p.pool_h = 3;
  p.pool_w = 3;
  g.Add(p);
  try {
    ValidateGraph(g);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kData);
    CHECK(std::string(e.what()).find("bad_pool") != std::string::npos);
  }
  GraphSpec cyc;
  cyc.Add(Input(4, 4, 1));
  cyc.Add(Make(LayerKind::kRelu, {1}));
  CHECK(KindOf([&] { ValidateGraph(cyc); }) == ErrorKind::kData);
}

TEST_CASE("graph text round trip") {
  GraphSpec g;
  g.arch = "toy";
  g.Add(Input(8, 6, 3));
  g.Add(Conv(0, 3, 4, 2));
  LayerSpec a = Make(LayerKind::kChannelAttention, {1});
  a.reduction = 2;
  g.Add(a);
  LayerSpec dr = Make(LayerKind::kDropout, {2});
  dr.rate = 0.25f;
  g.Add(dr);
  CHECK(ParseGraph(SerializeGraph(g)) == g);
}

TEST_CASE("checkpoint round trip preserves outputs bit-for-bit") {
  TempDir dir;
  GraphSpec g;
  g.Add(Input(6, 6, 2));
  g.Add(Conv(0, 3, 4));
  g.Add(Make(LayerKind::kBatchNorm, {1}));
  g.Add(Make(LayerKind::kGlobalAvgPool, {2}));
  LayerSpec d = Make(LayerKind::kDense, {3});
  d.filters = 3;
  g.Add(d);
  g.Add(Make(LayerKind::kSoftmax, {4}));
  Network<float> net = Network<float>::Build(g, 9);
  Rng rng(2);
  Randomize(net, rng);
  const Tensor4<float> x = RandomTensor<float>({2, 6, 6, 2}, rng);
  const Tensor4<float> y = net.Forward(x, Mode::kEval);
  SaveCheckpoint(dir / "m.ascm", net);
  Network<float> back = LoadCheckpoint(dir / "m.ascm");
  CHECK(back.graph() == g);
  CHECK(back.Forward(x, Mode::kEval).data == y.data);
  CHECK(CheckpointSize(net) == std::filesystem::file_size(dir / "m.ascm"));
  std::string bytes = ReadFileBytes(dir / "m.ascm");
  bytes[0] = 'X';
  CHECK(KindOf([&] { DeserializeCheckpoint(bytes); }) == ErrorKind::kData);
  CHECK(KindOf([&] { DeserializeCheckpoint(bytes.substr(0, 10)); }) == ErrorKind::kData);
}

TEST_CASE("forward rejects a mismatched input") {
  GraphSpec g;
  g.Add(Input(4, 4, 2));
  g.Add(Conv(0, 3, 2));
  Network<float> net = Network<float>::Build(g, 1);
  Tensor4<float> x({1, 4, 5, 2});
  CHECK(KindOf([&] { net.Forward(x, Mode::kEval); }) == ErrorKind::kData);
}

TEST_CASE("zero weights give a uniform softmax and identical inputs identical rows") {
  GraphSpec g;
  g.Add(Input(4, 4, 2));
  g.Add(Conv(0, 3, 3));
  g.Add(Make(LayerKind::kGlobalAvgPool, {1}));
  LayerSpec d = Make(LayerKind::kDense, {2});
  d.filters = 5;
  g.Add(d);
  g.Add(Make(LayerKind::kSoftmax, {3}));
  Network<float> net = Network<float>::Build(g, 1);
  for (int l = 0; l < net.num_layers(); ++l)
    for (auto& p : net.params(l))
      if (p.trainable) std::fill(p.value.begin(), p.value.end(), 0.0f);
  Rng rng(8);
  Tensor4<float> x = RandomTensor<float>({3, 4, 4, 2}, rng);
  for (float v : net.Forward(x, Mode::kEval).data) CHECK(v == doctest::Approx(0.2));

  Network<float> trained = Network<float>::Build(g, 2);
  Tensor4<float> same({3, 4, 4, 2});
  const Tensor4<float> one = RandomTensor<float>({1, 4, 4, 2}, rng);
  for (int b = 0; b < 3; ++b) std::copy(one.data.begin(), one.data.end(), same.item(b));
  const Tensor4<float> y = trained.Forward(same, Mode::kEval);
  for (int b = 1; b < 3; ++b)
    for (int k = 0; k < 5; ++k) CHECK(y.at(b, 0, 0, k) == y.at(0, 0, 0, k));
  double s = 0.0;
  for (int k = 0; k < 5; ++k) s += y.at(0, 0, 0, k);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("dense plus softmax matches a hand-computed product") {
  GraphSpec g;
  g.Add(Input(1, 1, 2));
  LayerSpec d = Make(LayerKind::kDense, {0});
  d.filters = 2;
  g.Add(d);
  g.Add(Make(LayerKind::kSoftmax, {1}));
  Network<double> net = Network<double>::Build(g, 1);
  net.param(1, "weight").value = {1.0, 2.0, -1.0, 0.5};  // in x out
  net.param(1, "bias").value = {0.1, -0.2};
  Tensor4<double> x({1, 1, 1, 2});
  x.data = {0.5, 2.0};
  const double z0 = 0.5 * 1.0 + 2.0 * -1.0 + 0.1;
  const double z1 = 0.5 * 2.0 + 2.0 * 0.5 - 0.2;
  const double p0 = std::exp(z0) / (std::exp(z0) + std::exp(z1));
  const auto& y = net.Forward(x, Mode::kEval);
  CHECK(y.data[0] == doctest::Approx(p0).epsilon(1e-12));
  CHECK(y.data[1] == doctest::Approx(1.0 - p0).epsilon(1e-12));
}

TEST_CASE("batch norm train mode normalizes with the batch statistics") {
  GraphSpec g;
  g.Add(Input(1, 2, 1));
  g.Add(Make(LayerKind::kBatchNorm, {0}));
  Network<double> net = Network<double>::Build(g, 1);
  Tensor4<double> x({2, 1, 2, 1});
  x.data = {1.0, 3.0, 5.0, 7.0};
  const auto& y = net.Forward(x, Mode::kTrain);
  const double mean = 4.0, var = 5.0;
  for (int i = 0; i < 4; ++i)
    CHECK(y.data[i] == doctest::Approx((x.data[i] - mean) / std::sqrt(var + kBatchNormEps))
                           .epsilon(1e-9));
}

TEST_CASE("momentum sgd converges on a quadratic bowl") {
  std::vector<double> p{1.0}, v{0.0};
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> g{2.0 * p[0]};
    SgdStep<double>(p, g, 0.1, 0.9, v);
  }
  CHECK(std::fabs(p[0]) < 1e-3);
  std::vector<double> q{1.0}, w{0.0};
  SgdStep<double>(q, std::vector<double>{1.0}, 0.1, 0.0, w);
  CHECK(q[0] == doctest::Approx(0.9));
}

TEST_CASE("max pool shapes: 2x2 halves both axes, 1x2 only frequency") {
  GraphSpec g;
  g.Add(Input(8, 8, 1));
  LayerSpec a = Make(LayerKind::kMaxPool, {0});
  a.pool_h = a.pool_w = 2;
  g.Add(a);
  LayerSpec b = Make(LayerKind::kMaxPool, {1});
  b.pool_h = 1;
  b.pool_w = 2;
  g.Add(b);
  const auto s = ValidateGraph(g);
  CHECK(s[1] == Shape{1, 4, 4, 1});
  CHECK(s[2] == Shape{1, 4, 2, 1});
}

TEST_CASE("residual add rejects mismatched operands") {
  GraphSpec g;
  g.Add(Input(4, 4, 2));
  g.Add(Conv(0, 3, 3));
  g.Add(Make(LayerKind::kResidualAdd, {1, 0}));
  CHECK(KindOf([&] { ValidateGraph(g); }) == ErrorKind::kData);
}

TEST_CASE("snapshot average errors") {
  const std::vector<ScoreMatrix> none;
  CHECK_THROWS_AS(SnapshotAverage(none), Error);
  const std::vector<ScoreMatrix> bad{ScoreMatrix(2, 2), ScoreMatrix(2, 3)};
  CHECK(KindOf([&] { SnapshotAverage(bad); }) == ErrorKind::kData);
  ScoreMatrix one(1, 2);
  one.data = {0.25, 0.75};
  const std::vector<ScoreMatrix> single{one};
  CHECK(SnapshotAverage(single) == one);
}
