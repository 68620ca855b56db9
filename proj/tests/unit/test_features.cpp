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

#include <chrono>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "ascene/features/audio.hpp"
#include "ascene/features/fft.hpp"
#include "ascene/features/feature_tensor.hpp"
#include "ascene/features/spectro.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace ascene;
using namespace ascene::features;
using ascene::testing::CodeOf;
using ascene::testing::KindOf;
using ascene::testing::RandomSignal;
using ascene::testing::TempDir;

namespace {

constexpr double kPi = std::numbers::pi;

SpectroConfig SmallConfig() {
  SpectroConfig c;
  c.n_fft = 64;
  c.win_length = 64;
  c.hop = 16;
  c.n_mels = 8;
  return c;
}

// Direct DFT of reflect-padded, periodic-Hann-windowed frames.
std::vector<std::vector<std::complex<double>>> NaiveStft(
    const std::vector<float>& x, int n_fft, int hop) {
  const int pad = n_fft / 2;
  const int len = static_cast<int>(x.size());
  auto sample = [&](int i) {
    int j = i - pad;
    if (j < 0) j = -j;
    if (j >= len) j = 2 * (len - 1) - j;
    return static_cast<double>(x[j]);
  };
  const int frames = len / hop + 1;
  std::vector<std::vector<std::complex<double>>> out(frames);
  for (int t = 0; t < frames; ++t) {
    out[t].resize(n_fft / 2 + 1);
    for (int k = 0; k <= n_fft / 2; ++k) {
      std::complex<double> acc = 0.0;
      for (int n = 0; n < n_fft; ++n) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * n / n_fft);
        acc += w * sample(t * hop + n) *
               std::polar(1.0, -2.0 * kPi * k * n / n_fft);
      }
      out[t][k] = acc;
    }
  }
  return out;
}

// Mel triangles from the textbook definition, slaney area normalization.
std::vector<std::vector<double>> NaiveMel(int sr, int n_fft, int n_mels,
                                          double fmin, double fmax) {
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  std::vector<double> pts(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    pts[i] = hz(mel(fmin) + (mel(fmax) - mel(fmin)) * i / (n_mels + 1));
  std::vector<std::vector<double>> w(n_mels, std::vector<double>(n_fft / 2 + 1));
  for (int m = 0; m < n_mels; ++m)
    for (int k = 0; k <= n_fft / 2; ++k) {
      const double f = static_cast<double>(k) * sr / n_fft;
      const double lo = (f - pts[m]) / (pts[m + 1] - pts[m]);
      const double hi = (pts[m + 2] - f) / (pts[m + 2] - pts[m + 1]);
      w[m][k] = std::max(0.0, std::min(lo, hi)) * 2.0 / (pts[m + 2] - pts[m]);
    }
  return w;
}

Matrix RandomMatrix(int r, int c, unsigned seed) {
  Matrix m(r, c);
  auto v = RandomSignal(m.data.size(), seed, 3.0f);
  std::copy(v.begin(), v.end(), m.data.begin());
  return m;
}

void WriteBytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary).write(bytes.data(), bytes.size());
}

std::string Le32(std::uint32_t v) {
  return {static_cast<char>(v), static_cast<char>(v >> 8),
          static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
}
std::string Le16(std::uint16_t v) {
  return {static_cast<char>(v), static_cast<char>(v >> 8)};
}

}  // namespace

TEST_CASE("fft forward matches a direct DFT and inverse restores input") {
  const int n = 48;
  RealFft fft(n);
  const auto xs = RandomSignal(n, 3);
  std::vector<double> x(xs.begin(), xs.end());
  std::vector<std::complex<double>> spec(fft.num_bins());
  fft.Forward(x, spec);
  for (int k = 0; k < fft.num_bins(); ++k) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < n; ++i) acc += x[i] * std::polar(1.0, -2.0 * kPi * k * i / n);
    CHECK(std::abs(spec[k] - acc) < 1e-10);
  }
  std::vector<double> back(n);
  fft.Inverse(spec, back);
  for (int i = 0; i < n; ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-12));
}

TEST_CASE("frame count follows floor(L / hop) + 1") {
  CHECK(NumFrames(441000, 1024) == 431);
  CHECK(NumFrames(480000, 1024) == 469);
  CHECK(NumFrames(1024, 1024) == 2);
  CHECK(NumFrames(1023, 1024) == 1);
}

TEST_CASE("periodic hann window") {
  const auto w = HannWindow(8, 8);
  REQUIRE(w.size() == 8);
  CHECK(w[0] == doctest::Approx(0.0));
  CHECK(w[4] == doctest::Approx(1.0));
  CHECK(w[2] == doctest::Approx(0.5));
  // shorter window is centered in the frame
  const auto c = HannWindow(4, 8);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == 0.0);
  CHECK(c[4] == doctest::Approx(1.0));
  CHECK(c[7] == 0.0);
}

TEST_CASE("stft agrees with the naive oracle") {
  const SpectroConfig cfg = SmallConfig();
  const auto x = RandomSignal(300, 11);
  const auto got = Stft(x, cfg);
  const auto want = NaiveStft(x, cfg.n_fft, cfg.hop);
  REQUIRE(got.size() == want.size());
  double worst = 0.0;
  for (std::size_t t = 0; t < got.size(); ++t)
    for (std::size_t k = 0; k < got[t].size(); ++k)
      worst = std::max(worst, std::abs(got[t][k] - want[t][k]));
  CHECK(worst < 1e-9);
}

TEST_CASE("stft of a pure tone peaks at its bin") {
  SpectroConfig cfg;
  const int sr = 44100;
  const int bin = 100;
  const double f = static_cast<double>(bin) * sr / cfg.n_fft;
  std::vector<float> x(sr);
  for (int i = 0; i < sr; ++i) x[i] = static_cast<float>(std::sin(2 * kPi * f * i / sr));
  const Matrix mag = StftMagnitude(x, cfg);
  const auto r = mag.row(mag.rows / 2);
  CHECK(std::max_element(r.begin(), r.end()) - r.begin() == bin);
}

TEST_CASE("istft inverts stft") {
  SpectroConfig cfg;
  const auto x = RandomSignal(20000, 5);
  const auto back = Istft(Stft(x, cfg), cfg, x.size());
  REQUIRE(back.size() == x.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    worst = std::max(worst, static_cast<double>(std::fabs(back[i] - x[i])));
  CHECK(worst < 1e-5);
}

TEST_CASE("stft rejects clips shorter than the padding") {
  SpectroConfig cfg;
  std::vector<float> x(1024, 0.1f);
  CHECK(KindOf([&] { Stft(x, cfg); }) == ErrorKind::kData);
}

TEST_CASE("htk mel scale") {
  CHECK(HzToMel(0.0) == 0.0);
  CHECK(HzToMel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  for (double f : {10.0, 440.0, 8000.0, 22050.0})
    CHECK(MelToHz(HzToMel(f)) == doctest::Approx(f).epsilon(1e-12));
}

TEST_CASE("mel filterbank matches the textbook construction") {
  for (int sr : {44100, 48000}) {
    SpectroConfig cfg;
    const Matrix bank = MelFilterbank(cfg, sr);
    REQUIRE(bank.rows == 128);
    REQUIRE(bank.cols == 1025);
    const auto want = NaiveMel(sr, 2048, 128, 0.0, sr / 2.0);
    double worst = 0.0;
    for (int m = 0; m < 128; ++m)
      for (int k = 0; k < 1025; ++k)
        worst = std::max(worst, std::fabs(bank.at(m, k) - want[m][k]));
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("mel filterbank without normalization has unit peaks and partitions") {
  SpectroConfig cfg;
  cfg.slaney_norm = false;
  const int sr = 44100;
  const Matrix bank = MelFilterbank(cfg, sr);
  // Interior bins: adjacent triangles sum to one.
  const double lo = MelToHz(HzToMel(0.0) + (HzToMel(sr / 2.0)) / 129.0);
  const double hi = MelToHz(HzToMel(sr / 2.0) * 128.0 / 129.0);
  for (int k = 0; k < 1025; ++k) {
    const double f = k * static_cast<double>(sr) / 2048;
    if (f <= lo || f >= hi) continue;
    double s = 0.0;
    for (int m = 0; m < 128; ++m) s += bank.at(m, k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (int m = 0; m < 128; ++m) {
    const auto r = bank.row(m);
    CHECK(*std::max_element(r.begin(), r.end()) <= 1.0 + 1e-12);
  }
}

TEST_CASE("mel filterbank rejects empty filters") {
  SpectroConfig cfg = SmallConfig();
  cfg.n_mels = 40;  // more filters than a 64-point FFT can support
  CHECK(KindOf([&] { MelFilterbank(cfg, 8000); }) == ErrorKind::kConfig);
}

TEST_CASE("log mel applies the floor") {
  Matrix mag(1, 2);
  mag.at(0, 0) = 0.0;
  mag.at(0, 1) = 2.0;
  Matrix bank(2, 2);
  bank.at(0, 0) = 1.0;
  bank.at(1, 1) = 0.5;
  const Matrix lm = LogMel(mag, bank, 1e-10);
  CHECK(lm.at(0, 0) == doctest::Approx(std::log(1e-10)));
  CHECK(lm.at(0, 1) == doctest::Approx(std::log(2.0 + 1e-10)));
}

TEST_CASE("deltas follow the regression formula on the valid range") {
  const Matrix x = RandomMatrix(12, 5, 9);
  const Matrix d = Deltas(x);
  REQUIRE(d.rows == 8);
  REQUIRE(d.cols == 5);
  for (int t = 0; t < d.rows; ++t)
    for (int f = 0; f < 5; ++f) {
      const int c = t + 2;
      const double want =
          (x.at(c + 1, f) - x.at(c - 1, f) + 2.0 * (x.at(c + 2, f) - x.at(c - 2, f))) / 10.0;
      CHECK(d.at(t, f) == doctest::Approx(want).epsilon(1e-12));
    }
  // a linear ramp has constant slope
  Matrix ramp(10, 1);
  for (int t = 0; t < 10; ++t) ramp.at(t, 0) = 3.0 * t;
  for (double v : Deltas(ramp).data) CHECK(v == doctest::Approx(3.0));
}

TEST_CASE("assembled tensor aligns static, delta and delta-delta") {
  const Matrix a = RandomMatrix(20, 4, 1);
  const Matrix b = RandomMatrix(20, 4, 2);
  const std::vector<Matrix> statics{a, b};
  const FeatureTensor t = AssembleTensor(statics);
  REQUIRE(t.frames == 12);
  REQUIRE(t.bins == 4);
  REQUIRE(t.channels == 6);
  const Matrix da = Deltas(a), dda = Deltas(da);
  const Matrix db = Deltas(b), ddb = Deltas(db);
  for (int i = 0; i < 12; ++i)
    for (int f = 0; f < 4; ++f) {
      CHECK(t.at(i, f, 0) == doctest::Approx(a.at(i + 4, f)).epsilon(1e-6));
      CHECK(t.at(i, f, 1) == doctest::Approx(da.at(i + 2, f)).epsilon(1e-6));
      CHECK(t.at(i, f, 2) == doctest::Approx(dda.at(i, f)).epsilon(1e-6));
      CHECK(t.at(i, f, 3) == doctest::Approx(b.at(i + 4, f)).epsilon(1e-6));
      CHECK(t.at(i, f, 5) == doctest::Approx(ddb.at(i, f)).epsilon(1e-6));
    }
}

TEST_CASE("ten second clips produce the expected tensor shapes") {
  SpectroConfig cfg;
  AudioClip mono = AudioClip::Mono(RandomSignal(441000, 1), 44100);
  const auto t0 = std::chrono::steady_clock::now();
  const FeatureTensor m = ExtractFeatures(mono, cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(m.frames == 423);
  CHECK(m.bins == 128);
  CHECK(m.channels == 3);
  CHECK(secs < 1.0);

  AudioClip stereo;
  stereo.sample_rate = 48000;
  stereo.channels = {RandomSignal(480000, 2), RandomSignal(480000, 3)};
  const FeatureTensor s = ExtractFeatures(stereo, cfg);
  CHECK(s.frames == 461);
  CHECK(s.bins == 128);
  CHECK(s.channels == 6);

  const FeatureTensor d = ExtractFeatures(stereo, cfg, /*downmix=*/true);
  CHECK(d.channels == 3);
}

TEST_CASE("feature file round trip and corruption") {
  TempDir dir;
  FeatureTensor t(5, 4, 3);
  for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = static_cast<float>(i) * 0.25f - 1.0f;
  WriteFeatureFile(dir / "a.ascf", t);
  CHECK(ReadFeatureFile(dir / "a.ascf") == t);

  WriteBytes(dir / "bad.ascf", "NOPE1234");
  CHECK(CodeOf([&] { ReadFeatureFile(dir / "bad.ascf"); }) == ErrorCode::kMalformedHeader);
  std::ifstream in(dir / "a.ascf", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  WriteBytes(dir / "short.ascf", bytes.substr(0, bytes.size() - 3));
  CHECK(KindOf([&] { ReadFeatureFile(dir / "short.ascf"); }) == ErrorKind::kData);
  CHECK(CodeOf([&] { ReadFeatureFile(dir / "missing.ascf"); }) == ErrorCode::kFileNotFound);
}

TEST_CASE("min-max scaling per channel") {
  FeatureTensor a(2, 2, 2), b(2, 2, 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.data[i] = static_cast<float>(i);
    b.data[i] = -static_cast<float>(i);
  }
  const std::vector<FeatureTensor> corpus{a, b};
  const ScaleStats s = FitScale01(corpus);
  REQUIRE(s.num_channels() == 2);
  CHECK(s.min[0] == -6.0f);
  CHECK(s.max[0] == 6.0f);
  CHECK(s.min[1] == -7.0f);
  CHECK(s.max[1] == 7.0f);
  const FeatureTensor sa = ApplyScale01(a, s);
  for (float v : sa.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  CHECK(sa.at(1, 1, 1) == doctest::Approx(1.0));
  // out-of-range values clamp
  FeatureTensor big(1, 1, 2, 100.0f);
  for (float v : ApplyScale01(big, s).data) CHECK(v == 1.0f);

  // streaming merge equals batch fit
  ScaleAccumulator x, y;
  x.Add(a);
  y.Add(b);
  x.Merge(y);
  const ScaleStats m = x.Finish();
  CHECK(m.min == s.min);
  CHECK(m.max == s.max);

  FeatureTensor flat(3, 2, 1, 0.5f);
  const std::vector<FeatureTensor> degenerate{flat};
  CHECK(CodeOf([&] { FitScale01(degenerate); }) == ErrorCode::kDegenerate);
}

TEST_CASE("scale statistics file round trip is exact") {
  TempDir dir;
  ScaleStats s;
  s.min = {-23.025850929940457f, 0.1f, -1e-7f};
  s.max = {3.3333333f, 7.0f, 1e7f};
  SaveScaleStats(dir / "s.txt", s);
  const ScaleStats r = LoadScaleStats(dir / "s.txt");
  CHECK(r.min == s.min);
  CHECK(r.max == s.max);
}

TEST_CASE("wav round trips in both encodings") {
  TempDir dir;
  AudioClip clip;
  clip.sample_rate = 48000;
  clip.channels = {RandomSignal(1000, 1, 0.9f), RandomSignal(1000, 2, 0.9f)};
  SaveWav(dir / "f.wav", clip, WavEncoding::kFloat32);
  const AudioClip f = LoadWav(dir / "f.wav");
  CHECK(f.sample_rate == 48000);
  CHECK(f.channels == clip.channels);

  SaveWav(dir / "p.wav", clip, WavEncoding::kPcm16);
  const AudioClip p = LoadWav(dir / "p.wav");
  REQUIRE(p.num_channels() == 2);
  REQUIRE(p.num_samples() == 1000);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 1000; ++i)
      CHECK(std::fabs(p.channels[c][i] - clip.channels[c][i]) <= 1.0f / 32767.0f);
}

TEST_CASE("wav errors carry specific codes") {
  TempDir dir;
  CHECK(CodeOf([&] { LoadWav(dir / "none.wav"); }) == ErrorCode::kFileNotFound);
  WriteBytes(dir / "junk.wav", "RIFX0000WAVE");
  CHECK(CodeOf([&] { LoadWav(dir / "junk.wav"); }) == ErrorCode::kMalformedHeader);

  // 24-bit PCM header
  std::string fmt = Le16(1) + Le16(1) + Le32(8000) + Le32(24000) + Le16(3) + Le16(24);
  std::string data(30, '\0');
  std::string body = "WAVE" + std::string("fmt ") + Le32(16) + fmt + "data" +
                     Le32(static_cast<std::uint32_t>(data.size())) + data;
  WriteBytes(dir / "p24.wav", "RIFF" + Le32(static_cast<std::uint32_t>(body.size())) + body);
  CHECK(CodeOf([&] { LoadWav(dir / "p24.wav"); }) == ErrorCode::kUnsupportedEncoding);
}

TEST_CASE("audio clip invariants") {
  AudioClip c;
  c.sample_rate = 16000;
  CHECK(KindOf([&] { c.Validate(); }) == ErrorKind::kData);
  c.channels = {{0.1f, 0.2f}, {0.3f}};
  CHECK(KindOf([&] { c.Validate(); }) == ErrorKind::kData);
  c.channels = {{0.1f, std::nanf("")}};
  CHECK(KindOf([&] { c.Validate(); }) == ErrorKind::kData);
}
