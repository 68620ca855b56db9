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

#include "ascene/features/spectro.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ascene/error.hpp"
#include "ascene/features/fft.hpp"

namespace ascene::features {

void SpectroConfig::Validate() const {
  if (n_fft < 2) ThrowConfig("n_fft must be >= 2");
  if (win_length < 1 || win_length > n_fft)
    ThrowConfig("win_length must be in [1, n_fft]");
  if (hop <= 0) ThrowConfig("hop must be positive");
  if (n_mels <= 0) ThrowConfig("n_mels must be positive");
  if (!(log_floor > 0.0)) ThrowConfig("log_floor must be positive");
  if (fmin < 0.0) ThrowConfig("fmin must be non-negative");
}

int NumFrames(std::size_t num_samples, int hop) {
  return static_cast<int>(num_samples / static_cast<std::size_t>(hop)) + 1;
}

std::vector<double> HannWindow(int win_length, int n_fft) {
  std::vector<double> w(static_cast<std::size_t>(n_fft), 0.0);
  const int offset = (n_fft - win_length) / 2;
  for (int i = 0; i < win_length; ++i)
    w[offset + i] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win_length);
  return w;
}

namespace {

// numpy-style "reflect" padding (edge sample not repeated).
std::vector<double> ReflectPad(std::span<const float> x, int pad) {
  const int n = static_cast<int>(x.size());
  if (n <= pad)
    ThrowData("clip shorter than one window after padding (" +
              std::to_string(n) + " samples, need > " + std::to_string(pad) +
              ")");
  std::vector<double> out(static_cast<std::size_t>(n + 2 * pad));
  for (int j = 0; j < pad; ++j) out[j] = x[pad - j];
  for (int i = 0; i < n; ++i) out[pad + i] = x[i];
  for (int j = 0; j < pad; ++j) out[pad + n + j] = x[n - 2 - j];
  return out;
}

}  // namespace

std::vector<std::vector<std::complex<double>>> Stft(
    std::span<const float> samples, const SpectroConfig& cfg) {
  cfg.Validate();
  if (samples.empty()) ThrowData("cannot take STFT of an empty clip");
  const int pad = cfg.n_fft / 2;
  const std::vector<double> padded = ReflectPad(samples, pad);
  const std::vector<double> window = HannWindow(cfg.win_length, cfg.n_fft);
  const int frames = NumFrames(samples.size(), cfg.hop);

  RealFft fft(cfg.n_fft);
  std::vector<double> buf(static_cast<std::size_t>(cfg.n_fft));
  std::vector<std::vector<std::complex<double>>> out(
      static_cast<std::size_t>(frames),
      std::vector<std::complex<double>>(fft.num_bins()));
  for (int t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
    for (int i = 0; i < cfg.n_fft; ++i) buf[i] = padded[start + i] * window[i];
    fft.Forward(buf, out[t]);
  }
  return out;
}

Matrix StftMagnitude(std::span<const float> samples, const SpectroConfig& cfg) {
  const auto spec = Stft(samples, cfg);
  const int bins = cfg.n_fft / 2 + 1;
  Matrix mag(static_cast<int>(spec.size()), bins);
  for (int t = 0; t < mag.rows; ++t)
    for (int k = 0; k < bins; ++k) mag.at(t, k) = std::abs(spec[t][k]);
  return mag;
}

std::vector<float> Istft(
    const std::vector<std::vector<std::complex<double>>>& frames,
    const SpectroConfig& cfg, std::size_t length) {
  cfg.Validate();
  const int pad = cfg.n_fft / 2;
  const std::vector<double> window = HannWindow(cfg.win_length, cfg.n_fft);
  const std::size_t total =
      std::max(length + 2 * static_cast<std::size_t>(pad),
               (frames.empty() ? 0 : (frames.size() - 1) * cfg.hop) +
                   static_cast<std::size_t>(cfg.n_fft));
  std::vector<double> acc(total, 0.0);
  std::vector<double> norm(total, 0.0);

  RealFft fft(cfg.n_fft);
  std::vector<double> buf(static_cast<std::size_t>(cfg.n_fft));
  for (std::size_t t = 0; t < frames.size(); ++t) {
    fft.Inverse(frames[t], buf);
    const std::size_t start = t * cfg.hop;
    for (int i = 0; i < cfg.n_fft; ++i) {
      acc[start + i] += buf[i] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }
  std::vector<float> out(length, 0.0f);
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t j = i + pad;
    if (norm[j] > 1e-10) out[i] = static_cast<float>(acc[j] / norm[j]);
  }
  return out;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Matrix MelFilterbank(const SpectroConfig& cfg, int sample_rate) {
  cfg.Validate();
  if (sample_rate <= 0) ThrowConfig("sample rate must be positive");
  const double fmax = cfg.ResolvedFmax(sample_rate);
  if (fmax > sample_rate / 2.0 + 1e-9)
    ThrowConfig("fmax exceeds the Nyquist frequency");
  if (cfg.fmin >= fmax) ThrowConfig("fmin must be below fmax");

  const int bins = cfg.n_fft / 2 + 1;
  const double mel_lo = HzToMel(cfg.fmin);
  const double mel_hi = HzToMel(fmax);
  std::vector<double> corners(static_cast<std::size_t>(cfg.n_mels) + 2);
  for (std::size_t i = 0; i < corners.size(); ++i)
    corners[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      (cfg.n_mels + 1));

  Matrix bank(cfg.n_mels, bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = corners[m], mid = corners[m + 1], hi = corners[m + 2];
    bool any = false;
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / cfg.n_fft;
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      const double w = std::max(0.0, std::min(rise, fall));
      bank.at(m, k) = w;
      any = any || w > 0.0;
    }
    if (!any)
      ThrowConfig("mel filter " + std::to_string(m) +
                  " covers no FFT bin; n_mels too large for n_fft");
    if (cfg.slaney_norm) {
      const double enorm = 2.0 / (hi - lo);
      for (double& w : bank.row(m)) w *= enorm;
    }
  }
  return bank;
}

Matrix LogMel(const Matrix& magnitude, const Matrix& bank, double log_floor) {
  if (magnitude.cols != bank.cols)
    ThrowShape("log_mel: magnitude has " + std::to_string(magnitude.cols) +
               " bins, filterbank expects " + std::to_string(bank.cols));
  Matrix out(magnitude.rows, bank.rows);
  std::vector<double> power(static_cast<std::size_t>(magnitude.cols));
  for (int t = 0; t < magnitude.rows; ++t) {
    const auto mrow = magnitude.row(t);
    for (int k = 0; k < magnitude.cols; ++k) power[k] = mrow[k] * mrow[k];
    for (int m = 0; m < bank.rows; ++m) {
      const auto brow = bank.row(m);
      double s = 0.0;
      for (int k = 0; k < bank.cols; ++k) s += brow[k] * power[k];
      out.at(t, m) = std::log(s + log_floor);
    }
  }
  return out;
}

Matrix Deltas(const Matrix& x) {
  if (x.rows <= 4)
    ThrowData("deltas need more than 4 frames, got " + std::to_string(x.rows));
  Matrix out(x.rows - 4, x.cols);
  for (int t = 2; t < x.rows - 2; ++t)
    for (int f = 0; f < x.cols; ++f)
      out.at(t - 2, f) = (x.at(t + 1, f) - x.at(t - 1, f) +
                          2.0 * (x.at(t + 2, f) - x.at(t - 2, f))) /
                         10.0;
  return out;
}

FeatureTensor AssembleTensor(std::span<const Matrix> statics) {
  if (statics.empty()) ThrowData("assemble_tensor: no channels");
  const int T = statics.front().rows;
  const int F = statics.front().cols;
  for (const auto& s : statics)
    if (s.rows != T || s.cols != F)
      ThrowShape("assemble_tensor: channel shapes differ");

  const int out_t = T - 8;
  const int C = 3 * static_cast<int>(statics.size());
  FeatureTensor tensor;
  for (std::size_t ch = 0; ch < statics.size(); ++ch) {
    const Matrix& s = statics[ch];
    const Matrix d1 = Deltas(s);
    const Matrix d2 = Deltas(d1);
    if (ch == 0) tensor = FeatureTensor(out_t, F, C);
    const int base = 3 * static_cast<int>(ch);
    for (int t = 0; t < out_t; ++t)
      for (int f = 0; f < F; ++f) {
        tensor.at(t, f, base + 0) = static_cast<float>(s.at(t + 4, f));
        tensor.at(t, f, base + 1) = static_cast<float>(d1.at(t + 2, f));
        tensor.at(t, f, base + 2) = static_cast<float>(d2.at(t, f));
      }
  }
  return tensor;
}

FeatureTensor ExtractFeatures(const AudioClip& clip, const SpectroConfig& cfg,
                              bool downmix) {
  clip.Validate();
  const AudioClip& src = clip;
  AudioClip mixed;
  if (downmix && clip.num_channels() > 1) mixed = Downmix(clip);
  const AudioClip& use = (downmix && clip.num_channels() > 1) ? mixed : src;

  const Matrix bank = MelFilterbank(cfg, use.sample_rate);
  std::vector<Matrix> statics;
  statics.reserve(use.channels.size());
  for (const auto& ch : use.channels)
    statics.push_back(LogMel(StftMagnitude(ch, cfg), bank, cfg.log_floor));
  return AssembleTensor(statics);
}

}  // namespace ascene::features
