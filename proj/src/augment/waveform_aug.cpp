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

#include "ascene/augment/waveform_aug.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "ascene/error.hpp"
#include "ascene/features/fft.hpp"

namespace ascene::augment {
namespace {

using features::Matrix;
using features::RealFft;

std::size_t NextPow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<float> FitLength(std::vector<float> x, std::size_t length) {
  x.resize(length, 0.0f);
  return x;
}

// Largest power-of-two STFT size <= 2048 that the clip can reflect-pad.
int StretchFftSize(std::size_t len) {
  int n = 2048;
  while (n > 16 && static_cast<std::size_t>(n / 2) >= len) n /= 2;
  return n;
}

}  // namespace

std::map<std::string, SpectrumProfile> FitSpectrumProfiles(
    std::span<const std::pair<std::string, const AudioClip*>> corpus,
    const SpectroConfig& cfg) {
  const int bins = cfg.n_fft / 2 + 1;
  std::map<std::string, std::vector<double>> sums;
  std::map<std::string, double> counts;
  for (const auto& [device, clip] : corpus) {
    clip->Validate();
    auto& sum = sums[device];
    sum.resize(bins, 0.0);
    for (const auto& ch : clip->channels) {
      const Matrix mag = features::StftMagnitude(ch, cfg);
      for (int t = 0; t < mag.rows; ++t)
        for (int k = 0; k < bins; ++k) sum[k] += mag.at(t, k);
      counts[device] += mag.rows;
    }
  }
  std::map<std::string, SpectrumProfile> out;
  for (auto& [device, sum] : sums) {
    SpectrumProfile p{device, std::move(sum)};
    for (double& v : p.mean_magnitude)
      v = std::max(v / counts[device], kProfileFloor);
    out.emplace(device, std::move(p));
  }
  return out;
}

std::vector<double> ReferenceSpectrum(
    const std::map<std::string, SpectrumProfile>& profiles,
    const std::string& target_device) {
  std::vector<double> ref;
  int used = 0;
  for (const auto& [device, p] : profiles) {
    if (device == target_device) continue;
    if (ref.empty()) ref.assign(p.mean_magnitude.size(), 0.0);
    if (p.mean_magnitude.size() != ref.size())
      ThrowShape("spectrum profiles differ in length");
    for (std::size_t k = 0; k < ref.size(); ++k) ref[k] += p.mean_magnitude[k];
    ++used;
  }
  if (used == 0)
    ThrowData("reference spectrum needs at least one device other than '" +
              target_device + "'");
  for (double& v : ref) v /= used;
  return ref;
}

std::vector<double> CorrectionCoefficients(std::span<const double> reference,
                                           std::span<const double> profile) {
  if (reference.size() != profile.size())
    ThrowShape("reference and profile lengths differ");
  std::vector<double> c(reference.size());
  for (std::size_t k = 0; k < c.size(); ++k)
    c[k] = std::max(reference[k], kProfileFloor) /
           std::max(profile[k], kProfileFloor);
  return c;
}

AudioClip SpectrumCorrect(const AudioClip& clip, std::span<const double> coeffs,
                          const SpectroConfig& cfg) {
  clip.Validate();
  if (static_cast<int>(coeffs.size()) != cfg.n_fft / 2 + 1)
    ThrowShape("correction coefficients do not match n_fft");
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  for (const auto& ch : clip.channels) {
    auto frames = features::Stft(ch, cfg);
    for (auto& f : frames)
      for (std::size_t k = 0; k < f.size(); ++k) f[k] *= coeffs[k];
    out.channels.push_back(features::Istft(frames, cfg, ch.size()));
  }
  return out;
}

std::vector<float> SyntheticRir(int sample_rate, double rt60, Rng& rng) {
  if (!(rt60 > 0.0) || sample_rate <= 0)
    ThrowConfig("RIR needs positive rt60 and sample rate");
  const std::size_t n =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(rt60 * sample_rate)));
  const double decay = std::log(1000.0) / (rt60 * sample_rate);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> tail(n, 0.0);
  double energy = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double env = std::exp(-decay * static_cast<double>(i));
    tail[i] = noise(rng) * env;
    energy += env * env;
  }
  // Tail energy matched to the direct path.
  const double g = energy > 0.0 ? 1.0 / std::sqrt(energy) : 0.0;
  std::vector<float> h(n);
  h[0] = 1.0f;
  for (std::size_t i = 1; i < n; ++i) h[i] = static_cast<float>(g * tail[i]);
  return h;
}

std::vector<float> ConvolveTruncated(std::span<const float> x,
                                     std::span<const float> h) {
  if (x.empty() || h.empty()) ThrowData("convolution of an empty signal");
  if (h.size() == 1) {
    std::vector<float> y(x.begin(), x.end());
    for (float& v : y) v *= h[0];
    return y;
  }
  const std::size_t n = NextPow2(x.size() + h.size() - 1);
  RealFft fft(static_cast<int>(n));
  std::vector<double> buf(n, 0.0);
  std::vector<std::complex<double>> X(fft.num_bins()), H(fft.num_bins());
  std::copy(x.begin(), x.end(), buf.begin());
  fft.Forward(buf, X);
  std::fill(buf.begin(), buf.end(), 0.0);
  std::copy(h.begin(), h.end(), buf.begin());
  fft.Forward(buf, H);
  for (std::size_t k = 0; k < X.size(); ++k) X[k] *= H[k];
  fft.Inverse(X, buf);
  std::vector<float> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<float>(buf[i]);
  return y;
}

CompressorOutput Compress(const AudioClip& clip, const CompressorParams& p) {
  clip.Validate();
  if (!(p.ratio >= 1.0)) ThrowConfig("compressor ratio must be >= 1");
  const double sr = clip.sample_rate;
  const double a_att = std::exp(-1.0 / (p.attack_ms * 1e-3 * sr));
  const double a_rel = std::exp(-1.0 / (p.release_ms * 1e-3 * sr));
  const double slope = std::isinf(p.ratio) ? 1.0 : 1.0 - 1.0 / p.ratio;
  constexpr double kFloorDb = -200.0;

  CompressorOutput out;
  out.audio = clip;
  const std::size_t n = clip.num_samples();
  out.output_envelope_db.resize(n);
  double env = kFloorDb;
  for (std::size_t i = 0; i < n; ++i) {
    double peak = 0.0;
    for (const auto& ch : clip.channels)
      peak = std::max(peak, static_cast<double>(std::abs(ch[i])));
    const double level = peak > 0.0 ? std::max(20.0 * std::log10(peak), kFloorDb)
                                    : kFloorDb;
    const double a = level > env ? a_att : a_rel;
    env = a * env + (1.0 - a) * level;
    const double over = env - p.threshold_db;
    const double gain_db = over > 0.0 ? -slope * over : 0.0;
    out.output_envelope_db[i] = env + gain_db + p.makeup_db;
    const double g = std::pow(10.0, (gain_db + p.makeup_db) / 20.0);
    for (auto& ch : out.audio.channels)
      ch[i] = static_cast<float>(ch[i] * g);
  }
  return out;
}

double PeakAbs(const AudioClip& clip) {
  double peak = 0.0;
  for (const auto& ch : clip.channels)
    for (float v : ch) peak = std::max(peak, static_cast<double>(std::abs(v)));
  return peak;
}

AudioClip ReverbDrcWith(const AudioClip& clip,
                        std::span<const std::vector<float>> rirs,
                        const CompressorParams& p) {
  clip.Validate();
  if (rirs.size() != clip.channels.size())
    ThrowShape("need one impulse response per channel");
  AudioClip wet;
  wet.sample_rate = clip.sample_rate;
  for (std::size_t c = 0; c < clip.channels.size(); ++c)
    wet.channels.push_back(ConvolveTruncated(clip.channels[c], rirs[c]));
  AudioClip out = Compress(wet, p).audio;
  const double in_peak = PeakAbs(clip);
  const double out_peak = PeakAbs(out);
  if (out_peak > 0.0) {
    const float g = static_cast<float>(in_peak / out_peak);
    for (auto& ch : out.channels)
      for (float& v : ch) v *= g;
  }
  return out;
}

AudioClip ReverbDrc(const AudioClip& clip, const AugmentConfig& cfg,
                    const CompressorParams& p, Rng& rng) {
  const double rt60 = Uniform(rng, cfg.rt60_lo, cfg.rt60_hi);
  std::vector<std::vector<float>> rirs;
  for (int c = 0; c < clip.num_channels(); ++c)
    rirs.push_back(SyntheticRir(clip.sample_rate, rt60, rng));
  return ReverbDrcWith(clip, rirs, p);
}

std::vector<float> ResampleLinear(std::span<const float> x, double step) {
  if (!(step > 0.0)) ThrowConfig("resampling step must be positive");
  if (x.empty()) return {};
  const std::size_t n_out = static_cast<std::size_t>(
      std::max(1L, std::lround(static_cast<double>(x.size()) / step)));
  std::vector<float> y(n_out);
  const std::size_t last = x.size() - 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * step;
    const std::size_t i0 = static_cast<std::size_t>(pos);
    if (i0 >= last) {
      y[i] = x[last];
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    y[i] = static_cast<float>((1.0 - frac) * x[i0] + frac * x[i0 + 1]);
  }
  return y;
}

std::vector<float> TimeStretch(std::span<const float> x, double rate) {
  if (!(rate > 0.0)) ThrowConfig("stretch rate must be positive");
  if (x.size() < 4) return ResampleLinear(x, rate);
  SpectroConfig cfg;
  cfg.n_fft = StretchFftSize(x.size());
  cfg.win_length = cfg.n_fft;
  cfg.hop = cfg.n_fft / 4;
  const auto spec = features::Stft(x, cfg);
  const int bins = cfg.n_fft / 2 + 1;
  const int n_frames = static_cast<int>(spec.size());

  std::vector<double> phi_advance(bins);
  for (int k = 0; k < bins; ++k)
    phi_advance[k] = 2.0 * std::numbers::pi * cfg.hop * k / cfg.n_fft;
  std::vector<double> phase(bins);
  for (int k = 0; k < bins; ++k) phase[k] = std::arg(spec[0][k]);

  const std::vector<std::complex<double>> zeros(bins);
  auto column = [&](int t) -> const std::vector<std::complex<double>>& {
    return t < n_frames ? spec[t] : zeros;
  };

  std::vector<std::vector<std::complex<double>>> out;
  for (double step = 0.0; step < n_frames; step += rate) {
    const int t0 = static_cast<int>(step);
    const double alpha = step - t0;
    const auto& c0 = column(t0);
    const auto& c1 = column(t0 + 1);
    std::vector<std::complex<double>> frame(bins);
    for (int k = 0; k < bins; ++k) {
      const double mag = (1.0 - alpha) * std::abs(c0[k]) + alpha * std::abs(c1[k]);
      frame[k] = std::polar(mag, phase[k]);
      double d = std::arg(c1[k]) - std::arg(c0[k]) - phi_advance[k];
      d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
      phase[k] += phi_advance[k] + d;
    }
    out.push_back(std::move(frame));
  }
  const std::size_t length = static_cast<std::size_t>(
      std::max(1L, std::lround(static_cast<double>(x.size()) / rate)));
  return features::Istft(out, cfg, length);
}

AudioClip PitchShiftBy(const AudioClip& clip, double semitones) {
  clip.Validate();
  const double rate = std::pow(2.0, -semitones / 12.0);
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  for (const auto& ch : clip.channels) {
    const std::vector<float> stretched = TimeStretch(ch, rate);
    out.channels.push_back(
        FitLength(ResampleLinear(stretched, 1.0 / rate), ch.size()));
  }
  return out;
}

AudioClip PitchShift(const AudioClip& clip, const AugmentConfig& cfg, Rng& rng) {
  const double s =
      Uniform(rng, -cfg.pitch_semitone_range, cfg.pitch_semitone_range);
  return PitchShiftBy(clip, s);
}

AudioClip SpeedChangeBy(const AudioClip& clip, double ratio) {
  clip.Validate();
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  for (const auto& ch : clip.channels)
    out.channels.push_back(FitLength(ResampleLinear(ch, ratio), ch.size()));
  return out;
}

AudioClip SpeedChange(const AudioClip& clip, const AugmentConfig& cfg, Rng& rng) {
  return SpeedChangeBy(clip, Uniform(rng, cfg.speed_lo, cfg.speed_hi));
}

AudioClip AddNoise(const AudioClip& clip, double noise_std, Rng& rng) {
  if (noise_std < 0.0) ThrowConfig("noise_std must be non-negative");
  AudioClip out = clip;
  if (noise_std == 0.0) return out;
  std::normal_distribution<double> noise(0.0, noise_std);
  for (auto& ch : out.channels)
    for (float& v : ch) v = static_cast<float>(v + noise(rng));
  return out;
}

AudioClip MixWith(const AudioClip& a, const AudioClip& b, double w) {
  if (a.sample_rate != b.sample_rate) ThrowData("mix: sample rates differ");
  if (a.num_channels() != b.num_channels() || a.num_samples() != b.num_samples())
    ThrowData("mix: clips differ in length or channel count");
  AudioClip out = a;
  const float wa = static_cast<float>(w);
  const float wb = static_cast<float>(1.0 - w);
  for (std::size_t c = 0; c < out.channels.size(); ++c)
    for (std::size_t i = 0; i < out.channels[c].size(); ++i)
      out.channels[c][i] = wa * a.channels[c][i] + wb * b.channels[c][i];
  return out;
}

AudioClip MixSameClass(const AudioClip& a, const AudioClip& b,
                       const AugmentConfig& cfg, Rng& rng) {
  return MixWith(a, b, Uniform(rng, cfg.mix_weight_lo, cfg.mix_weight_hi));
}

}  // namespace ascene::augment
