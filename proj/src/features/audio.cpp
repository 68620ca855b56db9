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

#include "ascene/features/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ascene/error.hpp"
#include "ascene/util/binary_io.hpp"

namespace ascene::features {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t U16At(const char* p) {
  std::uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

std::uint32_t U32At(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

}  // namespace

void AudioClip::Validate() const {
  if (channels.empty() || channels.size() > 2)
    ThrowData("audio clip must have 1 or 2 channels");
  if (sample_rate <= 0) ThrowData("audio clip has non-positive sample rate");
  const std::size_t n = channels.front().size();
  if (n == 0) ThrowData("audio clip is empty");
  for (const auto& ch : channels) {
    if (ch.size() != n) ThrowData("audio channels differ in length");
    for (float s : ch)
      if (!std::isfinite(s))
        ThrowData("audio clip contains non-finite samples",
                  ErrorCode::kNonFinite);
  }
}

AudioClip AudioClip::Mono(std::vector<float> samples, int sample_rate) {
  AudioClip clip;
  clip.channels.push_back(std::move(samples));
  clip.sample_rate = sample_rate;
  return clip;
}

AudioClip LoadWav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    ThrowData("cannot open WAV file: " + path.string(),
              ErrorCode::kFileNotFound);

  char riff[12];
  is.read(riff, 12);
  if (is.gcount() != 12 || std::memcmp(riff, "RIFF", 4) != 0 ||
      std::memcmp(riff + 8, "WAVE", 4) != 0)
    ThrowData("malformed WAV header: " + path.string(),
              ErrorCode::kMalformedHeader);

  FmtChunk fmt;
  bool have_fmt = false;
  std::vector<char> payload;
  bool have_data = false;

  while (!have_data) {
    char hdr[8];
    is.read(hdr, 8);
    if (is.gcount() != 8)
      ThrowData("WAV file has no data chunk: " + path.string(),
                ErrorCode::kMalformedHeader);
    const std::uint32_t size = U32At(hdr + 4);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16)
        ThrowData("WAV fmt chunk too short", ErrorCode::kMalformedHeader);
      std::vector<char> body(size);
      is.read(body.data(), size);
      if (static_cast<std::uint32_t>(is.gcount()) != size)
        ThrowData("truncated WAV fmt chunk", ErrorCode::kMalformedHeader);
      fmt.format = U16At(body.data());
      fmt.channels = U16At(body.data() + 2);
      fmt.sample_rate = U32At(body.data() + 4);
      fmt.block_align = U16At(body.data() + 12);
      fmt.bits = U16At(body.data() + 14);
      if (fmt.format == kFormatExtensible) {
        if (size < 40)
          ThrowData("WAV extensible fmt chunk too short",
                    ErrorCode::kMalformedHeader);
        // Subformat GUID starts at byte 24; its first two bytes hold the tag.
        fmt.format = U16At(body.data() + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt)
        ThrowData("WAV data chunk before fmt chunk",
                  ErrorCode::kMalformedHeader);
      payload.resize(size);
      is.read(payload.data(), size);
      if (static_cast<std::uint32_t>(is.gcount()) != size)
        ThrowData("truncated WAV data chunk", ErrorCode::kMalformedHeader);
      have_data = true;
    } else {
      is.seekg(size + (size & 1u), std::ios::cur);
      if (!is)
        ThrowData("malformed WAV chunk list", ErrorCode::kMalformedHeader);
    }
    if (size & 1u && !have_data) {
      // fmt chunks with odd size carry a pad byte
      if (std::memcmp(hdr, "fmt ", 4) == 0) is.seekg(1, std::ios::cur);
    }
  }

  const bool pcm16 = fmt.format == kFormatPcm && fmt.bits == 16;
  const bool f32 = fmt.format == kFormatFloat && fmt.bits == 32;
  if (!pcm16 && !f32)
    ThrowData("unsupported WAV encoding (format " +
                  std::to_string(fmt.format) + ", " +
                  std::to_string(fmt.bits) + " bits)",
              ErrorCode::kUnsupportedEncoding);
  if (fmt.channels < 1 || fmt.channels > 2)
    ThrowData("unsupported WAV channel count " + std::to_string(fmt.channels),
              ErrorCode::kUnsupportedEncoding);
  if (fmt.sample_rate == 0)
    ThrowData("WAV sample rate is zero", ErrorCode::kMalformedHeader);

  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t frames = payload.size() / frame_bytes;

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt.sample_rate);
  clip.channels.assign(fmt.channels, std::vector<float>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < fmt.channels; ++c) {
      const char* p = payload.data() + i * frame_bytes + c * bytes_per_sample;
      float v;
      if (pcm16) {
        std::int16_t s;
        std::memcpy(&s, p, 2);
        v = static_cast<float>(s) / 32768.0f;
      } else {
        std::memcpy(&v, p, 4);
        v = std::clamp(v, -1.0f, 1.0f);
      }
      clip.channels[c][i] = v;
    }
  }
  return clip;
}

void SaveWav(const std::filesystem::path& path, const AudioClip& clip,
             WavEncoding encoding) {
  clip.Validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowData("cannot write WAV file: " + path.string());

  const std::uint16_t channels = static_cast<std::uint16_t>(clip.num_channels());
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t block_align = channels * bits / 8;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(clip.num_samples() * block_align);

  auto u16 = [&os](std::uint16_t v) {
    os.write(reinterpret_cast<const char*>(&v), 2);
  };
  os.write("RIFF", 4);
  io::WriteU32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  io::WriteU32(os, 16);
  u16(encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat);
  u16(channels);
  io::WriteU32(os, static_cast<std::uint32_t>(clip.sample_rate));
  io::WriteU32(os, static_cast<std::uint32_t>(clip.sample_rate) * block_align);
  u16(block_align);
  u16(bits);
  os.write("data", 4);
  io::WriteU32(os, data_bytes);
  for (std::size_t i = 0; i < clip.num_samples(); ++i) {
    for (const auto& ch : clip.channels) {
      const float v = std::clamp(ch[i], -1.0f, 1.0f);
      if (encoding == WavEncoding::kPcm16) {
        const auto s = static_cast<std::int16_t>(
            std::clamp(std::lround(v * 32768.0f), -32768L, 32767L));
        os.write(reinterpret_cast<const char*>(&s), 2);
      } else {
        io::WriteF32(os, v);
      }
    }
  }
  if (!os) ThrowData("failed writing WAV file: " + path.string());
}

AudioClip Downmix(const AudioClip& clip) {
  if (clip.num_channels() <= 1) return clip;
  std::vector<float> mono(clip.num_samples(), 0.0f);
  const float w = 1.0f / static_cast<float>(clip.num_channels());
  for (const auto& ch : clip.channels)
    for (std::size_t i = 0; i < mono.size(); ++i) mono[i] += w * ch[i];
  return AudioClip::Mono(std::move(mono), clip.sample_rate);
}

}  // namespace ascene::features
