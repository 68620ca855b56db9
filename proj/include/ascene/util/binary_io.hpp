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

#pragma once

// Little-endian primitive readers/writers shared by the on-disk formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ascene/error.hpp"

namespace ascene::io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats assume a little-endian host");

inline void WriteU32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void WriteF32(std::ostream& os, float v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void WriteBytes(std::ostream& os, std::span<const char> bytes) {
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void WriteString(std::ostream& os, const std::string& s) {
  WriteU32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void WriteF32Array(std::ostream& os, std::span<const float> v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(float)));
}

inline void ReadExact(std::istream& is, void* dst, std::size_t n,
                      const char* what) {
  is.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    ThrowData(std::string("truncated file while reading ") + what,
              ErrorCode::kMalformedHeader);
}

inline std::uint32_t ReadU32(std::istream& is, const char* what) {
  std::uint32_t v = 0;
  ReadExact(is, &v, sizeof(v), what);
  return v;
}

inline float ReadF32(std::istream& is, const char* what) {
  float v = 0;
  ReadExact(is, &v, sizeof(v), what);
  return v;
}

inline std::string ReadString(std::istream& is, const char* what,
                              std::uint32_t max_len = 1u << 26) {
  const std::uint32_t n = ReadU32(is, what);
  if (n > max_len) ThrowData(std::string("implausible length for ") + what);
  std::string s(n, '\0');
  ReadExact(is, s.data(), n, what);
  return s;
}

inline std::vector<float> ReadF32Array(std::istream& is, std::size_t n,
                                       const char* what) {
  std::vector<float> v(n);
  ReadExact(is, v.data(), n * sizeof(float), what);
  return v;
}

inline void ExpectMagic(std::istream& is, const char (&magic)[5],
                        const char* what) {
  char buf[4];
  ReadExact(is, buf, 4, what);
  if (std::memcmp(buf, magic, 4) != 0)
    ThrowData(std::string("bad magic for ") + what,
              ErrorCode::kMalformedHeader);
}

}  // namespace ascene::io
