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

#include "ascene/nn/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "ascene/error.hpp"
#include "ascene/util/binary_io.hpp"

namespace ascene::nn {

std::string SerializeCheckpoint(const Network<float>& net) {
  std::ostringstream os(std::ios::binary);
  os.write("ASCM", 4);
  io::WriteU32(os, kCheckpointVersion);
  io::WriteString(os, SerializeGraph(net.graph()));
  std::uint32_t blobs = 0;
  for (int id = 0; id < net.num_layers(); ++id)
    blobs += static_cast<std::uint32_t>(net.params(id).size());
  io::WriteU32(os, blobs);
  for (int id = 0; id < net.num_layers(); ++id)
    for (const auto& p : net.params(id)) {
      io::WriteU32(os, static_cast<std::uint32_t>(id));
      io::WriteString(os, p.name);
      io::WriteU32(os, static_cast<std::uint32_t>(p.dims.size()));
      for (int d : p.dims) io::WriteU32(os, static_cast<std::uint32_t>(d));
      io::WriteF32Array(os, p.value);
    }
  return std::move(os).str();
}

Network<float> DeserializeCheckpoint(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  io::ExpectMagic(is, "ASCM", "checkpoint");
  const std::uint32_t version = io::ReadU32(is, "checkpoint version");
  if (version != kCheckpointVersion)
    ThrowData("unsupported checkpoint version " + std::to_string(version),
              ErrorCode::kUnsupportedEncoding);
  GraphSpec graph = ParseGraph(io::ReadString(is, "checkpoint topology"));
  Network<float> net = Network<float>::Build(std::move(graph), 0);
  const std::uint32_t blobs = io::ReadU32(is, "checkpoint blob count");
  std::uint32_t expected = 0;
  for (int id = 0; id < net.num_layers(); ++id)
    expected += static_cast<std::uint32_t>(net.params(id).size());
  if (blobs != expected)
    ThrowData("checkpoint has " + std::to_string(blobs) +
              " parameter blobs, graph needs " + std::to_string(expected));
  for (std::uint32_t k = 0; k < blobs; ++k) {
    const std::uint32_t id = io::ReadU32(is, "blob layer id");
    if (id >= static_cast<std::uint32_t>(net.num_layers()))
      ThrowData("checkpoint blob refers to unknown layer");
    const std::string name = io::ReadString(is, "blob name", 256);
    Param<float>& p = net.param(static_cast<int>(id), name);
    const std::uint32_t ndims = io::ReadU32(is, "blob ndims");
    std::vector<int> dims(ndims);
    for (auto& d : dims) d = static_cast<int>(io::ReadU32(is, "blob dims"));
    if (dims != p.dims)
      ThrowShape("checkpoint blob " + name + " of layer " + std::to_string(id) +
                 " has unexpected dims");
    p.value = io::ReadF32Array(is, p.value.size(), "blob data");
  }
  if (is.peek() != std::char_traits<char>::eof())
    ThrowData("trailing bytes after checkpoint", ErrorCode::kMalformedHeader);
  return net;
}

std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    ThrowData("cannot open file: " + path.string(), ErrorCode::kFileNotFound);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void WriteFileBytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowData("cannot write file: " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) ThrowData("failed writing file: " + path.string());
}

void SaveCheckpoint(const std::filesystem::path& path,
                    const Network<float>& net) {
  WriteFileBytes(path, SerializeCheckpoint(net));
}

Network<float> LoadCheckpoint(const std::filesystem::path& path) {
  return DeserializeCheckpoint(ReadFileBytes(path));
}

std::size_t CheckpointSize(const Network<float>& net) {
  return SerializeCheckpoint(net).size();
}

}  // namespace ascene::nn
