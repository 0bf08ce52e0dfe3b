// Copyright 2026 The dmda Authors.
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

#include "dmda/model/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "dmda/error.hpp"

namespace dmda::model {
namespace fs = std::filesystem;

namespace {

fs::path with_suffix(const fs::path& stem, const char* suffix) {
  return fs::path(stem.string() + suffix);
}

void put_le(std::vector<unsigned char>& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<unsigned char>(bits & 0xFF));
    bits >>= 8;
  }
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const fs::path& stem, std::span<const NamedTensor> tensors,
                     const nlohmann::json& metadata) {
  std::vector<unsigned char> bytes;
  nlohmann::json entries = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : tensors) {
    entries.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset},
                       {"count", t.numel()}});
    for (double v : t.data()) put_le(bytes, v);
    offset += t.numel();
  }
  nlohmann::json manifest = {{"format", "dmda-checkpoint-v1"},
                             {"dtype", "float64-le"},
                             {"total_elements", offset},
                             {"tensors", entries},
                             {"metadata", metadata}};
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  std::ofstream bin(with_suffix(stem, ".bin"), std::ios::binary | std::ios::trunc);
  bin.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  bin.close();
  require(!bin.fail(), ErrorCode::kIo, "save_checkpoint: failed writing " + stem.string() + ".bin");
  // The manifest goes last so its presence marks a complete checkpoint.
  std::ofstream js(with_suffix(stem, ".json"), std::ios::trunc);
  js << manifest.dump(2) << '\n';
  require(js.good(), ErrorCode::kIo, "save_checkpoint: failed writing " + stem.string() + ".json");
}

nlohmann::json read_checkpoint_manifest(const fs::path& stem) {
  std::ifstream js(with_suffix(stem, ".json"));
  require(js.good(), ErrorCode::kIo, "checkpoint: cannot open " + stem.string() + ".json");
  try {
    return nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kIo, "checkpoint: malformed manifest " + stem.string() + ".json: " + e.what());
  }
}

nlohmann::json load_checkpoint(const fs::path& stem, std::span<NamedTensor> tensors) {
  const auto manifest = read_checkpoint_manifest(stem);
  std::ifstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  require(bin.good(), ErrorCode::kIo, "checkpoint: cannot open " + stem.string() + ".bin");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)),
                                         std::istreambuf_iterator<char>());
  const auto total = manifest.at("total_elements").get<std::size_t>();
  require(bytes.size() == total * 8, ErrorCode::kIo,
          "checkpoint: " + stem.string() + ".bin has " + std::to_string(bytes.size()) +
              " bytes, manifest expects " + std::to_string(total * 8));
  const auto& entries = manifest.at("tensors");
  require(entries.size() == tensors.size(), ErrorCode::kShape,
          "checkpoint: manifest lists " + std::to_string(entries.size()) + " tensors, model has " +
              std::to_string(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& e = entries[i];
    auto& [name, t] = tensors[i];
    require(e.at("name").get<std::string>() == name, ErrorCode::kShape,
            "checkpoint: tensor " + std::to_string(i) + " is '" + e.at("name").get<std::string>() +
                "', expected '" + name + "'");
    require(e.at("shape").get<grad::Shape>() == t.shape(), ErrorCode::kShape,
            "checkpoint: shape mismatch for '" + name + "'");
    const auto off = e.at("offset").get<std::size_t>();
    auto data = t.data();
    require(off + data.size() <= total, ErrorCode::kIo, "checkpoint: offset out of range");
    for (std::size_t k = 0; k < data.size(); ++k) data[k] = get_le(bytes.data() + (off + k) * 8);
  }
  return manifest.at("metadata");
}

void save_patch_net(const fs::path& stem, const PatchNet& net, nlohmann::json metadata) {
  metadata["patch_net_config"] = net.config();
  save_checkpoint(stem, net.state(), metadata);
}

PatchNet load_patch_net(const fs::path& stem) {
  const auto manifest = read_checkpoint_manifest(stem);
  const auto config = manifest.at("metadata").at("patch_net_config").get<PatchNetConfig>();
  PatchNet net = PatchNet::build(config, 0);
  auto state = net.state();
  load_checkpoint(stem, state);
  return net;
}

}  // namespace dmda::model
