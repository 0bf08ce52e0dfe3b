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

#pragma once

#include <filesystem>
#include <span>

#include <json.hpp>

#include "dmda/model/patch_net.hpp"

namespace dmda::model {

// Checkpoint layout: `<stem>.bin` holds every tensor as little-endian float64
// in declaration order; `<stem>.json` lists name, shape and element offset of
// each tensor together with caller-supplied metadata (config, provenance).

void save_checkpoint(const std::filesystem::path& stem, std::span<const NamedTensor> tensors,
                     const nlohmann::json& metadata);

/// Fills `tensors` in place. Names and shapes must match the manifest.
/// Returns the stored metadata.
nlohmann::json load_checkpoint(const std::filesystem::path& stem,
                               std::span<NamedTensor> tensors);

/// Reads only the manifest.
nlohmann::json read_checkpoint_manifest(const std::filesystem::path& stem);

void save_patch_net(const std::filesystem::path& stem, const PatchNet& net,
                    nlohmann::json metadata = nlohmann::json::object());
PatchNet load_patch_net(const std::filesystem::path& stem);

}  // namespace dmda::model
