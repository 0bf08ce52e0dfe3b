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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmda/candidates/patch_pool.hpp"
#include "dmda/model/patch_net.hpp"
#include "dmda/synth/dataset.hpp"
#include "dmda/train/plan.hpp"

namespace dmda::exp {

struct DatasetSection {
  std::uint64_t seed = 2026;
  int n_patients_source = 200;
  int n_patients_target = 200;
  double positive_fraction = 0.22;
  synth::SceneParams scene;
  synth::VendorProfile source_vendor;
  synth::VendorProfile target_vendor;
};

struct EvaluationSection {
  std::vector<double> fp_levels{0.01, 0.02, 0.1};
  std::vector<double> fp_grid;
  int n_runs = 3;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path output_dir;  // absolute after loading
  DatasetSection dataset;
  candidates::DetectorConfig detector;
  double grid_spacing_um = 200.0;
  model::PatchNetConfig model;
  train::SourceTrainConfig source_training;
  std::vector<train::AdaptPlan> plans;
  std::vector<std::uint64_t> seeds;
  EvaluationSection evaluation;

  nlohmann::json raw;  // the config as written
  std::string hash;

  /// Relative output paths resolve against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static ExperimentConfig load(const std::filesystem::path& path);

  void validate() const;
  candidates::CandidateStageConfig candidate_stage() const;
  const train::AdaptPlan& plan(const std::string& name) const;
  /// Plan seeds when set, otherwise the experiment seeds.
  std::vector<std::uint64_t> seeds_for(const train::AdaptPlan& plan) const;
};

/// FNV-1a 64 over the compact sorted-key serialization, 16 hex digits.
std::string config_hash(const nlohmann::json& config);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace dmda::exp
