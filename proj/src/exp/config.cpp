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

#include "dmda/exp/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "dmda/error.hpp"

namespace dmda::exp {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash(const nlohmann::json& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

namespace {

std::vector<double> default_fp_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) grid.push_back(0.01 * i);
  return grid;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    c.raw = j;
    c.hash = config_hash(j);
    c.name = j.value("name", c.name);
    const auto out = std::filesystem::path(j.at("output_dir").get<std::string>());
    c.output_dir = out.is_absolute() ? out : (base_dir / out).lexically_normal();

    const auto& d = j.at("dataset");
    c.dataset.seed = d.value("seed", c.dataset.seed);
    c.dataset.n_patients_source = d.value("n_patients_source", c.dataset.n_patients_source);
    c.dataset.n_patients_target = d.value("n_patients_target", c.dataset.n_patients_target);
    c.dataset.positive_fraction = d.value("positive_fraction", c.dataset.positive_fraction);
    if (d.contains("scene")) c.dataset.scene = d.at("scene").get<synth::SceneParams>();
    c.dataset.source_vendor = d.at("source_vendor").get<synth::VendorProfile>();
    c.dataset.target_vendor = d.at("target_vendor").get<synth::VendorProfile>();

    if (j.contains("candidates")) {
      const auto& cs = j.at("candidates");
      c.detector = cs.get<candidates::DetectorConfig>();
      c.grid_spacing_um = cs.value("grid_spacing_um", c.grid_spacing_um);
    }
    if (j.contains("model")) c.model = j.at("model").get<model::PatchNetConfig>();
    if (j.contains("source_training")) {
      c.source_training = j.at("source_training").get<train::SourceTrainConfig>();
    }
    const auto& a = j.at("adaptation");
    const auto defaults = a.value("plan_defaults", nlohmann::json::object());
    for (const auto& p : a.at("plans")) {
      auto merged = defaults;
      merged.update(p);
      c.plans.push_back(merged.get<train::AdaptPlan>());
    }

    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      c.evaluation.fp_levels = e.value("fp_levels", c.evaluation.fp_levels);
      c.evaluation.fp_grid = e.value("fp_grid", c.evaluation.fp_grid);
      c.evaluation.n_runs = e.value("n_runs", c.evaluation.n_runs);
    }
    if (c.evaluation.fp_grid.empty()) c.evaluation.fp_grid = default_fp_grid();
    if (j.contains("seeds")) {
      c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
      const bool runs_given = j.contains("evaluation") && j.at("evaluation").contains("n_runs");
      if (!runs_given) c.evaluation.n_runs = static_cast<int>(c.seeds.size());
    } else {
      for (int i = 1; i <= c.evaluation.n_runs; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "config: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, "config: " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j, std::filesystem::absolute(path).parent_path());
}

void ExperimentConfig::validate() const {
  require(evaluation.n_runs >= 1, ErrorCode::kInvalidArgument, "config: n_runs must be >= 1");
  require(static_cast<int>(seeds.size()) == evaluation.n_runs, ErrorCode::kInvalidArgument,
          "config: seeds has " + std::to_string(seeds.size()) + " entries but n_runs is " +
              std::to_string(evaluation.n_runs));
  require(!plans.empty(), ErrorCode::kInvalidArgument, "config: adaptation.plans is empty");
  require(!evaluation.fp_levels.empty(), ErrorCode::kInvalidArgument, "config: fp_levels is empty");
  for (double l : evaluation.fp_levels) {
    require(l >= 0.0, ErrorCode::kInvalidArgument, "config: fp_levels must be >= 0");
  }
  std::set<std::string> names;
  for (const auto& p : plans) {
    p.validate();
    require(names.insert(p.name()).second, ErrorCode::kInvalidArgument,
            "config: duplicate plan " + p.name());
  }
  require(grid_spacing_um > 0.0, ErrorCode::kInvalidArgument, "config: grid_spacing_um must be > 0");
  model.validate();
  detector.validate();
  source_training.validate();
  dataset.source_vendor.validate();
  dataset.target_vendor.validate();
  require(dataset.source_vendor.name != dataset.target_vendor.name, ErrorCode::kInvalidArgument,
          "config: source and target vendors need distinct names");
}

candidates::CandidateStageConfig ExperimentConfig::candidate_stage() const {
  return {detector, grid_spacing_um, model.input_side};
}

const train::AdaptPlan& ExperimentConfig::plan(const std::string& name) const {
  const auto it = std::find_if(plans.begin(), plans.end(),
                               [&](const train::AdaptPlan& p) { return p.name() == name; });
  require(it != plans.end(), ErrorCode::kInvalidArgument, "config: no plan named '" + name + "'");
  return *it;
}

std::vector<std::uint64_t> ExperimentConfig::seeds_for(const train::AdaptPlan& plan) const {
  return plan.seeds.empty() ? seeds : plan.seeds;
}

}  // namespace dmda::exp
