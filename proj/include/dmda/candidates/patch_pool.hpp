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
#include <map>
#include <string>
#include <vector>

#include "dmda/candidates/detector.hpp"
#include "dmda/synth/dataset.hpp"

namespace dmda::candidates {

enum class PatchLabel : std::int8_t { kNegative = 0, kPositive = 1, kUnlabeled = -1 };

/// Flat store of same-sized patches with per-patch provenance.
struct PatchPool {
  int side = 0;
  std::vector<double> pixels;  // size() * side * side
  std::vector<PatchLabel> labels;
  std::vector<std::string> exam_ids;
  std::vector<std::string> image_ids;

  std::size_t size() const { return labels.size(); }
  std::size_t patch_size() const { return static_cast<std::size_t>(side) * side; }
  const double* patch(std::size_t i) const { return pixels.data() + i * patch_size(); }
  std::vector<std::size_t> indices_with(PatchLabel label) const;
};

/// Target-domain patches. Candidate-level truth is never carried over; only
/// the optional exam-level labels are.
struct TargetPool {
  PatchPool patches;
  std::map<std::string, bool> exam_labels;  // empty when exam labels are withheld

  bool has_exam_labels() const { return !exam_labels.empty(); }
};

struct SplitImage {
  std::string image_id;
  std::string exam_id;
  int width = 0;
  int height = 0;
  std::vector<Candidate> candidates;
  std::vector<synth::LesionAnnotation> annotations;  // on the detection grid
  std::vector<bool> hits;
};

/// One dataset split after resampling, detection, labeling and patch
/// extraction. Patches are stored image by image in candidate order.
struct CandidateSplit {
  std::vector<SplitImage> images;
  std::map<std::string, bool> exam_labels;
  PatchPool patches;

  std::size_t candidate_count() const { return patches.size(); }
  std::size_t lesion_count() const;
  AnnotationIndex annotation_index() const;
};

struct CandidateStageConfig {
  DetectorConfig detector;
  double grid_spacing_um = 200.0;
  int patch_side = 64;
};

CandidateSplit build_candidate_split(const synth::DatasetManifest& manifest,
                                     const std::filesystem::path& dataset_dir,
                                     const std::string& split, const CandidateStageConfig& config);

TargetPool make_target_pool(const CandidateSplit& split, bool with_exam_labels);

}  // namespace dmda::candidates
