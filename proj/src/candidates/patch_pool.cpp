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

#include "dmda/candidates/patch_pool.hpp"

#include <algorithm>

#include "dmda/error.hpp"

namespace dmda::candidates {

std::vector<std::size_t> PatchPool::indices_with(PatchLabel label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) out.push_back(i);
  }
  return out;
}

std::size_t CandidateSplit::lesion_count() const {
  std::size_t n = 0;
  for (const auto& img : images) n += img.annotations.size();
  return n;
}

AnnotationIndex CandidateSplit::annotation_index() const {
  AnnotationIndex index;
  for (const auto& img : images) index[img.image_id] = img.annotations;
  return index;
}

CandidateSplit build_candidate_split(const synth::DatasetManifest& manifest,
                                     const std::filesystem::path& dataset_dir,
                                     const std::string& split, const CandidateStageConfig& config) {
  config.detector.validate();
  require(config.patch_side >= 2 && config.patch_side % 2 == 0, ErrorCode::kInvalidArgument,
          "build_candidate_split: patch_side must be even");
  const auto exams = manifest.exams_in(split);
  require(!exams.empty(), ErrorCode::kInvalidArgument,
          "build_candidate_split: split '" + split + "' has no exams");

  CandidateSplit out;
  out.patches.side = config.patch_side;
  const std::size_t psize = out.patches.patch_size();
  for (const auto* exam : exams) {
    out.exam_labels[exam->exam_id] = exam->exam_label;
    for (const auto& rec : exam->images) {
      const auto native = synth::read_pgm16(dataset_dir / rec.path);
      const auto image =
          synth::resample_bilinear(native, rec.pixel_spacing_um, config.grid_spacing_um);
      SplitImage si;
      si.image_id = rec.image_id;
      si.exam_id = exam->exam_id;
      si.width = image.width;
      si.height = image.height;
      const double scale = rec.pixel_spacing_um / config.grid_spacing_um;
      for (const auto& a : rec.annotations) {
        si.annotations.push_back(
            {synth::rescale_coordinate(a.center_x, rec.pixel_spacing_um, config.grid_spacing_um),
             synth::rescale_coordinate(a.center_y, rec.pixel_spacing_um, config.grid_spacing_um),
             a.radius_px * scale});
      }
      si.candidates = detect_candidates(image, rec.image_id, config.detector);
      si.hits = assign_ground_truth(si.candidates, {{rec.image_id, si.annotations}});

      const auto [lo, hi] = std::minmax_element(image.pixels.begin(), image.pixels.end());
      auto& pool = out.patches;
      const std::size_t base = pool.pixels.size();
      pool.pixels.resize(base + si.candidates.size() * psize);
      for (std::size_t c = 0; c < si.candidates.size(); ++c) {
        extract_patch_into(image, si.candidates[c].x, si.candidates[c].y, config.patch_side, *lo,
                           *hi, pool.pixels.data() + base + c * psize);
        pool.labels.push_back(si.hits[c] ? PatchLabel::kPositive : PatchLabel::kNegative);
        pool.exam_ids.push_back(exam->exam_id);
        pool.image_ids.push_back(rec.image_id);
      }
      out.images.push_back(std::move(si));
    }
  }
  return out;
}

TargetPool make_target_pool(const CandidateSplit& split, bool with_exam_labels) {
  TargetPool pool;
  pool.patches = split.patches;
  std::fill(pool.patches.labels.begin(), pool.patches.labels.end(), PatchLabel::kUnlabeled);
  if (with_exam_labels) pool.exam_labels = split.exam_labels;
  return pool;
}

}  // namespace dmda::candidates
