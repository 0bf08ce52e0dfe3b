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

#include <map>
#include <string>
#include <vector>

#include "dmda/grad/tensor.hpp"
#include "dmda/synth/dataset.hpp"
#include "dmda/synth/image.hpp"

namespace dmda::candidates {

struct DetectorConfig {
  double sigma_small = 2.0;
  double sigma_large = 6.0;
  double nms_radius = 8.0;
  int budget = 15;

  void validate() const;
};

void to_json(nlohmann::json& j, const DetectorConfig& c);
void from_json(const nlohmann::json& j, DetectorConfig& c);

struct Candidate {
  std::string image_id;
  int x = 0;
  int y = 0;
  double detector_score = 0.0;

  bool operator==(const Candidate&) const = default;
};

/// Separable Gaussian blur with replicated borders.
synth::Image gaussian_blur(const synth::Image& image, double sigma);

/// blur(sigma_small) - blur(sigma_large).
synth::Image difference_of_gaussians(const synth::Image& image, double sigma_small,
                                     double sigma_large);

/// DoG local maxima, greedy non-maximum suppression, strongest `budget` kept.
/// Equal scores are ordered by (y, x).
std::vector<Candidate> detect_candidates(const synth::Image& image, const std::string& image_id,
                                         const DetectorConfig& config);

/// Writes a side x side window starting at (x - side/2, y - side/2) into
/// `out`, zero outside the image, scaled to [0, 1] by the image min/max.
void extract_patch_into(const synth::Image& image, int x, int y, int side, double lo, double hi,
                        double* out);

/// [1, side, side] patch around the candidate.
grad::Tensor extract_patch(const synth::Image& image, const Candidate& candidate, int side);

using AnnotationIndex = std::map<std::string, std::vector<synth::LesionAnnotation>>;

/// Positive iff the candidate lies inside (or on the border of) an annotation
/// of its own image. Every candidate image must appear in `annotations`.
std::vector<bool> assign_ground_truth(const std::vector<Candidate>& candidates,
                                      const AnnotationIndex& annotations);

/// Rows of image_id,x,y,detector_score,gt_label.
void write_candidate_dump(const std::filesystem::path& path,
                          const std::vector<Candidate>& candidates,
                          const std::vector<bool>& labels);

}  // namespace dmda::candidates
