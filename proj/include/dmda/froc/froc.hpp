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
#include <string>
#include <vector>

#include "dmda/candidates/patch_pool.hpp"
#include "dmda/model/patch_net.hpp"

namespace dmda::froc {

struct ScoredCandidate {
  std::string image_id;
  std::string exam_id;
  int x = 0;
  int y = 0;
  double model_score = 0.0;
  bool is_hit = false;
};

struct FrocPoint {
  double threshold = 0.0;
  double fp_per_image = 0.0;
  double sensitivity = 0.0;

  bool operator==(const FrocPoint&) const = default;
};

/// Points ordered by decreasing threshold.
struct FrocCurve {
  std::vector<FrocPoint> points;
  std::size_t n_images = 0;
  std::size_t n_lesions = 0;
};

struct AggregateCurve {
  std::vector<double> fp_grid;
  std::vector<double> mean;
  std::vector<double> std;
  std::size_t n_runs = 0;
};

/// Every candidate of every image in the split, in split order.
std::vector<ScoredCandidate> score_dataset(model::PatchNet& net,
                                           const candidates::CandidateSplit& split);

/// One point per distinct score. A lesion counts once it has any candidate
/// inside its region at or above the threshold; every non-hit candidate at
/// or above the threshold is a false positive. `annotations` lists every
/// evaluated image, lesion-free ones included.
FrocCurve compute_froc(std::span<const ScoredCandidate> scored,
                       const candidates::AnnotationIndex& annotations);

/// Step reading: sensitivity of the point with the largest fp_per_image not
/// above each level, 0 when none qualifies.
std::vector<double> sensitivity_at(const FrocCurve& curve, std::span<const double> fp_levels);

/// Pointwise mean and population standard deviation over runs.
AggregateCurve aggregate_runs(std::span<const FrocCurve> curves, std::span<const double> fp_grid);

/// "threshold,fp_per_image,sensitivity" rows with 6 decimals, preceded by
/// a '# ' comment line holding `provenance` and the image/lesion counts.
void write_froc_csv(const std::filesystem::path& path, const FrocCurve& curve,
                    const std::string& provenance);

struct FrocFile {
  std::string provenance;
  FrocCurve curve;
};

FrocFile read_froc_csv(const std::filesystem::path& path);

/// "fp_per_image,mean_sensitivity,std_sensitivity" rows with 6 decimals.
void write_aggregate_csv(const std::filesystem::path& path, const AggregateCurve& curve,
                         const std::string& provenance);

}  // namespace dmda::froc
