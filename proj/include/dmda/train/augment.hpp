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

#include <json.hpp>

#include "dmda/grad/tensor.hpp"
#include "dmda/rng.hpp"

namespace dmda::train {

struct AugmentConfig {
  bool hflip = true;
  bool vflip = true;
  double max_rotation_deg = 15.0;
  double max_zoom_frac = 0.10;
  double max_translate_px = 15.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const AugmentConfig& c);
void from_json(const nlohmann::json& j, AugmentConfig& c);

/// One sampled geometric transform.
struct AugmentDraw {
  bool hflip = false;
  bool vflip = false;
  double rotation_rad = 0.0;
  double zoom = 1.0;
  double translate_x = 0.0;
  double translate_y = 0.0;
};

AugmentDraw draw_augment(const AugmentConfig& config, Rng& rng);

/// Resamples a side x side patch through `draw`: flips about the patch
/// center, then zoom, rotation and translation. Bilinear, zero outside.
void apply_augment(const double* src, double* dst, int side, const AugmentDraw& draw);

/// Tensor form for a [1, S, S] or [S, S] patch.
grad::Tensor augment(const grad::Tensor& patch, const AugmentConfig& config, Rng& rng);
grad::Tensor apply_augment(const grad::Tensor& patch, const AugmentDraw& draw);

}  // namespace dmda::train
