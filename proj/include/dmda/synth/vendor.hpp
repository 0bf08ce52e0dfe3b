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
#include <string>
#include <vector>

#include <json.hpp>

#include "dmda/synth/image.hpp"

namespace dmda::synth {

struct BackgroundTexture {
  double smooth_noise_scale = 0.12;
  double base_intensity = 0.45;

  bool operator==(const BackgroundTexture&) const = default;
};

struct VendorProfile {
  std::string name;
  double pixel_spacing_um = 70.0;
  BackgroundTexture background_texture;
  double contrast_gain = 1.0;
  double gamma = 1.0;
  double noise_sigma = 0.0;

  void validate() const;
  bool operator==(const VendorProfile&) const = default;
};

void to_json(nlohmann::json& j, const VendorProfile& v);
void from_json(const nlohmann::json& j, VendorProfile& v);

/// Gaussian-profile bright lesion; the annotated region is the disk of
/// `radius_mm` around the center.
struct SceneLesion {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double radius_mm = 1.5;
  double amplitude = 0.15;
};

/// Elongated anisotropic Gaussian (duct/vessel-like structure).
struct SceneRidge {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double angle_rad = 0.0;
  double length_sigma_mm = 3.0;
  double width_sigma_mm = 0.5;
  double amplitude = 0.1;
};

/// Continuous scene in physical millimetres: seeded multi-octave value
/// noise plus ridges and lesions. Being analytic, it can be sampled at any
/// vendor's pixel spacing without an intermediate raster.
class Scene {
 public:
  Scene(double extent_mm, BackgroundTexture texture, std::uint64_t texture_seed);

  double extent_mm() const { return extent_mm_; }
  void add_lesion(const SceneLesion& lesion) { lesions_.push_back(lesion); }
  void add_ridge(const SceneRidge& ridge) { ridges_.push_back(ridge); }
  const std::vector<SceneLesion>& lesions() const { return lesions_; }

  double background_at(double x_mm, double y_mm) const;
  double value_at(double x_mm, double y_mm) const;

 private:
  // One octave of value noise, pre-sampled on its lattice over the extent.
  struct Lattice {
    Lattice(std::uint64_t seed, std::uint64_t octave, double spacing_mm, double extent_mm);
    double sample(double x_mm, double y_mm) const;

    double spacing;
    long side;
    std::vector<double> values;
  };

  double extent_mm_;
  BackgroundTexture texture_;
  std::vector<Lattice> octaves_;
  std::vector<SceneLesion> lesions_;
  std::vector<SceneRidge> ridges_;
};

/// Samples `scene` at the vendor's pixel spacing (pixel centers at
/// (i + 0.5) * spacing) on a side_px x side_px grid and applies
///   out = clamp(contrast_gain * scene, 0, 1) ^ gamma + N(0, noise_sigma)
/// clamped to [0, 1].
Image apply_vendor_transform(const Scene& scene, const VendorProfile& vendor, int side_px,
                             std::uint64_t noise_seed);

}  // namespace dmda::synth
