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

#include "dmda/synth/vendor.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dmda/error.hpp"
#include "dmda/rng.hpp"

namespace dmda::synth {

void VendorProfile::validate() const {
  require(pixel_spacing_um > 0.0, ErrorCode::kInvalidArgument,
          "VendorProfile '" + name + "': pixel_spacing_um must be > 0");
  require(noise_sigma >= 0.0, ErrorCode::kInvalidArgument,
          "VendorProfile '" + name + "': noise_sigma must be >= 0");
  require(contrast_gain > 0.0 && gamma > 0.0, ErrorCode::kInvalidArgument,
          "VendorProfile '" + name + "': contrast_gain and gamma must be > 0");
  require(background_texture.smooth_noise_scale >= 0.0, ErrorCode::kInvalidArgument,
          "VendorProfile '" + name + "': smooth_noise_scale must be >= 0");
}

void to_json(nlohmann::json& j, const VendorProfile& v) {
  j = {{"name", v.name},
       {"pixel_spacing_um", v.pixel_spacing_um},
       {"background_texture",
        {{"smooth_noise_scale", v.background_texture.smooth_noise_scale},
         {"base_intensity", v.background_texture.base_intensity}}},
       {"contrast_gain", v.contrast_gain},
       {"gamma", v.gamma},
       {"noise_sigma", v.noise_sigma}};
}

void from_json(const nlohmann::json& j, VendorProfile& v) {
  v.name = j.at("name").get<std::string>();
  v.pixel_spacing_um = j.at("pixel_spacing_um").get<double>();
  if (j.contains("background_texture")) {
    const auto& t = j.at("background_texture");
    v.background_texture.smooth_noise_scale =
        t.value("smooth_noise_scale", v.background_texture.smooth_noise_scale);
    v.background_texture.base_intensity =
        t.value("base_intensity", v.background_texture.base_intensity);
  }
  v.contrast_gain = j.value("contrast_gain", v.contrast_gain);
  v.gamma = j.value("gamma", v.gamma);
  v.noise_sigma = j.value("noise_sigma", v.noise_sigma);
}

namespace {

struct Octave {
  double spacing_mm;
  double weight;
};

constexpr std::array<Octave, 4> kOctaves{{{8.0, 0.6}, {4.0, 0.35}, {2.0, 0.2}, {1.0, 0.1}}};

double lattice_value(std::uint64_t seed, std::uint64_t octave, long ix, long iy) {
  const auto key = derive_seed(derive_seed(seed, octave),
                               static_cast<std::uint64_t>(ix) * 0x9E3779B1ull ^
                                   (static_cast<std::uint64_t>(iy) << 32));
  return static_cast<double>(key >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace

Scene::Lattice::Lattice(std::uint64_t seed, std::uint64_t octave, double spacing_mm,
                        double extent_mm)
    : spacing(spacing_mm), side(static_cast<long>(std::ceil(extent_mm / spacing_mm)) + 2) {
  values.resize(static_cast<std::size_t>(side * side));
  for (long iy = 0; iy < side; ++iy) {
    for (long ix = 0; ix < side; ++ix) {
      values[static_cast<std::size_t>(iy * side + ix)] = lattice_value(seed, octave, ix, iy);
    }
  }
}

double Scene::Lattice::sample(double x_mm, double y_mm) const {
  const double x = std::clamp(x_mm / spacing, 0.0, static_cast<double>(side - 1) - 1e-9);
  const double y = std::clamp(y_mm / spacing, 0.0, static_cast<double>(side - 1) - 1e-9);
  const long ix = static_cast<long>(x), iy = static_cast<long>(y);
  const double tx = smoothstep(x - ix), ty = smoothstep(y - iy);
  const double* row0 = values.data() + iy * side + ix;
  const double* row1 = row0 + side;
  const double top = row0[0] + (row0[1] - row0[0]) * tx;
  const double bottom = row1[0] + (row1[1] - row1[0]) * tx;
  return top + (bottom - top) * ty;
}

Scene::Scene(double extent_mm, BackgroundTexture texture, std::uint64_t texture_seed)
    : extent_mm_(extent_mm), texture_(texture) {
  require(extent_mm > 0.0, ErrorCode::kInvalidArgument, "Scene: extent must be positive");
  for (std::size_t o = 0; o < kOctaves.size(); ++o) {
    octaves_.emplace_back(texture_seed, o, kOctaves[o].spacing_mm, extent_mm);
  }
}

double Scene::background_at(double x_mm, double y_mm) const {
  double v = 0.0;
  for (std::size_t o = 0; o < kOctaves.size(); ++o) {
    v += kOctaves[o].weight * octaves_[o].sample(x_mm, y_mm);
  }
  return texture_.base_intensity + texture_.smooth_noise_scale * v;
}

double Scene::value_at(double x_mm, double y_mm) const {
  double v = background_at(x_mm, y_mm);
  for (const auto& r : ridges_) {
    const double dx = x_mm - r.x_mm, dy = y_mm - r.y_mm;
    const double reach = 4.0 * r.length_sigma_mm;
    if (std::abs(dx) > reach || std::abs(dy) > reach) continue;
    const double c = std::cos(r.angle_rad), s = std::sin(r.angle_rad);
    const double u = (c * dx + s * dy) / r.length_sigma_mm;
    const double w = (-s * dx + c * dy) / r.width_sigma_mm;
    v += r.amplitude * std::exp(-0.5 * (u * u + w * w));
  }
  for (const auto& l : lesions_) {
    const double sigma = l.radius_mm / 2.0;
    const double dx = x_mm - l.x_mm, dy = y_mm - l.y_mm;
    if (std::abs(dx) > 4.0 * sigma || std::abs(dy) > 4.0 * sigma) continue;
    v += l.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
  }
  return v;
}

Image apply_vendor_transform(const Scene& scene, const VendorProfile& vendor, int side_px,
                             std::uint64_t noise_seed) {
  vendor.validate();
  require(side_px >= 1, ErrorCode::kInvalidArgument, "apply_vendor_transform: side must be >= 1");
  Image img(side_px, side_px);
  Rng rng(noise_seed);
  const double spacing_mm = vendor.pixel_spacing_um / 1000.0;
  for (int y = 0; y < side_px; ++y) {
    const double y_mm = (y + 0.5) * spacing_mm;
    for (int x = 0; x < side_px; ++x) {
      const double s = std::clamp(vendor.contrast_gain * scene.value_at((x + 0.5) * spacing_mm, y_mm),
                                  0.0, 1.0);
      double v = vendor.gamma == 1.0 ? s : std::pow(s, vendor.gamma);
      if (vendor.noise_sigma > 0.0) v += vendor.noise_sigma * rng.normal();
      img.at(x, y) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

}  // namespace dmda::synth
