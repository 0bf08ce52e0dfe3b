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

#include "dmda/train/augment.hpp"

#include <cmath>
#include <numbers>

#include "dmda/error.hpp"

namespace dmda::train {

void AugmentConfig::validate() const {
  require(max_rotation_deg >= 0.0 && max_zoom_frac >= 0.0 && max_zoom_frac < 1.0 &&
              max_translate_px >= 0.0,
          ErrorCode::kInvalidArgument, "augment: magnitudes must be >= 0 and zoom < 1");
}

void to_json(nlohmann::json& j, const AugmentConfig& c) {
  j = {{"hflip", c.hflip},
       {"vflip", c.vflip},
       {"max_rotation_deg", c.max_rotation_deg},
       {"max_zoom_frac", c.max_zoom_frac},
       {"max_translate_px", c.max_translate_px}};
}

void from_json(const nlohmann::json& j, AugmentConfig& c) {
  c.hflip = j.value("hflip", c.hflip);
  c.vflip = j.value("vflip", c.vflip);
  c.max_rotation_deg = j.value("max_rotation_deg", c.max_rotation_deg);
  c.max_zoom_frac = j.value("max_zoom_frac", c.max_zoom_frac);
  c.max_translate_px = j.value("max_translate_px", c.max_translate_px);
}

AugmentDraw draw_augment(const AugmentConfig& config, Rng& rng) {
  AugmentDraw d;
  d.hflip = config.hflip && rng.bernoulli(0.5);
  d.vflip = config.vflip && rng.bernoulli(0.5);
  const double rot = config.max_rotation_deg * std::numbers::pi / 180.0;
  d.rotation_rad = rot > 0.0 ? rng.uniform(-rot, rot) : 0.0;
  d.zoom = config.max_zoom_frac > 0.0
               ? rng.uniform(1.0 - config.max_zoom_frac, 1.0 + config.max_zoom_frac)
               : 1.0;
  if (config.max_translate_px > 0.0) {
    d.translate_x = rng.uniform(-config.max_translate_px, config.max_translate_px);
    d.translate_y = rng.uniform(-config.max_translate_px, config.max_translate_px);
  }
  return d;
}

void apply_augment(const double* src, double* dst, int side, const AugmentDraw& draw) {
  const double c = 0.5 * (side - 1);
  const double cs = std::cos(draw.rotation_rad), sn = std::sin(draw.rotation_rad);
  auto at = [&](int x, int y) {
    return (x < 0 || y < 0 || x >= side || y >= side)
               ? 0.0
               : src[static_cast<std::size_t>(y) * side + x];
  };
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const double u0 = j - c - draw.translate_x, v0 = i - c - draw.translate_y;
      double u = (cs * u0 + sn * v0) / draw.zoom;
      double v = (-sn * u0 + cs * v0) / draw.zoom;
      if (draw.hflip) u = -u;
      if (draw.vflip) v = -v;
      const double sx = c + u, sy = c + v;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      const double ax = sx - fx, ay = sy - fy;
      double val = (1 - ax) * (1 - ay) * at(x0, y0);
      if (ax > 0) val += ax * (1 - ay) * at(x0 + 1, y0);
      if (ay > 0) val += (1 - ax) * ay * at(x0, y0 + 1);
      if (ax > 0 && ay > 0) val += ax * ay * at(x0 + 1, y0 + 1);
      dst[static_cast<std::size_t>(i) * side + j] = val;
    }
  }
}

namespace {

int square_side(const grad::Tensor& patch) {
  const auto& s = patch.shape();
  const bool ok = (s.size() == 2 && s[0] == s[1]) || (s.size() == 3 && s[0] == 1 && s[1] == s[2]);
  require(ok, ErrorCode::kShape, "augment: expected a square [1,S,S] or [S,S] patch, got " +
                                     grad::shape_str(s));
  return static_cast<int>(s.back());
}

}  // namespace

grad::Tensor apply_augment(const grad::Tensor& patch, const AugmentDraw& draw) {
  const int side = square_side(patch);
  auto out = grad::Tensor::zeros(patch.shape());
  apply_augment(patch.data().data(), out.data().data(), side, draw);
  return out;
}

grad::Tensor augment(const grad::Tensor& patch, const AugmentConfig& config, Rng& rng) {
  config.validate();
  square_side(patch);
  return apply_augment(patch, draw_augment(config, rng));
}

}  // namespace dmda::train
