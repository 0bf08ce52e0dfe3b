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

#include <cstddef>
#include <filesystem>
#include <vector>

namespace dmda::synth {

/// Row-major grayscale image with intensities nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const Image&) const = default;
};

/// Binary 16-bit Netpbm ("P5", maxval 65535, big-endian samples). Values are
/// clamped to [0, 1] and quantized to round(v * 65535).
void write_pgm16(const std::filesystem::path& path, const Image& image);
Image read_pgm16(const std::filesystem::path& path);

/// Output side per axis is floor(side * src / dst). Output pixel i samples
/// the input at (i + 0.5) * dst / src - 0.5 with edge clamping, so equal
/// spacings reproduce the input exactly.
Image resample_bilinear(const Image& image, double src_spacing_um, double dst_spacing_um);

/// Maps a native-grid pixel coordinate onto the resampled grid.
double rescale_coordinate(double coord, double src_spacing_um, double dst_spacing_um);

/// Bilinear sample with coordinates clamped to the image.
double sample_bilinear(const Image& image, double x, double y);

}  // namespace dmda::synth
