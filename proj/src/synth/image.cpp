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

#include "dmda/synth/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "dmda/error.hpp"

namespace dmda::synth {

void write_pgm16(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "write_pgm16: cannot open " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n65535\n";
  std::string bytes(image.pixels.size() * 2, '\0');
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const double v = std::clamp(image.pixels[i], 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::lround(v * 65535.0));
    bytes[2 * i] = static_cast<char>((q >> 8) & 0xFF);
    bytes[2 * i + 1] = static_cast<char>(q & 0xFF);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorCode::kIo, "write_pgm16: failed writing " + path.string());
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

}  // namespace

Image read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "read_pgm16: cannot open " + path.string());
  const auto magic = next_token(in);
  require(magic == "P5", ErrorCode::kIo, "read_pgm16: " + path.string() + " is not binary PGM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    fail(ErrorCode::kIo, "read_pgm16: malformed header in " + path.string());
  }
  require(w > 0 && h > 0 && maxval == 65535, ErrorCode::kIo,
          "read_pgm16: expected 16-bit image in " + path.string());
  Image img(w, h);
  std::string bytes(img.pixels.size() * 2, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(in.gcount() == static_cast<std::streamsize>(bytes.size()), ErrorCode::kIo,
          "read_pgm16: truncated pixel data in " + path.string());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const unsigned hi = static_cast<unsigned char>(bytes[2 * i]);
    const unsigned lo = static_cast<unsigned char>(bytes[2 * i + 1]);
    img.pixels[i] = static_cast<double>((hi << 8) | lo) / 65535.0;
  }
  return img;
}

double sample_bilinear(const Image& image, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(image.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(image.height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, image.width - 1);
  const int y1 = std::min(y0 + 1, image.height - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = image.at(x0, y0) * (1.0 - fx) + image.at(x1, y0) * fx;
  const double bottom = image.at(x0, y1) * (1.0 - fx) + image.at(x1, y1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

double rescale_coordinate(double coord, double src_spacing_um, double dst_spacing_um) {
  return (coord + 0.5) * src_spacing_um / dst_spacing_um - 0.5;
}

Image resample_bilinear(const Image& image, double src_spacing_um, double dst_spacing_um) {
  require(src_spacing_um > 0.0 && dst_spacing_um > 0.0, ErrorCode::kInvalidArgument,
          "resample_bilinear: spacings must be positive");
  const double factor = src_spacing_um / dst_spacing_um;
  // The epsilon keeps exact products such as 512 * 200 / 200 from flooring
  // one below because of rounding.
  const int w = static_cast<int>(std::floor(image.width * factor + 1e-9));
  const int h = static_cast<int>(std::floor(image.height * factor + 1e-9));
  require(w >= 1 && h >= 1, ErrorCode::kInvalidArgument,
          "resample_bilinear: output would be smaller than one pixel");
  if (src_spacing_um == dst_spacing_um) return image;
  Image out(w, h);
  const double step = dst_spacing_um / src_spacing_um;
  for (int y = 0; y < h; ++y) {
    const double sy = (y + 0.5) * step - 0.5;
    for (int x = 0; x < w; ++x) {
      out.at(x, y) = sample_bilinear(image, (x + 0.5) * step - 0.5, sy);
    }
  }
  return out;
}

}  // namespace dmda::synth
