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

#include "dmda/candidates/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "dmda/error.hpp"

namespace dmda::candidates {

using synth::Image;

void DetectorConfig::validate() const {
  require(sigma_small > 0.0 && sigma_large > sigma_small, ErrorCode::kInvalidArgument,
          "detector: need 0 < sigma_small < sigma_large");
  require(nms_radius >= 0.0, ErrorCode::kInvalidArgument, "detector: nms_radius must be >= 0");
  require(budget >= 1, ErrorCode::kInvalidArgument,
          "detector: budget must be >= 1, got " + std::to_string(budget));
}

void to_json(nlohmann::json& j, const DetectorConfig& c) {
  j = {{"sigma_small", c.sigma_small},
       {"sigma_large", c.sigma_large},
       {"nms_radius", c.nms_radius},
       {"budget", c.budget}};
}

void from_json(const nlohmann::json& j, DetectorConfig& c) {
  c.sigma_small = j.value("sigma_small", c.sigma_small);
  c.sigma_large = j.value("sigma_large", c.sigma_large);
  c.nms_radius = j.value("nms_radius", c.nms_radius);
  c.budget = j.value("budget", c.budget);
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + r)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

}  // namespace

Image gaussian_blur(const Image& image, double sigma) {
  require(sigma > 0.0, ErrorCode::kInvalidArgument, "gaussian_blur: sigma must be > 0");
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = image.width, h = image.height;
  Image tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += k[static_cast<std::size_t>(i + r)] * image.at(std::clamp(x + i, 0, w - 1), y);
      }
      tmp.at(x, y) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += k[static_cast<std::size_t>(i + r)] * tmp.at(x, std::clamp(y + i, 0, h - 1));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

Image difference_of_gaussians(const Image& image, double sigma_small, double sigma_large) {
  Image a = gaussian_blur(image, sigma_small);
  const Image b = gaussian_blur(image, sigma_large);
  for (std::size_t i = 0; i < a.pixels.size(); ++i) a.pixels[i] -= b.pixels[i];
  return a;
}

std::vector<Candidate> detect_candidates(const Image& image, const std::string& image_id,
                                         const DetectorConfig& config) {
  config.validate();
  require(image.width >= 1 && image.height >= 1, ErrorCode::kInvalidArgument,
          "detect_candidates: empty image");
  const Image dog = difference_of_gaussians(image, config.sigma_small, config.sigma_large);
  const int w = dog.width, h = dog.height;

  std::vector<Candidate> maxima;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = dog.at(x, y);
      bool peak = true;
      for (int dy = -1; dy <= 1 && peak; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if ((dx || dy) && nx >= 0 && nx < w && ny >= 0 && ny < h && dog.at(nx, ny) > v) {
            peak = false;
            break;
          }
        }
      }
      if (peak) maxima.push_back({image_id, x, y, v});
    }
  }
  std::stable_sort(maxima.begin(), maxima.end(), [](const Candidate& a, const Candidate& b) {
    if (a.detector_score != b.detector_score) return a.detector_score > b.detector_score;
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });

  const double r2 = config.nms_radius * config.nms_radius;
  std::vector<Candidate> kept;
  for (const auto& c : maxima) {
    if (static_cast<int>(kept.size()) >= config.budget) break;
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Candidate& k) {
      const double dx = c.x - k.x, dy = c.y - k.y;
      return dx * dx + dy * dy < r2;
    });
    if (!suppressed) kept.push_back(c);
  }
  return kept;
}

void extract_patch_into(const Image& image, int x, int y, int side, double lo, double hi,
                        double* out) {
  const double range = hi - lo;
  const int x0 = x - side / 2, y0 = y - side / 2;
  for (int r = 0; r < side; ++r) {
    const int sy = y0 + r;
    for (int c = 0; c < side; ++c) {
      const int sx = x0 + c;
      double v = 0.0;
      if (range > 0.0 && sx >= 0 && sx < image.width && sy >= 0 && sy < image.height) {
        v = std::clamp((image.at(sx, sy) - lo) / range, 0.0, 1.0);
      }
      out[static_cast<std::size_t>(r) * side + c] = v;
    }
  }
}

grad::Tensor extract_patch(const Image& image, const Candidate& candidate, int side) {
  require(side >= 2 && side % 2 == 0, ErrorCode::kInvalidArgument,
          "extract_patch: side must be even and >= 2, got " + std::to_string(side));
  require(!image.pixels.empty(), ErrorCode::kInvalidArgument, "extract_patch: empty image");
  const auto [lo, hi] = std::minmax_element(image.pixels.begin(), image.pixels.end());
  auto patch = grad::Tensor::zeros({1, static_cast<std::size_t>(side), static_cast<std::size_t>(side)});
  extract_patch_into(image, candidate.x, candidate.y, side, *lo, *hi, patch.data().data());
  return patch;
}

std::vector<bool> assign_ground_truth(const std::vector<Candidate>& candidates,
                                      const AnnotationIndex& annotations) {
  std::vector<bool> labels;
  labels.reserve(candidates.size());
  for (const auto& c : candidates) {
    const auto it = annotations.find(c.image_id);
    require(it != annotations.end(), ErrorCode::kInvalidArgument,
            "assign_ground_truth: no annotation entry for image '" + c.image_id + "'");
    labels.push_back(std::any_of(it->second.begin(), it->second.end(),
                                 [&](const auto& a) { return a.contains(c.x, c.y); }));
  }
  return labels;
}

void write_candidate_dump(const std::filesystem::path& path,
                          const std::vector<Candidate>& candidates,
                          const std::vector<bool>& labels) {
  require(labels.size() == candidates.size(), ErrorCode::kInvalidArgument,
          "write_candidate_dump: label count does not match candidate count");
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "write_candidate_dump: cannot open " + path.string());
  out << "image_id,x,y,detector_score,gt_label\n" << std::setprecision(17);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    out << c.image_id << ',' << c.x << ',' << c.y << ',' << c.detector_score << ','
        << (labels[i] ? 1 : 0) << '\n';
  }
  require(out.good(), ErrorCode::kIo, "write_candidate_dump: failed writing " + path.string());
}

}  // namespace dmda::candidates
