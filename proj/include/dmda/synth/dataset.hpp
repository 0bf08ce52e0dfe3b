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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmda/synth/vendor.hpp"

namespace dmda::synth {

/// Disk annotation in the image's pixel grid. Membership is closed: a point
/// at exactly `radius_px` from the center is inside.
struct LesionAnnotation {
  double center_x = 0.0;
  double center_y = 0.0;
  double radius_px = 0.0;

  bool contains(double x, double y) const {
    const double dx = x - center_x, dy = y - center_y;
    return dx * dx + dy * dy <= radius_px * radius_px;
  }
  bool operator==(const LesionAnnotation&) const = default;
};

struct ImageRecord {
  std::string image_id;
  std::string view;  // "L-CC", "L-MLO", "R-CC", "R-MLO"
  std::string path;  // relative to the manifest directory
  double pixel_spacing_um = 0.0;
  int width = 0;
  int height = 0;
  std::vector<LesionAnnotation> annotations;

  bool operator==(const ImageRecord&) const = default;
};

struct ExamRecord {
  std::string exam_id;
  std::string patient_id;
  std::string vendor;
  std::string split;
  bool exam_label = false;
  std::vector<ImageRecord> images;

  std::size_t annotation_count() const;
  bool operator==(const ExamRecord&) const = default;
};

struct DatasetManifest {
  std::string dataset_id;
  std::uint64_t seed = 0;
  std::vector<VendorProfile> vendor_profiles;
  std::vector<ExamRecord> exams;
  std::map<std::string, std::vector<std::string>> splits;  // split -> patient ids

  std::vector<const ExamRecord*> exams_in(const std::string& split) const;
  bool operator==(const DatasetManifest&) const = default;
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

/// Knobs of the scene generator that are not vendor properties.
struct SceneParams {
  int image_side_px = 512;
  double lesion_radius_min_mm = 1.0;
  double lesion_radius_max_mm = 2.0;
  double lesion_amplitude_min = 0.12;
  double lesion_amplitude_max = 0.22;
  int ridges_min = 6;
  int ridges_max = 12;
  double ridge_amplitude_min = 0.08;
  double ridge_amplitude_max = 0.2;
  double mirror_probability = 0.8;
  double bilateral_probability = 0.9;
};

void to_json(nlohmann::json& j, const SceneParams& p);
void from_json(const nlohmann::json& j, SceneParams& p);

struct DatasetSpec {
  std::string dataset_id = "dataset";
  int n_patients = 100;
  double positive_fraction = 0.22;
  VendorProfile vendor;
  std::uint64_t seed = 0;
  SceneParams scene;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
};

/// Renders every exam into `out_dir/images/` and writes
/// `out_dir/manifest.json`. Exactly round(positive_fraction * n_patients)
/// exams are positive. Splits are patient-level and stratified by exam label.
DatasetManifest generate_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace dmda::synth
