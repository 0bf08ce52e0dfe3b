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

#include "dmda/synth/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "dmda/error.hpp"
#include "dmda/rng.hpp"

namespace dmda::synth {
namespace fs = std::filesystem;

std::size_t ExamRecord::annotation_count() const {
  std::size_t n = 0;
  for (const auto& img : images) n += img.annotations.size();
  return n;
}

std::vector<const ExamRecord*> DatasetManifest::exams_in(const std::string& split) const {
  std::vector<const ExamRecord*> out;
  for (const auto& e : exams) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  nlohmann::json exams = nlohmann::json::array();
  for (const auto& e : m.exams) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& img : e.images) {
      nlohmann::json anns = nlohmann::json::array();
      for (const auto& a : img.annotations) {
        anns.push_back({{"center_xy", {a.center_x, a.center_y}}, {"radius_px", a.radius_px}});
      }
      images.push_back({{"image_id", img.image_id},
                        {"view", img.view},
                        {"path", img.path},
                        {"pixel_spacing_um", img.pixel_spacing_um},
                        {"width", img.width},
                        {"height", img.height},
                        {"annotations", anns}});
    }
    exams.push_back({{"exam_id", e.exam_id},
                     {"patient_id", e.patient_id},
                     {"vendor", e.vendor},
                     {"split", e.split},
                     {"exam_label", e.exam_label},
                     {"images", images}});
  }
  j = {{"dataset_id", m.dataset_id},
       {"seed", m.seed},
       {"vendor_profiles", m.vendor_profiles},
       {"exams", exams},
       {"splits", m.splits}};
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
  m.dataset_id = j.at("dataset_id").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.vendor_profiles = j.at("vendor_profiles").get<std::vector<VendorProfile>>();
  m.splits = j.at("splits").get<std::map<std::string, std::vector<std::string>>>();
  m.exams.clear();
  for (const auto& je : j.at("exams")) {
    ExamRecord e;
    e.exam_id = je.at("exam_id").get<std::string>();
    e.patient_id = je.at("patient_id").get<std::string>();
    e.vendor = je.at("vendor").get<std::string>();
    e.split = je.at("split").get<std::string>();
    e.exam_label = je.at("exam_label").get<bool>();
    for (const auto& ji : je.at("images")) {
      ImageRecord img;
      img.image_id = ji.at("image_id").get<std::string>();
      img.view = ji.at("view").get<std::string>();
      img.path = ji.at("path").get<std::string>();
      img.pixel_spacing_um = ji.at("pixel_spacing_um").get<double>();
      img.width = ji.at("width").get<int>();
      img.height = ji.at("height").get<int>();
      for (const auto& ja : ji.at("annotations")) {
        const auto c = ja.at("center_xy").get<std::vector<double>>();
        require(c.size() == 2, ErrorCode::kIo, "manifest: center_xy must have two entries");
        img.annotations.push_back({c[0], c[1], ja.at("radius_px").get<double>()});
      }
      e.images.push_back(std::move(img));
    }
    m.exams.push_back(std::move(e));
  }
}

void to_json(nlohmann::json& j, const SceneParams& p) {
  j = {{"image_side_px", p.image_side_px},
       {"lesion_radius_min_mm", p.lesion_radius_min_mm},
       {"lesion_radius_max_mm", p.lesion_radius_max_mm},
       {"lesion_amplitude_min", p.lesion_amplitude_min},
       {"lesion_amplitude_max", p.lesion_amplitude_max},
       {"ridges_min", p.ridges_min},
       {"ridges_max", p.ridges_max},
       {"ridge_amplitude_min", p.ridge_amplitude_min},
       {"ridge_amplitude_max", p.ridge_amplitude_max},
       {"mirror_probability", p.mirror_probability},
       {"bilateral_probability", p.bilateral_probability}};
}

void from_json(const nlohmann::json& j, SceneParams& p) {
  p.image_side_px = j.value("image_side_px", p.image_side_px);
  p.lesion_radius_min_mm = j.value("lesion_radius_min_mm", p.lesion_radius_min_mm);
  p.lesion_radius_max_mm = j.value("lesion_radius_max_mm", p.lesion_radius_max_mm);
  p.lesion_amplitude_min = j.value("lesion_amplitude_min", p.lesion_amplitude_min);
  p.lesion_amplitude_max = j.value("lesion_amplitude_max", p.lesion_amplitude_max);
  p.ridges_min = j.value("ridges_min", p.ridges_min);
  p.ridges_max = j.value("ridges_max", p.ridges_max);
  p.ridge_amplitude_min = j.value("ridge_amplitude_min", p.ridge_amplitude_min);
  p.ridge_amplitude_max = j.value("ridge_amplitude_max", p.ridge_amplitude_max);
  p.mirror_probability = j.value("mirror_probability", p.mirror_probability);
  p.bilateral_probability = j.value("bilateral_probability", p.bilateral_probability);
}

namespace {

constexpr const char* kViews[4] = {"L-CC", "L-MLO", "R-CC", "R-MLO"};

// Index of the other view of the same breast.
constexpr int partner_view(int v) { return v ^ 1; }

std::string numbered(const std::string& prefix, int n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", n);
  return prefix + buf;
}

SceneLesion draw_lesion(Rng& rng, double extent_mm, double radius_mm,
                        double amplitude) {
  const double margin = radius_mm + 1.0;
  return {rng.uniform(margin, extent_mm - margin), rng.uniform(margin, extent_mm - margin),
          radius_mm, amplitude};
}

void validate(const DatasetSpec& spec) {
  require(spec.n_patients >= 1, ErrorCode::kInvalidArgument,
          "generate_dataset: n_patients must be >= 1");
  require(spec.positive_fraction >= 0.0 && spec.positive_fraction <= 1.0,
          ErrorCode::kInvalidArgument,
          "generate_dataset: positive_fraction must be in [0, 1], got " +
              std::to_string(spec.positive_fraction));
  require(spec.train_fraction >= 0.0 && spec.val_fraction >= 0.0 &&
              spec.train_fraction + spec.val_fraction <= 1.0,
          ErrorCode::kInvalidArgument, "generate_dataset: invalid split fractions");
  const auto& p = spec.scene;
  require(p.image_side_px >= 32, ErrorCode::kInvalidArgument,
          "generate_dataset: image_side_px must be >= 32");
  require(p.lesion_radius_min_mm > 0.0 && p.lesion_radius_min_mm <= p.lesion_radius_max_mm,
          ErrorCode::kInvalidArgument, "generate_dataset: invalid lesion radius range");
  require(p.ridges_min >= 0 && p.ridges_min <= p.ridges_max, ErrorCode::kInvalidArgument,
          "generate_dataset: invalid ridge count range");
  spec.vendor.validate();
  const double extent_mm = p.image_side_px * spec.vendor.pixel_spacing_um / 1000.0;
  require(extent_mm > 2.0 * (p.lesion_radius_max_mm + 1.0), ErrorCode::kInvalidArgument,
          "generate_dataset: image too small for the lesion size range");
}

}  // namespace

DatasetManifest generate_dataset(const DatasetSpec& spec, const fs::path& out_dir) {
  validate(spec);
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  require(!ec, ErrorCode::kIo,
          "generate_dataset: cannot create " + (out_dir / "images").string() + ": " + ec.message());

  const auto& p = spec.scene;
  const int n = spec.n_patients;
  const int n_pos = static_cast<int>(std::lround(spec.positive_fraction * n));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng label_rng(derive_seed(spec.seed, 0xA11C));
  label_rng.shuffle(order.begin(), order.end());
  std::vector<bool> positive(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n_pos; ++i) positive[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  const double spacing_mm = spec.vendor.pixel_spacing_um / 1000.0;
  const double extent_mm = p.image_side_px * spacing_mm;

  DatasetManifest manifest;
  manifest.dataset_id = spec.dataset_id;
  manifest.seed = spec.seed;
  manifest.vendor_profiles = {spec.vendor};

  for (int e = 0; e < n; ++e) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(e)));
    ExamRecord exam;
    exam.exam_id = numbered(spec.dataset_id + "-E", e);
    exam.patient_id = numbered(spec.dataset_id + "-P", e);
    exam.vendor = spec.vendor.name;

    std::vector<int> views;
    if (rng.bernoulli(p.bilateral_probability)) {
      views = {0, 1, 2, 3};
    } else {
      views = rng.bernoulli(0.5) ? std::vector<int>{0, 1} : std::vector<int>{2, 3};
    }

    std::vector<std::vector<SceneLesion>> lesions(4);
    if (positive[static_cast<std::size_t>(e)]) {
      const int count = 1 + static_cast<int>(rng.below(3));
      for (int l = 0; l < count; ++l) {
        const int v = views[rng.below(views.size())];
        const double radius = rng.uniform(p.lesion_radius_min_mm, p.lesion_radius_max_mm);
        const double amplitude = rng.uniform(p.lesion_amplitude_min, p.lesion_amplitude_max);
        lesions[static_cast<std::size_t>(v)].push_back(
            draw_lesion(rng, extent_mm, radius, amplitude));
        if (rng.bernoulli(p.mirror_probability)) {
          lesions[static_cast<std::size_t>(partner_view(v))].push_back(
              draw_lesion(rng, extent_mm, radius, amplitude));
        }
      }
    }

    for (int v : views) {
      const auto vi = static_cast<std::uint64_t>(v);
      Scene scene(extent_mm, spec.vendor.background_texture, derive_seed(rng.next_u64(), 100 + vi));
      const int n_ridges =
          p.ridges_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(p.ridges_max - p.ridges_min + 1)));
      for (int r = 0; r < n_ridges; ++r) {
        scene.add_ridge({rng.uniform(0.0, extent_mm), rng.uniform(0.0, extent_mm),
                         rng.uniform(0.0, std::numbers::pi), rng.uniform(2.0, 5.0),
                         rng.uniform(0.3, 0.7),
                         rng.uniform(p.ridge_amplitude_min, p.ridge_amplitude_max)});
      }
      ImageRecord rec;
      rec.image_id = exam.exam_id + "-" + kViews[v];
      rec.view = kViews[v];
      rec.path = "images/" + rec.image_id + ".pgm";
      rec.pixel_spacing_um = spec.vendor.pixel_spacing_um;
      rec.width = p.image_side_px;
      rec.height = p.image_side_px;
      for (const auto& l : lesions[static_cast<std::size_t>(v)]) {
        scene.add_lesion(l);
        rec.annotations.push_back(
            {l.x_mm / spacing_mm - 0.5, l.y_mm / spacing_mm - 0.5, l.radius_mm / spacing_mm});
      }
      const Image img = apply_vendor_transform(scene, spec.vendor, p.image_side_px,
                                               derive_seed(rng.next_u64(), 200 + vi));
      write_pgm16(out_dir / rec.path, img);
      exam.images.push_back(std::move(rec));
    }
    exam.exam_label = exam.annotation_count() > 0;
    manifest.exams.push_back(std::move(exam));
  }

  // Patient-level split, stratified by exam label.
  Rng split_rng(derive_seed(spec.seed, 0x5B117));
  std::vector<int> pos_idx, neg_idx;
  for (int e = 0; e < n; ++e) {
    (manifest.exams[static_cast<std::size_t>(e)].exam_label ? pos_idx : neg_idx).push_back(e);
  }
  std::vector<std::string> assignment(static_cast<std::size_t>(n));
  for (auto* group : {&pos_idx, &neg_idx}) {
    split_rng.shuffle(group->begin(), group->end());
    const auto m = static_cast<double>(group->size());
    const auto n_train = static_cast<std::size_t>(std::lround(spec.train_fraction * m));
    const auto n_val = std::min(group->size() - n_train,
                                static_cast<std::size_t>(std::lround(spec.val_fraction * m)));
    for (std::size_t i = 0; i < group->size(); ++i) {
      assignment[static_cast<std::size_t>((*group)[i])] =
          i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
    }
  }
  manifest.splits = {{"train", {}}, {"val", {}}, {"test", {}}};
  for (int e = 0; e < n; ++e) {
    auto& exam = manifest.exams[static_cast<std::size_t>(e)];
    exam.split = assignment[static_cast<std::size_t>(e)];
    manifest.splits[exam.split].push_back(exam.patient_id);
  }

  write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "write_manifest: cannot open " + path.string());
  out << nlohmann::json(manifest).dump(2) << '\n';
  require(out.good(), ErrorCode::kIo, "write_manifest: failed writing " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "read_manifest: cannot open " + path.string());
  try {
    return nlohmann::json::parse(in).get<DatasetManifest>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kIo, "read_manifest: malformed manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace dmda::synth
