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

#include "dmda/froc/froc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dmda/error.hpp"
#include "dmda/train/sampling.hpp"

namespace dmda::froc {

std::vector<ScoredCandidate> score_dataset(model::PatchNet& net,
                                           const candidates::CandidateSplit& split) {
  require(split.candidate_count() > 0, ErrorCode::kInvalidArgument,
          "score_dataset: split has no candidates");
  const auto scores = train::score_patches(net, split.patches);
  std::vector<ScoredCandidate> out;
  out.reserve(scores.size());
  std::size_t k = 0;
  for (const auto& img : split.images) {
    for (std::size_t c = 0; c < img.candidates.size(); ++c, ++k) {
      out.push_back({img.image_id, img.exam_id, img.candidates[c].x, img.candidates[c].y,
                     scores[k], static_cast<bool>(img.hits[c])});
    }
  }
  require(k == scores.size(), ErrorCode::kInternal,
          "score_dataset: candidate and patch counts differ");
  return out;
}

FrocCurve compute_froc(std::span<const ScoredCandidate> scored,
                       const candidates::AnnotationIndex& annotations) {
  FrocCurve curve;
  curve.n_images = annotations.size();
  for (const auto& [id, anns] : annotations) curve.n_lesions += anns.size();
  require(curve.n_lesions > 0, ErrorCode::kInvalidArgument,
          "compute_froc: no lesions, sensitivity is undefined");

  // Best in-region score per lesion.
  std::map<std::string, std::vector<double>> best;
  for (const auto& [id, anns] : annotations) {
    best[id].assign(anns.size(), -std::numeric_limits<double>::infinity());
  }
  std::vector<double> fp_scores;
  std::vector<double> thresholds;
  thresholds.reserve(scored.size());
  for (const auto& c : scored) {
    const auto it = annotations.find(c.image_id);
    require(it != annotations.end(), ErrorCode::kInvalidArgument,
            "compute_froc: candidate image '" + c.image_id + "' has no annotation entry");
    auto& b = best[c.image_id];
    for (std::size_t l = 0; l < it->second.size(); ++l) {
      if (it->second[l].contains(c.x, c.y)) b[l] = std::max(b[l], c.model_score);
    }
    if (!c.is_hit) fp_scores.push_back(c.model_score);
    thresholds.push_back(c.model_score);
  }
  std::vector<double> lesion_scores;
  for (const auto& [id, b] : best) lesion_scores.insert(lesion_scores.end(), b.begin(), b.end());

  const auto desc = std::greater<double>();
  std::sort(thresholds.begin(), thresholds.end(), desc);
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::sort(fp_scores.begin(), fp_scores.end(), desc);
  std::sort(lesion_scores.begin(), lesion_scores.end(), desc);

  std::size_t n_fp = 0, n_tp = 0;
  for (double t : thresholds) {
    while (n_fp < fp_scores.size() && fp_scores[n_fp] >= t) ++n_fp;
    while (n_tp < lesion_scores.size() && lesion_scores[n_tp] >= t) ++n_tp;
    curve.points.push_back({t, static_cast<double>(n_fp) / static_cast<double>(curve.n_images),
                            static_cast<double>(n_tp) / static_cast<double>(curve.n_lesions)});
  }
  return curve;
}

std::vector<double> sensitivity_at(const FrocCurve& curve, std::span<const double> fp_levels) {
  std::vector<double> out;
  out.reserve(fp_levels.size());
  for (double level : fp_levels) {
    require(level >= 0.0, ErrorCode::kInvalidArgument, "sensitivity_at: fp levels must be >= 0");
    double best_fp = -1.0, sens = 0.0;
    for (const auto& p : curve.points) {
      if (p.fp_per_image > level) continue;
      if (p.fp_per_image > best_fp) {
        best_fp = p.fp_per_image;
        sens = p.sensitivity;
      } else if (p.fp_per_image == best_fp) {
        sens = std::max(sens, p.sensitivity);
      }
    }
    out.push_back(sens);
  }
  return out;
}

AggregateCurve aggregate_runs(std::span<const FrocCurve> curves, std::span<const double> fp_grid) {
  require(!curves.empty(), ErrorCode::kInvalidArgument, "aggregate_runs: no curves");
  AggregateCurve agg;
  agg.fp_grid.assign(fp_grid.begin(), fp_grid.end());
  agg.n_runs = curves.size();
  std::vector<std::vector<double>> per_run;
  for (const auto& c : curves) per_run.push_back(sensitivity_at(c, fp_grid));
  const auto n = static_cast<double>(curves.size());
  for (std::size_t g = 0; g < fp_grid.size(); ++g) {
    double sum = 0.0;
    for (const auto& r : per_run) sum += r[g];
    const double mean = sum / n;
    double var = 0.0;
    for (const auto& r : per_run) var += (r[g] - mean) * (r[g] - mean);
    agg.mean.push_back(mean);
    agg.std.push_back(std::sqrt(var / n));
  }
  return agg;
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_froc_csv(const std::filesystem::path& path, const FrocCurve& curve,
                    const std::string& provenance) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "write_froc_csv: cannot open " + path.string());
  out << "# " << provenance << (provenance.empty() ? "" : " ") << "n_images=" << curve.n_images
      << " n_lesions=" << curve.n_lesions << '\n';
  out << "threshold,fp_per_image,sensitivity\n";
  for (const auto& p : curve.points) {
    out << fixed6(p.threshold) << ',' << fixed6(p.fp_per_image) << ',' << fixed6(p.sensitivity)
        << '\n';
  }
  require(out.good(), ErrorCode::kIo, "write_froc_csv: failed writing " + path.string());
}

FrocFile read_froc_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "read_froc_csv: cannot open " + path.string());
  FrocFile f;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      // The counts appended by the writer are split off the provenance.
      std::istringstream fields(line.substr(2));
      std::string kv;
      while (fields >> kv) {
        if (kv.rfind("n_images=", 0) == 0) {
          f.curve.n_images = std::stoul(kv.substr(9));
        } else if (kv.rfind("n_lesions=", 0) == 0) {
          f.curve.n_lesions = std::stoul(kv.substr(10));
        } else {
          f.provenance += (f.provenance.empty() ? "" : " ") + kv;
        }
      }
      continue;
    }
    if (!header_seen) {
      require(line == "threshold,fp_per_image,sensitivity", ErrorCode::kIo,
              "read_froc_csv: unexpected header in " + path.string());
      header_seen = true;
      continue;
    }
    FrocPoint p;
    char c1 = 0, c2 = 0;
    std::istringstream row(line);
    row >> p.threshold >> c1 >> p.fp_per_image >> c2 >> p.sensitivity;
    require(!row.fail() && c1 == ',' && c2 == ',', ErrorCode::kIo,
            "read_froc_csv: malformed row '" + line + "' in " + path.string());
    f.curve.points.push_back(p);
  }
  require(header_seen, ErrorCode::kIo, "read_froc_csv: missing header in " + path.string());
  return f;
}

void write_aggregate_csv(const std::filesystem::path& path, const AggregateCurve& curve,
                         const std::string& provenance) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "write_aggregate_csv: cannot open " + path.string());
  if (!provenance.empty()) out << "# " << provenance << " n_runs=" << curve.n_runs << '\n';
  out << "fp_per_image,mean_sensitivity,std_sensitivity\n";
  for (std::size_t g = 0; g < curve.fp_grid.size(); ++g) {
    out << fixed6(curve.fp_grid[g]) << ',' << fixed6(curve.mean[g]) << ',' << fixed6(curve.std[g])
        << '\n';
  }
  require(out.good(), ErrorCode::kIo, "write_aggregate_csv: failed writing " + path.string());
}

}  // namespace dmda::froc
