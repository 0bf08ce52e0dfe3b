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

#include "dmda/dmda.h"

#include <cstring>
#include <memory>
#include <string>

#include "dmda/error.hpp"
#include "dmda/exp/runner.hpp"
#include "dmda/froc/froc.hpp"

struct dmda_experiment {
  std::unique_ptr<dmda::exp::Experiment> impl;
};

struct dmda_froc {
  dmda::froc::FrocCurve curve;
};

namespace {

thread_local std::string g_last_error;

dmda_status to_status(dmda::ErrorCode code) {
  switch (code) {
    case dmda::ErrorCode::kInvalidArgument: return DMDA_ERR_INVALID_ARGUMENT;
    case dmda::ErrorCode::kShape: return DMDA_ERR_SHAPE;
    case dmda::ErrorCode::kIo: return DMDA_ERR_IO;
    case dmda::ErrorCode::kState: return DMDA_ERR_STATE;
    case dmda::ErrorCode::kInternal: return DMDA_ERR_INTERNAL;
  }
  return DMDA_ERR_INTERNAL;
}

template <typename F>
dmda_status guarded(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (const dmda::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DMDA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return DMDA_ERR_INTERNAL;
  }
}

dmda_status null_arg(const char* what) {
  g_last_error = std::string(what) + " must not be NULL";
  return DMDA_ERR_INVALID_ARGUMENT;
}

dmda_status copy_out(const std::string& s, char* buf, size_t len) {
  if (buf == nullptr) return null_arg("buf");
  if (len < s.size() + 1) {
    g_last_error = "buffer too small: need " + std::to_string(s.size() + 1) + " bytes";
    return DMDA_ERR_INVALID_ARGUMENT;
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return DMDA_OK;
}

}  // namespace

extern "C" {

const char* dmda_version(void) { return "0.1.0"; }

const char* dmda_last_error(void) { return g_last_error.c_str(); }

dmda_status dmda_experiment_load(const char* config_path, dmda_experiment** out) {
  if (config_path == nullptr) return null_arg("config_path");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto cfg = dmda::exp::ExperimentConfig::load(config_path);
    *out = new dmda_experiment{std::make_unique<dmda::exp::Experiment>(std::move(cfg))};
    return DMDA_OK;
  });
}

void dmda_experiment_free(dmda_experiment* exp) { delete exp; }

dmda_status dmda_experiment_config_hash(const dmda_experiment* exp, char* buf, size_t len) {
  if (exp == nullptr) return null_arg("exp");
  return guarded([&] { return copy_out(exp->impl->config().hash, buf, len); });
}

dmda_status dmda_experiment_output_dir(const dmda_experiment* exp, char* buf, size_t len) {
  if (exp == nullptr) return null_arg("exp");
  return guarded([&] { return copy_out(exp->impl->config().output_dir.string(), buf, len); });
}

dmda_status dmda_gen_data(dmda_experiment* exp, int force) {
  if (exp == nullptr) return null_arg("exp");
  return guarded([&] {
    exp->impl->gen_data(force != 0);
    return DMDA_OK;
  });
}

dmda_status dmda_run_matrix(dmda_experiment* exp, int jobs, size_t* n_cells, size_t* n_failed) {
  if (exp == nullptr) return null_arg("exp");
  return guarded([&] {
    const auto r = exp->impl->run_matrix(jobs);
    if (n_cells != nullptr) *n_cells = r.cells.size();
    if (n_failed != nullptr) *n_failed = r.failed();
    if (r.all_ok()) return DMDA_OK;
    g_last_error.clear();
    for (const auto& c : r.cells) {
      if (!c.ok) {
        g_last_error += c.method + " seed=" + std::to_string(c.seed) + ": " + c.error + "\n";
      }
    }
    return DMDA_ERR_PARTIAL;
  });
}

dmda_status dmda_report(dmda_experiment* exp, const char* out_dir) {
  if (exp == nullptr) return null_arg("exp");
  return guarded([&] {
    const auto dir = out_dir != nullptr ? std::filesystem::path(out_dir)
                                        : exp->impl->config().output_dir / "report";
    const auto r = exp->impl->report(dir);
    if (!r.partial()) return DMDA_OK;
    g_last_error = "missing runs:";
    for (const auto& m : r.missing) g_last_error += " [" + m + "]";
    return DMDA_ERR_PARTIAL;
  });
}

dmda_status dmda_train_source(dmda_experiment* exp, uint64_t seed) {
  if (exp == nullptr) return null_arg("exp");
  return guarded([&] {
    exp->impl->train_source(seed);
    return DMDA_OK;
  });
}

dmda_status dmda_adapt(dmda_experiment* exp, const char* method, uint64_t seed) {
  if (exp == nullptr) return null_arg("exp");
  if (method == nullptr) return null_arg("method");
  return guarded([&] {
    exp->impl->adapt(method, seed);
    return DMDA_OK;
  });
}

dmda_status dmda_evaluate(dmda_experiment* exp, const char* method, uint64_t seed,
                          dmda_froc** out) {
  if (exp == nullptr) return null_arg("exp");
  if (method == nullptr) return null_arg("method");
  if (out != nullptr) *out = nullptr;
  return guarded([&] {
    auto curve = exp->impl->evaluate(method, seed);
    if (out != nullptr) *out = new dmda_froc{std::move(curve)};
    return DMDA_OK;
  });
}

dmda_status dmda_froc_load(const char* csv_path, dmda_froc** out) {
  if (csv_path == nullptr) return null_arg("csv_path");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    *out = new dmda_froc{dmda::froc::read_froc_csv(csv_path).curve};
    return DMDA_OK;
  });
}

void dmda_froc_free(dmda_froc* curve) { delete curve; }

size_t dmda_froc_size(const dmda_froc* curve) {
  return curve == nullptr ? 0 : curve->curve.points.size();
}

dmda_status dmda_froc_point(const dmda_froc* curve, size_t index, double* threshold,
                            double* fp_per_image, double* sensitivity) {
  if (curve == nullptr) return null_arg("curve");
  if (index >= curve->curve.points.size()) {
    g_last_error = "point index " + std::to_string(index) + " out of range";
    return DMDA_ERR_INVALID_ARGUMENT;
  }
  const auto& p = curve->curve.points[index];
  if (threshold != nullptr) *threshold = p.threshold;
  if (fp_per_image != nullptr) *fp_per_image = p.fp_per_image;
  if (sensitivity != nullptr) *sensitivity = p.sensitivity;
  return DMDA_OK;
}

dmda_status dmda_froc_sensitivity_at(const dmda_froc* curve, const double* fp_levels,
                                     size_t n_levels, double* out) {
  if (curve == nullptr) return null_arg("curve");
  if (n_levels > 0 && (fp_levels == nullptr || out == nullptr)) return null_arg("fp_levels/out");
  return guarded([&] {
    const auto s = dmda::froc::sensitivity_at(curve->curve, {fp_levels, n_levels});
    std::copy(s.begin(), s.end(), out);
    return DMDA_OK;
  });
}

}  // extern "C"
