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
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "dmda/candidates/patch_pool.hpp"
#include "dmda/exp/config.hpp"
#include "dmda/froc/froc.hpp"
#include "dmda/model/patch_net.hpp"

namespace dmda::exp {

struct CellStatus {
  std::string method;
  std::uint64_t seed = 0;
  bool ok = false;
  bool reused = false;  // completed by an earlier run with the same config
  std::string error;
};

struct MatrixResult {
  std::vector<CellStatus> cells;
  bool all_ok() const;
  std::size_t failed() const;
};

struct ReportResult {
  std::filesystem::path summary_path;
  std::vector<std::string> missing;  // "METHOD seed=N"
  bool partial() const { return !missing.empty(); }
};

/// Owns one experiment's output tree:
///   data/{source,target}/            generated datasets
///   runs/seed_<s>/SOURCE/            source model and training log
///   runs/seed_<s>/<METHOD>/          adapted model, log and froc.csv
///   report/                          summary tables and aggregate curves
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }

  std::filesystem::path dataset_dir(bool target) const;
  std::filesystem::path cell_dir(const std::string& method, std::uint64_t seed) const;
  std::filesystem::path source_dir(std::uint64_t seed) const;

  /// Writes both vendor datasets. A non-empty data directory is an error
  /// unless `force` is set, in which case it is replaced.
  void gen_data(bool force);

  /// Source training per seed, then every plan per seed, then evaluation on
  /// the target test split. Finished cells are reused; failures are recorded
  /// and the matrix continues.
  MatrixResult run_matrix(int jobs);

  ReportResult report(const std::filesystem::path& out_dir);

  /// Single-cell commands.
  model::PatchNet train_source(std::uint64_t seed);
  model::PatchNet adapt(const std::string& method, std::uint64_t seed);
  froc::FrocCurve evaluate(const std::string& method, std::uint64_t seed);

  /// Provenance line embedded in every artifact of a cell.
  std::string provenance(const std::string& method, std::uint64_t seed) const;

  /// Lazily built, shared read-only candidate splits.
  const candidates::CandidateSplit& split(bool target, const std::string& name);

 private:
  bool source_done(std::uint64_t seed) const;
  bool cell_done(const std::string& method, std::uint64_t seed) const;
  model::PatchNet source_model(std::uint64_t seed);
  const candidates::TargetPool& target_pool();
  void run_cell(const train::AdaptPlan& plan, std::uint64_t seed);

  ExperimentConfig config_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<candidates::CandidateSplit>> splits_;
  std::unique_ptr<candidates::TargetPool> target_pool_;
  std::map<std::uint64_t, std::unique_ptr<std::mutex>> source_locks_;
};

}  // namespace dmda::exp
