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

// Command-line front end over the dmda C API.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "dmda/dmda.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartial = 2;

int report_failure(const char* what, dmda_status status) {
  std::fprintf(stderr, "dmda %s: %s\n", what, dmda_last_error());
  return status == DMDA_ERR_PARTIAL ? kExitPartial : kExitUsage;
}

struct Session {
  dmda_experiment* exp = nullptr;
  ~Session() { dmda_experiment_free(exp); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial domain adaptation experiments for lesion patch detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dmda_version()));

  std::string config;
  bool force = false;
  int jobs = 1;
  std::string out_dir;
  std::string method;
  std::uint64_t seed = 1;

  auto* gen = app.add_subcommand("gen-data", "Generate the source and target datasets");
  gen->add_option("--config", config, "Experiment config (JSON)")->required();
  gen->add_flag("--force", force, "Overwrite an existing data directory");

  auto* matrix = app.add_subcommand("run-matrix", "Train, adapt and evaluate every cell");
  matrix->add_option("--config", config, "Experiment config (JSON)")->required();
  matrix->add_option("--jobs", jobs, "Cells run concurrently")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "Summary table and aggregate FROC curves");
  report->add_option("--config", config, "Experiment config (JSON)")->required();
  report->add_option("--out", out_dir, "Report directory")->required();

  auto* source = app.add_subcommand("train-source", "Train the source model for one seed");
  source->add_option("--config", config, "Experiment config (JSON)")->required();
  source->add_option("--seed", seed, "Run seed")->required();

  auto* adapt = app.add_subcommand("adapt", "Run one adaptation cell");
  adapt->add_option("--config", config, "Experiment config (JSON)")->required();
  adapt->add_option("--method", method, "Plan name, e.g. WDGRL-PE")->required();
  adapt->add_option("--seed", seed, "Run seed")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate one cell on the target test split");
  evaluate->add_option("--config", config, "Experiment config (JSON)")->required();
  evaluate->add_option("--method", method, "Plan name, e.g. WDGRL-PE")->required();
  evaluate->add_option("--seed", seed, "Run seed")->required();

  auto* hash = app.add_subcommand("hash", "Print the config hash");
  hash->add_option("--config", config, "Experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests report success; anything else is a usage error.
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  Session s;
  if (const auto st = dmda_experiment_load(config.c_str(), &s.exp); st != DMDA_OK) {
    std::fprintf(stderr, "dmda: %s\n", dmda_last_error());
    return kExitUsage;
  }

  if (*gen) {
    if (const auto st = dmda_gen_data(s.exp, force ? 1 : 0); st != DMDA_OK) {
      return report_failure("gen-data", st);
    }
    return kExitOk;
  }
  if (*matrix) {
    size_t n_cells = 0, n_failed = 0;
    const auto st = dmda_run_matrix(s.exp, jobs, &n_cells, &n_failed);
    if (st != DMDA_OK && st != DMDA_ERR_PARTIAL) return report_failure("run-matrix", st);
    std::printf("%zu cells, %zu failed\n", n_cells, n_failed);
    return st == DMDA_OK ? kExitOk : report_failure("run-matrix", st);
  }
  if (*report) {
    if (const auto st = dmda_report(s.exp, out_dir.c_str()); st != DMDA_OK) {
      return report_failure("report", st);
    }
    return kExitOk;
  }
  if (*source) {
    if (const auto st = dmda_train_source(s.exp, seed); st != DMDA_OK) {
      return report_failure("train-source", st);
    }
    return kExitOk;
  }
  if (*adapt) {
    if (const auto st = dmda_adapt(s.exp, method.c_str(), seed); st != DMDA_OK) {
      return report_failure("adapt", st);
    }
    return kExitOk;
  }
  if (*evaluate) {
    dmda_froc* curve = nullptr;
    if (const auto st = dmda_evaluate(s.exp, method.c_str(), seed, &curve); st != DMDA_OK) {
      return report_failure("evaluate", st);
    }
    const double levels[] = {0.01, 0.02, 0.1};
    double sens[3] = {};
    dmda_froc_sensitivity_at(curve, levels, 3, sens);
    std::printf("%s seed=%llu sens@0.01=%.3f sens@0.02=%.3f sens@0.1=%.3f\n", method.c_str(),
                static_cast<unsigned long long>(seed), sens[0], sens[1], sens[2]);
    dmda_froc_free(curve);
    return kExitOk;
  }
  if (*hash) {
    char buf[32];
    dmda_experiment_config_hash(s.exp, buf, sizeof(buf));
    std::printf("%s\n", buf);
    return kExitOk;
  }
  return kExitUsage;
}
