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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "dmda/dmda.h"
#include "dmda/error.hpp"
#include "dmda/exp/config.hpp"
#include "dmda/exp/runner.hpp"

namespace dmda::exp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string l;
  std::getline(in, l);
  return l;
}

json tiny_config(const fs::path& out) {
  auto j = json::parse(R"({
    "name": "tiny",
    "seeds": [1, 2],
    "dataset": {
      "seed": 7, "n_patients_source": 16, "n_patients_target": 16, "positive_fraction": 0.5,
      "scene": {"image_side_px": 128},
      "source_vendor": {"name": "a", "pixel_spacing_um": 70.0, "noise_sigma": 0.01},
      "target_vendor": {"name": "b", "pixel_spacing_um": 85.0, "gamma": 0.6, "noise_sigma": 0.03}
    },
    "candidates": {"budget": 8},
    "model": {"num_blocks": 2, "init_filters": 2, "fc_units": 8, "input_side": 8},
    "source_training": {"epochs": 1, "batch_size": 16},
    "adaptation": {
      "plan_defaults": {"iterations": 12, "batch_size": 16, "rebalance_interval": 6},
      "plans": [
        {"method": "NONE"},
        {"method": "WDGRL", "critic_steps": 2},
        {"method": "REVGRAD", "balancing": "pseudo_exam"},
        {"method": "SUPERVISED_FT"}
      ]
    },
    "evaluation": {"fp_levels": [0.5, 1, 2]}
  })");
  j["output_dir"] = out.string();
  return j;
}

fs::path write_config(const fs::path& dir, const json& j) {
  fs::create_directories(dir);
  const auto path = dir / "config.json";
  std::ofstream(path) << j.dump(2);
  return path;
}

TEST(ConfigHash, KnownFnvVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(ConfigHash, IgnoresKeyOrderAndWhitespace) {
  const auto a = json::parse(R"({"b": 1, "a": [1, 2, {"y": 0, "x": 1}]})");
  const auto b = json::parse("{\"a\":[1,2,{\"x\":1,\"y\":0}],\n  \"b\":1}");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_EQ(config_hash(a).find_first_not_of("0123456789abcdef"), std::string::npos);
  auto c = a;
  c["b"] = 2;
  EXPECT_NE(config_hash(a), config_hash(c));
  char want[17];
  std::snprintf(want, sizeof want, "%016llx",
                static_cast<unsigned long long>(fnv1a64(R"({"a":[1,2,{"x":1,"y":0}],"b":1})")));
  EXPECT_EQ(config_hash(a), want);
}

TEST(Config, DefaultsMergeIntoPlans) {
  const auto c = ExperimentConfig::from_json(tiny_config("/tmp/x"), "/");
  ASSERT_EQ(c.plans.size(), 4u);
  EXPECT_EQ(c.plans[1].iterations, 12);
  EXPECT_EQ(c.plans[1].critic_steps, 2);
  EXPECT_EQ(c.plans[2].name(), "REVGRAD-PE");
  EXPECT_EQ(c.plans[2].rebalance_interval, 6);
  EXPECT_EQ(c.evaluation.n_runs, 2);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(c.candidate_stage().patch_side, 8);
  EXPECT_EQ(c.plan("WDGRL").method, train::Method::kWdgrl);
  EXPECT_THROW(c.plan("ADDA"), Error);
}

TEST(Config, RelativeOutputResolvesAgainstConfigDir) {
  auto j = tiny_config("x");
  j["output_dir"] = "../runs/here";
  const auto c = ExperimentConfig::from_json(j, "/srv/configs");
  EXPECT_EQ(c.output_dir, fs::path("/srv/runs/here"));
}

TEST(Config, MalformedConfigsAreRejected) {
  const auto base = tiny_config("/tmp/x");
  auto expect_bad = [](json j) { EXPECT_THROW(ExperimentConfig::from_json(j, "/"), Error) << j.dump(); };
  auto j = base;
  j.erase("output_dir");
  expect_bad(j);
  j = base;
  j["adaptation"]["plans"].push_back({{"method", "NONE"}});
  expect_bad(j);
  j = base;
  j["dataset"]["target_vendor"]["name"] = "a";
  expect_bad(j);
  j = base;
  j["evaluation"]["n_runs"] = 3;
  expect_bad(j);
  j = base;
  j["adaptation"]["plans"][0]["balancing"] = "pseudo";
  expect_bad(j);
  j = base;
  j["adaptation"]["plans"][0]["method"] = "CYCLEGAN";
  expect_bad(j);
  j = base;
  j["model"]["input_side"] = 10;
  expect_bad(j);
  j = base;
  j["evaluation"]["fp_levels"] = json::array();
  expect_bad(j);
}

TEST(Config, MissingFileIsAnIoError) {
  try {
    ExperimentConfig::load("/nonexistent/config.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

// One small experiment shared by the end-to-end checks below.
class TinyExperiment : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("dmda_tiny_exp_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    config_path_ = write_config(root_, tiny_config("out"));
    Experiment e(ExperimentConfig::load(config_path_));
    e.gen_data(false);
    first_ = e.run_matrix(1);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static Experiment fresh() { return Experiment(ExperimentConfig::load(config_path_)); }

  static inline fs::path root_;
  static inline fs::path config_path_;
  static inline MatrixResult first_;
};

TEST_F(TinyExperiment, MatrixCoversEveryPlanAndSeed) {
  EXPECT_TRUE(first_.all_ok());
  EXPECT_EQ(first_.failed(), 0u);
  EXPECT_EQ(first_.cells.size(), 2u + 4u * 2u);
  for (const auto& cell : first_.cells) EXPECT_TRUE(cell.ok) << cell.method << " " << cell.error;
  auto e = fresh();
  for (std::uint64_t s : {1, 2}) {
    EXPECT_TRUE(fs::exists(e.source_dir(s) / "model.json"));
    for (const auto* m : {"NONE", "WDGRL", "REVGRAD-PE", "SUPERVISED_FT"}) {
      const auto dir = e.cell_dir(m, s);
      EXPECT_TRUE(fs::exists(dir / "model.bin")) << dir;
      EXPECT_EQ(first_line(dir / "froc.csv").rfind("# " + e.provenance(m, s) + " ", 0), 0u);
    }
  }
  EXPECT_EQ(first_line(e.cell_dir("WDGRL", 1) / "log.csv"), "# " + e.provenance("WDGRL", 1));
}

TEST_F(TinyExperiment, DataDirectoryIsProtected) {
  auto e = fresh();
  EXPECT_THROW(e.gen_data(false), Error);
}

TEST_F(TinyExperiment, SecondRunReusesFinishedCells) {
  auto e = fresh();
  const auto r = e.run_matrix(2);
  EXPECT_TRUE(r.all_ok());
  for (const auto& cell : r.cells) EXPECT_TRUE(cell.reused) << cell.method;
}

TEST_F(TinyExperiment, ReportRowsFollowPlanOrder) {
  auto e = fresh();
  const auto out = root_ / "report";
  const auto r = e.report(out);
  EXPECT_FALSE(r.partial());
  std::istringstream table(slurp(out / "summary.csv"));
  std::string line;
  std::getline(table, line);
  EXPECT_EQ(line, "method,sens_at_0.5,sens_at_1,sens_at_2");
  std::vector<std::string> methods;
  while (std::getline(table, line)) {
    methods.push_back(line.substr(0, line.find(',')));
    const auto cells = line.substr(line.find(',') + 1);
    // Three values, three decimals each.
    EXPECT_EQ(std::count(cells.begin(), cells.end(), ','), 2);
    EXPECT_EQ(std::count(cells.begin(), cells.end(), '.'), 3);
    EXPECT_EQ(cells.size(), 3u * 5u + 2u);
  }
  EXPECT_EQ(methods, (std::vector<std::string>{"NONE", "WDGRL", "REVGRAD-PE", "SUPERVISED_FT"}));
  EXPECT_TRUE(fs::exists(out / "aggregate_WDGRL.csv"));
  EXPECT_EQ(first_line(out / "summary_std.csv"), "method,std_at_0.5,std_at_1,std_at_2");
  EXPECT_FALSE(fs::exists(out / "missing.txt"));
}

TEST_F(TinyExperiment, ReportMeanMatchesPerSeedCurves) {
  auto e = fresh();
  const auto out = root_ / "report_check";
  e.report(out);
  const double levels[] = {0.5, 1.0, 2.0};
  std::vector<double> mean(3, 0.0);
  for (std::uint64_t s : {1, 2}) {
    const auto c = froc::read_froc_csv(e.cell_dir("NONE", s) / "froc.csv").curve;
    const auto v = froc::sensitivity_at(c, levels);
    for (int k = 0; k < 3; ++k) mean[k] += v[k] / 2;
  }
  const auto table = slurp(out / "summary.csv");
  const auto row_start = table.find("\nNONE,") + 6;
  const auto row = table.substr(row_start, table.find('\n', row_start) - row_start);
  char want[64];
  std::snprintf(want, sizeof want, "%.3f,%.3f,%.3f", mean[0], mean[1], mean[2]);
  EXPECT_EQ(row, want);
}

TEST_F(TinyExperiment, MissingRunsAreReportedAsNa) {
  const auto dir = root_ / "partial";
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::copy(root_ / "out", dir / "out", fs::copy_options::recursive);
  auto j = tiny_config("out");
  const auto path = write_config(dir, j);
  Experiment e(ExperimentConfig::load(path));
  fs::remove(e.cell_dir("WDGRL", 1) / "froc.csv");
  fs::remove(e.cell_dir("SUPERVISED_FT", 1) / "froc.csv");
  fs::remove(e.cell_dir("SUPERVISED_FT", 2) / "model.json");
  const auto r = e.report(dir / "report");
  EXPECT_TRUE(r.partial());
  EXPECT_EQ(r.missing, (std::vector<std::string>{"WDGRL seed=1", "SUPERVISED_FT seed=1",
                                                 "SUPERVISED_FT seed=2"}));
  const auto table = slurp(dir / "report" / "summary.csv");
  EXPECT_NE(table.find("\nSUPERVISED_FT,NA,NA,NA\n"), std::string::npos);
  EXPECT_EQ(table.find("\nWDGRL,NA"), std::string::npos);  // seed 2 still counts
  EXPECT_NE(slurp(dir / "report" / "missing.txt").find("WDGRL seed=1"), std::string::npos);
  // Single-run std is zero.
  EXPECT_NE(slurp(dir / "report" / "summary_std.csv").find("\nWDGRL,0.000,0.000,0.000\n"),
            std::string::npos);
}

TEST_F(TinyExperiment, ChangedConfigDoesNotReuseCells) {
  const auto dir = root_ / "changed";
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::copy(root_ / "out", dir / "out", fs::copy_options::recursive);
  auto j = tiny_config("out");
  j["adaptation"]["plans"][1]["critic_steps"] = 3;
  Experiment e(ExperimentConfig::load(write_config(dir, j)));
  const auto r = e.report(dir / "report");
  EXPECT_EQ(r.missing.size(), 8u);
}

TEST_F(TinyExperiment, CApiMirrorsTheRunner) {
  dmda_experiment* exp = nullptr;
  ASSERT_EQ(dmda_experiment_load(config_path_.c_str(), &exp), DMDA_OK);
  char buf[512];
  ASSERT_EQ(dmda_experiment_config_hash(exp, buf, sizeof buf), DMDA_OK);
  EXPECT_EQ(std::string(buf), fresh().config().hash);
  EXPECT_EQ(dmda_experiment_config_hash(exp, buf, 4), DMDA_ERR_INVALID_ARGUMENT);
  ASSERT_EQ(dmda_experiment_output_dir(exp, buf, sizeof buf), DMDA_OK);
  EXPECT_EQ(fs::path(buf), root_ / "out");

  size_t n_cells = 0, n_failed = 0;
  ASSERT_EQ(dmda_run_matrix(exp, 1, &n_cells, &n_failed), DMDA_OK);
  EXPECT_EQ(n_cells, 10u);
  EXPECT_EQ(n_failed, 0u);

  dmda_froc* curve = nullptr;
  ASSERT_EQ(dmda_evaluate(exp, "WDGRL", 2, &curve), DMDA_OK);
  const auto direct = froc::read_froc_csv(fresh().cell_dir("WDGRL", 2) / "froc.csv").curve;
  ASSERT_EQ(dmda_froc_size(curve), direct.points.size());
  double t, fp, sens;
  ASSERT_EQ(dmda_froc_point(curve, 0, &t, &fp, &sens), DMDA_OK);
  EXPECT_NEAR(fp, direct.points[0].fp_per_image, 1e-6);
  EXPECT_EQ(dmda_froc_point(curve, 1u << 30, &t, &fp, &sens), DMDA_ERR_INVALID_ARGUMENT);
  const double levels[] = {0.5, 2.0};
  double out[2];
  ASSERT_EQ(dmda_froc_sensitivity_at(curve, levels, 2, out), DMDA_OK);
  const auto want = froc::sensitivity_at(direct, levels);
  EXPECT_NEAR(out[0], want[0], 1e-6);
  EXPECT_NEAR(out[1], want[1], 1e-6);
  dmda_froc_free(curve);

  EXPECT_EQ(dmda_adapt(exp, "ADDA-PE", 1), DMDA_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(dmda_last_error()).find("ADDA-PE"), std::string::npos);
  EXPECT_EQ(dmda_gen_data(exp, 0), DMDA_ERR_STATE);
  dmda_experiment_free(exp);
}

TEST(CApi, LoadErrorsCarryAMessage) {
  dmda_experiment* exp = nullptr;
  EXPECT_EQ(dmda_experiment_load("/nonexistent.json", &exp), DMDA_ERR_IO);
  EXPECT_EQ(exp, nullptr);
  EXPECT_NE(std::string(dmda_last_error()), "");
  EXPECT_EQ(dmda_experiment_load(nullptr, &exp), DMDA_ERR_INVALID_ARGUMENT);
  dmda_froc* curve = nullptr;
  EXPECT_EQ(dmda_froc_load("/nonexistent.csv", &curve), DMDA_ERR_IO);
  EXPECT_NE(std::string(dmda_version()), "");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DMDA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

TEST_F(TinyExperiment, CliExitCodes) {
  const auto cfg = config_path_.string();
  EXPECT_EQ(run_cli("hash --config " + cfg), 0);
  EXPECT_EQ(run_cli("report --config " + cfg + " --out " + (root_ / "cli_report").string()), 0);
  EXPECT_EQ(run_cli("evaluate --config " + cfg + " --method NONE --seed 1"), 0);
  EXPECT_EQ(run_cli("hash --config /nonexistent.json"), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("adapt --config " + cfg + " --method ADDA --seed 1"), 1);

  const auto dir = root_ / "cli_partial";
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::copy(root_ / "out", dir / "out", fs::copy_options::recursive);
  const auto path = write_config(dir, tiny_config("out"));
  Experiment e(ExperimentConfig::load(path));
  fs::remove(e.cell_dir("NONE", 2) / "froc.csv");
  EXPECT_EQ(run_cli("report --config " + path.string() + " --out " + (dir / "r").string()), 2);
}

}  // namespace
}  // namespace dmda::exp
