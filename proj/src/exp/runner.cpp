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

#include "dmda/exp/runner.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include "dmda/error.hpp"
#include "dmda/model/checkpoint.hpp"
#include "dmda/synth/dataset.hpp"
#include "dmda/train/trainer.hpp"

namespace dmda::exp {
namespace fs = std::filesystem;

namespace {

constexpr const char* kSourceCell = "SOURCE";

std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

std::string format_level(double level) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), level);
  return std::string(buf, r.ptr);
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string first_line(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  if (in.good()) std::getline(in, line);
  return line;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot open " + path.string());
  out << text;
  require(out.good(), ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace

bool MatrixResult::all_ok() const { return failed() == 0; }

std::size_t MatrixResult::failed() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.ok ? 0 : 1;
  return n;
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  std::set<std::uint64_t> seeds;
  for (const auto& p : config_.plans) {
    for (auto s : config_.seeds_for(p)) seeds.insert(s);
  }
  for (auto s : seeds) source_locks_[s] = std::make_unique<std::mutex>();
}

fs::path Experiment::dataset_dir(bool target) const {
  return config_.output_dir / "data" / (target ? "target" : "source");
}

fs::path Experiment::cell_dir(const std::string& method, std::uint64_t seed) const {
  return config_.output_dir / "runs" / seed_dir_name(seed) / method;
}

fs::path Experiment::source_dir(std::uint64_t seed) const { return cell_dir(kSourceCell, seed); }

std::string Experiment::provenance(const std::string& method, std::uint64_t seed) const {
  return "method=" + method + " seed=" + std::to_string(seed) + " config_hash=" + config_.hash;
}

void Experiment::gen_data(bool force) {
  const fs::path data = config_.output_dir / "data";
  std::error_code ec;
  if (fs::exists(data) && !fs::is_empty(data)) {
    require(force, ErrorCode::kState,
            "gen-data: " + data.string() + " is not empty (pass --force to overwrite)");
    fs::remove_all(data, ec);
    require(!ec, ErrorCode::kIo, "gen-data: cannot clear " + data.string() + ": " + ec.message());
  }
  const auto& d = config_.dataset;
  for (bool target : {false, true}) {
    synth::DatasetSpec spec;
    spec.dataset_id = target ? "target" : "source";
    spec.n_patients = target ? d.n_patients_target : d.n_patients_source;
    spec.positive_fraction = d.positive_fraction;
    spec.vendor = target ? d.target_vendor : d.source_vendor;
    spec.seed = derive_seed(d.seed, target ? 2 : 1);
    spec.scene = d.scene;
    synth::generate_dataset(spec, dataset_dir(target));
  }
  std::lock_guard lock(mutex_);
  splits_.clear();
  target_pool_.reset();
}

const candidates::CandidateSplit& Experiment::split(bool target, const std::string& name) {
  std::lock_guard lock(mutex_);
  const std::string key = std::string(target ? "target/" : "source/") + name;
  auto& slot = splits_[key];
  if (!slot) {
    const auto manifest_path = dataset_dir(target) / "manifest.json";
    require(fs::exists(manifest_path), ErrorCode::kState,
            "missing dataset " + manifest_path.string() + " (run gen-data first)");
    const auto manifest = synth::read_manifest(manifest_path);
    slot = std::make_unique<candidates::CandidateSplit>(candidates::build_candidate_split(
        manifest, dataset_dir(target), name, config_.candidate_stage()));
  }
  return *slot;
}

const candidates::TargetPool& Experiment::target_pool() {
  const auto& train_split = split(true, "train");
  std::lock_guard lock(mutex_);
  if (!target_pool_) {
    target_pool_ = std::make_unique<candidates::TargetPool>(
        candidates::make_target_pool(train_split, true));
  }
  return *target_pool_;
}

bool Experiment::source_done(std::uint64_t seed) const {
  const auto stem = source_dir(seed) / "model";
  if (!fs::exists(stem.string() + ".json")) return false;
  try {
    const auto m = model::read_checkpoint_manifest(stem);
    return m.at("metadata").value("config_hash", std::string()) == config_.hash;
  } catch (const std::exception&) {
    return false;
  }
}

bool Experiment::cell_done(const std::string& method, std::uint64_t seed) const {
  const auto dir = cell_dir(method, seed);
  const std::string expected = "# " + provenance(method, seed) + " ";
  return fs::exists(dir / "model.json") &&
         first_line(dir / "froc.csv").rfind(expected, 0) == 0;
}

model::PatchNet Experiment::source_model(std::uint64_t seed) {
  auto it = source_locks_.find(seed);
  require(it != source_locks_.end(), ErrorCode::kInvalidArgument,
          "seed " + std::to_string(seed) + " is not part of the experiment");
  std::lock_guard lock(*it->second);
  const auto dir = source_dir(seed);
  if (source_done(seed)) return model::load_patch_net(dir / "model");

  const auto& pool = split(false, "train").patches;
  auto net = model::PatchNet::build(config_.model, derive_seed(seed, 0x50));
  const auto log = train::train_source(net, pool, config_.source_training, derive_seed(seed, 0x51));
  fs::create_directories(dir);
  train::write_log(dir / "log.csv", log, provenance(kSourceCell, seed));
  model::save_patch_net(dir / "model", net,
                        {{"method", kSourceCell}, {"seed", seed}, {"config_hash", config_.hash}});
  return net;
}

model::PatchNet Experiment::train_source(std::uint64_t seed) { return source_model(seed); }

model::PatchNet Experiment::adapt(const std::string& method, std::uint64_t seed) {
  const auto& plan = config_.plan(method);
  const auto source_net = source_model(seed);
  const auto& source = split(false, "train").patches;
  const auto& target = target_pool();
  const auto* labeled =
      plan.method == train::Method::kSupervisedFt ? &split(true, "val").patches : nullptr;
  auto result = train::run_adaptation(source_net, source, target, labeled, plan,
                                      derive_seed(seed, fnv1a64(plan.name())));
  const auto dir = cell_dir(plan.name(), seed);
  fs::create_directories(dir);
  fs::remove(dir / "froc.csv");
  train::write_log(dir / "log.csv", result.log, provenance(plan.name(), seed));
  model::save_patch_net(dir / "model", result.net,
                        {{"method", plan.name()}, {"seed", seed}, {"config_hash", config_.hash}});
  return std::move(result.net);
}

froc::FrocCurve Experiment::evaluate(const std::string& method, std::uint64_t seed) {
  const auto dir = cell_dir(method, seed);
  require(fs::exists(dir / "model.json"), ErrorCode::kState,
          "evaluate: no model for " + method + " seed " + std::to_string(seed));
  auto net = model::load_patch_net(dir / "model");
  const auto& test = split(true, "test");
  const auto scored = froc::score_dataset(net, test);
  const auto curve = froc::compute_froc(scored, test.annotation_index());
  const auto tmp = dir / "froc.csv.tmp";
  froc::write_froc_csv(tmp, curve, provenance(method, seed));
  fs::rename(tmp, dir / "froc.csv");
  return curve;
}

void Experiment::run_cell(const train::AdaptPlan& plan, std::uint64_t seed) {
  adapt(plan.name(), seed);
  evaluate(plan.name(), seed);
}

MatrixResult Experiment::run_matrix(int jobs) {
  require(jobs >= 1, ErrorCode::kInvalidArgument, "run-matrix: --jobs must be >= 1");
  for (bool target : {false, true}) {
    require(fs::exists(dataset_dir(target) / "manifest.json"), ErrorCode::kState,
            "run-matrix: missing dataset under " + dataset_dir(target).string() +
                " (run gen-data first)");
  }
  struct Task {
    const train::AdaptPlan* plan;  // null for source training
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& [seed, lock] : source_locks_) tasks.push_back({nullptr, seed});
  for (const auto& p : config_.plans) {
    for (auto s : config_.seeds_for(p)) tasks.push_back({&p, s});
  }

  MatrixResult result;
  result.cells.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      const auto& t = tasks[i];
      auto& status = result.cells[i];
      status.method = t.plan ? t.plan->name() : kSourceCell;
      status.seed = t.seed;
      try {
        if (t.plan == nullptr) {
          status.reused = source_done(t.seed);
          source_model(t.seed);
        } else {
          status.reused = cell_done(status.method, t.seed);
          if (!status.reused) run_cell(*t.plan, t.seed);
        }
        status.ok = true;
      } catch (const std::exception& e) {
        status.error = e.what();
      }
    }
  };
  // Shared splits are built once up front.
  split(false, "train");
  target_pool();
  split(true, "val");
  split(true, "test");
  const int n_threads = std::min<int>(jobs, static_cast<int>(tasks.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return result;
}

ReportResult Experiment::report(const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(!ec, ErrorCode::kIo, "report: cannot create " + out_dir.string() + ": " + ec.message());
  const auto& levels = config_.evaluation.fp_levels;

  std::string mean_table = "method";
  std::string std_table = "method";
  for (double l : levels) {
    mean_table += ",sens_at_" + format_level(l);
    std_table += ",std_at_" + format_level(l);
  }
  mean_table += '\n';
  std_table += '\n';

  ReportResult r;
  r.summary_path = out_dir / "summary.csv";
  for (const auto& plan : config_.plans) {
    const auto name = plan.name();
    std::vector<froc::FrocCurve> curves;
    for (auto seed : config_.seeds_for(plan)) {
      if (!cell_done(name, seed)) {
        r.missing.push_back(name + " seed=" + std::to_string(seed));
        continue;
      }
      curves.push_back(froc::read_froc_csv(cell_dir(name, seed) / "froc.csv").curve);
    }
    mean_table += name;
    std_table += name;
    if (curves.empty()) {
      for (std::size_t k = 0; k < levels.size(); ++k) {
        mean_table += ",NA";
        std_table += ",NA";
      }
    } else {
      const auto at_levels = froc::aggregate_runs(curves, levels);
      for (std::size_t k = 0; k < levels.size(); ++k) {
        mean_table += "," + fixed3(at_levels.mean[k]);
        std_table += "," + fixed3(at_levels.std[k]);
      }
      const auto agg = froc::aggregate_runs(curves, config_.evaluation.fp_grid);
      froc::write_aggregate_csv(out_dir / ("aggregate_" + name + ".csv"), agg,
                                "method=" + name + " config_hash=" + config_.hash);
    }
    mean_table += '\n';
    std_table += '\n';
  }
  write_text(r.summary_path, mean_table);
  write_text(out_dir / "summary_std.csv", std_table);
  if (r.missing.empty()) {
    fs::remove(out_dir / "missing.txt", ec);
  } else {
    std::string text = "# partial report: missing runs\n";
    for (const auto& m : r.missing) text += m + '\n';
    write_text(out_dir / "missing.txt", text);
  }
  return r;
}

}  // namespace dmda::exp
