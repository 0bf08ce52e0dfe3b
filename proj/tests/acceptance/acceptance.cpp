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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any of them fails.
//
//   acceptance <config.json> <work_dir>
//
// The config is the default desk experiment; every run it triggers is
// written below work_dir, which is cleared first.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dmda/candidates/patch_pool.hpp"
#include "dmda/exp/config.hpp"
#include "dmda/exp/runner.hpp"
#include "dmda/froc/froc.hpp"
#include "dmda/grad/ops.hpp"
#include "dmda/grad/tape.hpp"
#include "dmda/synth/dataset.hpp"
#include "dmda/train/trainer.hpp"
#include "fd_check.hpp"
#include "froc_oracle.hpp"
#include "op_cases.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dmda;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int g_failures = 0;
std::set<int> g_reported;

void verdict(int id, const char* title, bool ok, const std::string& detail) {
  g_reported.insert(id);
  std::printf("criterion %d: %s  %s | %s\n", id, ok ? "PASS" : "FAIL", title, detail.c_str());
  std::fflush(stdout);
  g_failures += !ok;
}

// ---------------------------------------------------------------- gradients

void check_finite_differences() {
  constexpr int kInstances = 20;
  const auto t0 = Clock::now();
  const auto cases = testing::op_cases();
  double worst = 0.0;
  std::string worst_op = "-";
  std::size_t instances = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Rng rng(1000 + i);
    for (int k = 0; k < kInstances; ++k) {
      const auto r = testing::finite_difference_check(cases[i].op, cases[i].make_inputs(rng), rng);
      ++instances;
      if (!(r.max_rel_error <= worst)) {
        worst = r.max_rel_error;
        worst_op = cases[i].name;
      }
    }
  }
  const double secs = seconds_since(t0);
  verdict(1, "finite-difference gradients", worst < 1e-4 && secs < 60.0,
          fmt("%zu ops x %d instances, max rel error %.2e (%s), %.1f s", cases.size(),
              kInstances, worst, worst_op.c_str(), secs));
}

void check_grad_reverse() {
  bool ok = true;
  std::string detail;
  Rng rng(99);
  for (double lambda : {0.0, 0.5, 1.0, 2.0}) {
    auto x = testing::random_tensor({4, 7}, rng, -1e3, 1e3);
    x.set_requires_grad(true);
    const auto upstream = testing::random_tensor({1, 28}, rng);
    grad::Tape tape;
    bool forward_same;
    {
      grad::TapeScope scope(tape);
      const auto y = grad::grad_reverse(x, lambda);
      forward_same = std::memcmp(y.data().data(), x.data().data(), 28 * sizeof(double)) == 0;
      const auto flat = grad::reshape(y, {1, 28});
      grad::backward(tape, grad::mean(grad::dense(flat, upstream, grad::Tensor::zeros({1}))));
    }
    bool scaled = true;
    for (std::size_t i = 0; i < 28; ++i) scaled = scaled && x.grad()[i] == -lambda * upstream.data()[i];
    ok = ok && forward_same && scaled;
    detail += fmt("lambda=%.1f fwd %s bwd %s; ", lambda, forward_same ? "identical" : "DIFFERS",
                  scaled ? "-lambda" : "WRONG");
  }
  verdict(2, "gradient reversal", ok, detail);
}

// --------------------------------------------------------------------- froc

void check_froc_oracle() {
  std::size_t matched = 0, max_cands = 0, max_lesions = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto inst = testing::random_instance(seed);
    const auto curve = froc::compute_froc(inst.scored, inst.annotations);
    matched += curve.points == testing::sweep_oracle(inst);
    max_cands = std::max(max_cands, inst.scored.size());
    std::size_t lesions = 0;
    for (const auto& [id, anns] : inst.annotations) lesions += anns.size();
    max_lesions = std::max(max_lesions, lesions);
  }
  verdict(3, "FROC equals threshold sweep", matched == 100,
          fmt("%zu/100 exact, up to %zu candidates and %zu lesions", matched, max_cands,
              max_lesions));
}

// -------------------------------------------------------------- experiments

fs::path write_config(const fs::path& dir, json j) {
  fs::create_directories(dir);
  j["output_dir"] = "out";
  const auto path = dir / "config.json";
  std::ofstream(path) << j.dump(2) << "\n";
  return path;
}

struct MatrixRun {
  bool ok = false;
  double seconds = 0.0;
  std::string summary;  // raw bytes
  std::map<std::string, std::vector<double>> rows;
  std::vector<double> fp_levels;
};

std::vector<double> parse_row(const std::string& cells) {
  std::vector<double> out;
  std::stringstream ss(cells);
  std::string v;
  while (std::getline(ss, v, ',')) out.push_back(v == "NA" ? std::nan("") : std::stod(v));
  return out;
}

MatrixRun run_full_matrix(const fs::path& config_path) {
  MatrixRun run;
  const auto t0 = Clock::now();
  exp::Experiment e(exp::ExperimentConfig::load(config_path));
  e.gen_data(true);
  const int jobs = static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 4u));
  const auto m = e.run_matrix(jobs);
  for (const auto& c : m.cells) {
    if (!c.ok) std::printf("  cell %s seed=%llu failed: %s\n", c.method.c_str(),
                           static_cast<unsigned long long>(c.seed), c.error.c_str());
  }
  const auto r = e.report(e.config().output_dir / "report");
  run.seconds = seconds_since(t0);
  run.ok = m.all_ok() && !r.partial();
  std::ifstream in(r.summary_path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  run.summary = ss.str();
  std::istringstream lines(run.summary);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const auto comma = line.find(',');
    run.rows[line.substr(0, comma)] = parse_row(line.substr(comma + 1));
  }
  run.fp_levels = e.config().evaluation.fp_levels;
  return run;
}

std::size_t level_index(const MatrixRun& run, double fp) {
  for (std::size_t i = 0; i < run.fp_levels.size(); ++i) {
    if (std::abs(run.fp_levels[i] - fp) < 1e-12) return i;
  }
  return run.fp_levels.size();
}

double at(const MatrixRun& run, const std::string& method, double fp) {
  const auto it = run.rows.find(method);
  const auto k = level_index(run, fp);
  if (it == run.rows.end() || k >= it->second.size()) return std::nan("");
  return it->second[k];
}

void print_table(const char* label, const MatrixRun& run) {
  std::printf("  %s summary (%.0f s):\n", label, run.seconds);
  std::istringstream lines(run.summary);
  std::string line;
  while (std::getline(lines, line)) std::printf("    %s\n", line.c_str());
}

void check_ordering(const MatrixRun& run) {
  constexpr double kSlack = 0.02;
  const double fp = 0.02;
  const double pe = at(run, "WDGRL-PE", fp), wd = at(run, "WDGRL", fp);
  const double none = at(run, "NONE", fp), sup = at(run, "SUPERVISED_FT", fp);
  const bool a = pe >= wd - kSlack, b = wd >= none - kSlack, c = sup >= none - kSlack;
  const bool fast = run.seconds < 60.0 * 60.0;
  verdict(7, "directional ordering at 0.02 FP/image", run.ok && a && b && c && fast,
          fmt("WDGRL-PE %.3f %s WDGRL %.3f %s NONE %.3f; SUPERVISED_FT %.3f %s NONE; "
              "matrix %.1f min",
              pe, a ? ">=" : "<", wd, b ? ">=" : "<", none, sup, c ? ">=" : "<",
              run.seconds / 60.0));
}

void check_determinism(const MatrixRun& a, const MatrixRun& b) {
  const bool same = a.ok && b.ok && !a.summary.empty() && a.summary == b.summary;
  verdict(8, "matrix determinism", same,
          fmt("summary tables %s (%zu bytes)", same ? "byte-identical" : "DIFFER",
              a.summary.size()));
}

void check_no_shift(const MatrixRun& run) {
  const double fp = 0.1;
  const double none = at(run, "NONE", fp);
  bool ok = run.ok && !std::isnan(none);
  std::string detail = fmt("NONE %.3f", none);
  for (const auto& [method, values] : run.rows) {
    if (method == "NONE") continue;
    const double v = at(run, method, fp);
    const bool close = std::abs(v - none) <= 0.05;
    ok = ok && close;
    detail += fmt("; %s %.3f%s", method.c_str(), v, close ? "" : " (off)");
  }
  verdict(9, "no-shift sanity at 0.1 FP/image", ok, detail);
}

// ------------------------------------------------------- training contracts

void check_batch_contracts(exp::Experiment& e) {
  const auto& cfg = e.config();
  const auto& source = e.split(false, "train").patches;
  const auto& target_split = e.split(true, "train");
  const auto source_net = e.train_source(cfg.seeds.front());

  bool balance_ok = true, weak_ok = true;
  std::string balance_detail, weak_detail;
  bool any_pe = false;
  for (const auto& plan : cfg.plans) {
    if (plan.balancing == train::Balancing::kNone) continue;
    const bool exam = plan.balancing == train::Balancing::kPseudoExam;
    any_pe = any_pe || exam;
    const auto target = candidates::make_target_pool(target_split, exam);

    train::PseudoLabelState current;
    std::vector<int> refreshes;
    std::size_t batches = 0, balanced = 0, discarded_drawn = 0, stale = 0;
    std::size_t worst_exam = 0, negative_exam_pos = 0;
    train::TrainHooks hooks;
    hooks.on_refresh = [&](int it, const train::PseudoLabelState& s) {
      refreshes.push_back(it);
      current = s;
      if (!exam) return;
      std::map<std::string, std::size_t> per_exam;
      for (std::size_t i = 0; i < s.labels.size(); ++i) {
        if (s.labels[i] == train::PseudoLabel::kPositive) ++per_exam[target.patches.exam_ids[i]];
      }
      for (const auto& [id, n] : per_exam) {
        if (target.exam_labels.at(id)) {
          worst_exam = std::max(worst_exam, n);
        } else {
          negative_exam_pos += n;
        }
      }
    };
    hooks.on_target_batch = [&](const train::TargetBatchEvent& ev) {
      ++batches;
      std::size_t pos = 0, neg = 0;
      for (std::size_t i = 0; i < ev.indices.size(); ++i) {
        const auto label = current.labels.at(ev.indices[i]);
        pos += label == train::PseudoLabel::kPositive;
        neg += label == train::PseudoLabel::kNegative;
        discarded_drawn += label == train::PseudoLabel::kDiscarded;
        stale += i >= ev.labels.size() || ev.labels[i] != label;
      }
      balanced += ev.indices.size() == 64 && pos == 32 && neg == 32;
    };
    const auto t0 = Clock::now();
    train::run_adaptation(source_net, source, target, nullptr, plan, cfg.seeds.front(), hooks);

    std::vector<int> want;
    for (int it = 0; it < plan.iterations; it += 200) want.push_back(it);
    const bool full = plan.iterations == 1000 && plan.batch_size == 64;
    const bool b_ok = full && batches == 1000 && balanced == batches && stale == 0 &&
                      refreshes == want;
    balance_ok = balance_ok && b_ok;
    balance_detail += fmt("%s %zu/%zu balanced, %zu refreshes%s (%.0f s); ", plan.name().c_str(),
                          balanced, batches, refreshes.size(),
                          refreshes == want ? " at 0 mod 200" : " OFF-SCHEDULE",
                          seconds_since(t0));
    if (exam) {
      const bool w_ok = worst_exam <= 4 && negative_exam_pos == 0 && discarded_drawn == 0;
      weak_ok = weak_ok && w_ok;
      weak_detail += fmt("%s max %zu per positive exam, %zu from negative exams, %zu discarded "
                         "drawn; ",
                         plan.name().c_str(), worst_exam, negative_exam_pos, discarded_drawn);
    }
  }
  verdict(4, "balanced batches and refresh schedule", balance_ok && !balance_detail.empty(),
          balance_detail);
  verdict(5, "exam-level weak labels", weak_ok && any_pe, weak_detail);
}

void check_candidate_stage(exp::Experiment& e) {
  const auto stage = e.config().candidate_stage();
  std::size_t exams = 0, images = 0, lesions = 0, found = 0, max_per_image = 0;
  const auto t0 = Clock::now();
  for (bool target : {false, true}) {
    const auto dir = e.dataset_dir(target);
    const auto manifest = synth::read_manifest(dir / "manifest.json");
    exams += manifest.exams.size();
    for (const auto& [name, ids] : manifest.splits) {
      const auto split = candidates::build_candidate_split(manifest, dir, name, stage);
      for (const auto& img : split.images) {
        ++images;
        max_per_image = std::max(max_per_image, img.candidates.size());
        for (const auto& a : img.annotations) {
          ++lesions;
          found += std::any_of(img.candidates.begin(), img.candidates.end(),
                               [&](const auto& c) { return a.contains(c.x, c.y); });
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  const double sens = lesions ? static_cast<double>(found) / lesions : 0.0;
  verdict(6, "candidate detector", exams >= 200 && sens >= 0.95 && max_per_image <= 15 &&
                                       secs < 300.0,
          fmt("%zu exams, %zu images: sensitivity %.3f (%zu/%zu lesions), at most %zu "
              "candidates/image, %.0f s",
              exams, images, sens, found, lesions, max_per_image, secs));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <config.json> <work_dir>\n", argv[0]);
    return 2;
  }
  const fs::path config_path = argv[1];
  const fs::path work = argv[2];
  json base;
  try {
    base = json::parse(std::ifstream(config_path));
    fs::remove_all(work);
    fs::create_directories(work);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "acceptance: %s\n", ex.what());
    return 2;
  }

  check_finite_differences();
  check_grad_reverse();
  check_froc_oracle();

  try {
    // Two complete executions of the default experiment from scratch.
    const auto first = run_full_matrix(write_config(work / "run_a", base));
    print_table("first run", first);
    check_ordering(first);

    {
      exp::Experiment e(exp::ExperimentConfig::load(work / "run_a" / "config.json"));
      check_batch_contracts(e);
      check_candidate_stage(e);
    }

    const auto second = run_full_matrix(write_config(work / "run_b", base));
    check_determinism(first, second);

    auto twin = base;
    twin["dataset"]["target_vendor"] = base["dataset"]["source_vendor"];
    twin["dataset"]["target_vendor"]["name"] =
        base["dataset"]["source_vendor"]["name"].get<std::string>() + "_twin";
    const auto flat = run_full_matrix(write_config(work / "no_shift", twin));
    print_table("no-shift run", flat);
    check_no_shift(flat);
  } catch (const std::exception& ex) {
    std::printf("acceptance aborted: %s\n", ex.what());
    ++g_failures;
  }

  for (int id = 1; id <= 9; ++id) {
    if (!g_reported.contains(id)) verdict(id, "not reached", false, "run aborted before this check");
  }
  std::printf("%s: %d criterion failure(s)\n", g_failures ? "FAIL" : "PASS", g_failures);
  return g_failures ? 1 : 0;
}
