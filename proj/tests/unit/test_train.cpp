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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "dmda/error.hpp"
#include "dmda/grad/ops.hpp"
#include "dmda/grad/tape.hpp"
#include "dmda/train/augment.hpp"
#include "dmda/train/plan.hpp"
#include "dmda/train/sampling.hpp"
#include "dmda/train/trainer.hpp"

namespace dmda::train {
namespace {

using candidates::PatchLabel;
using candidates::PatchPool;
using candidates::TargetPool;
using grad::Tensor;

constexpr int kSide = 8;

std::vector<double> ramp(int side) {
  std::vector<double> v(static_cast<std::size_t>(side) * side);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i) + 0.5;
  return v;
}

double px(const std::vector<double>& img, int side, int x, int y) {
  if (x < 0 || y < 0 || x >= side || y >= side) return 0.0;
  return img[static_cast<std::size_t>(y) * side + x];
}

// Toy domain: lesion patches carry a bright center blob. `exams` groups
// patches; every `positive_every`-th exam holds two lesions among its 12
// candidates.
PatchPool toy_pool(int n_exams, int positive_every, double gain, std::uint64_t seed) {
  PatchPool pool;
  pool.side = kSide;
  Rng rng(seed);
  const double c = 0.5 * (kSide - 1);
  for (int e = 0; e < n_exams; ++e) {
    const bool positive_exam = e % positive_every == 0;
    for (int k = 0; k < 12; ++k) {
      const bool lesion = positive_exam && k < 2;
      for (int y = 0; y < kSide; ++y) {
        for (int x = 0; x < kSide; ++x) {
          double v = 0.3 + 0.1 * rng.normal();
          if (lesion) v += 0.6 * std::exp(-((x - c) * (x - c) + (y - c) * (y - c)) / 4.0);
          pool.pixels.push_back(gain * v);
        }
      }
      pool.labels.push_back(lesion ? PatchLabel::kPositive : PatchLabel::kNegative);
      pool.exam_ids.push_back("E" + std::to_string(e));
      pool.image_ids.push_back("E" + std::to_string(e) + "-I" + std::to_string(k / 3));
    }
  }
  return pool;
}

TargetPool as_target(const PatchPool& labeled) {
  TargetPool t;
  t.patches = labeled;
  std::fill(t.patches.labels.begin(), t.patches.labels.end(), PatchLabel::kUnlabeled);
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    auto& flag = t.exam_labels[labeled.exam_ids[i]];
    flag = flag || labeled.labels[i] == PatchLabel::kPositive;
  }
  return t;
}

model::PatchNetConfig tiny_net() {
  model::PatchNetConfig c;
  c.num_blocks = 2;
  c.init_filters = 2;
  c.fc_units = 8;
  c.input_side = kSide;
  return c;
}

// ---------------------------------------------------------------- augment

TEST(Augment, IdentityDrawIsExact) {
  const auto src = ramp(6);
  std::vector<double> dst(src.size());
  apply_augment(src.data(), dst.data(), 6, AugmentDraw{});
  EXPECT_EQ(dst, src);
}

TEST(Augment, FlipsMirrorAboutTheCenter) {
  const auto src = ramp(5);
  std::vector<double> h(src.size()), v(src.size());
  AugmentDraw d;
  d.hflip = true;
  apply_augment(src.data(), h.data(), 5, d);
  d = {};
  d.vflip = true;
  apply_augment(src.data(), v.data(), 5, d);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) {
      EXPECT_DOUBLE_EQ(h[y * 5 + x], px(src, 5, 4 - x, y));
      EXPECT_DOUBLE_EQ(v[y * 5 + x], px(src, 5, x, 4 - y));
    }
  }
}

TEST(Augment, QuarterTurnPermutesPixels) {
  const auto src = ramp(6);
  std::vector<double> dst(src.size());
  AugmentDraw d;
  d.rotation_rad = std::numbers::pi / 2;
  apply_augment(src.data(), dst.data(), 6, d);
  // Output (x, y) reads the source at the inverse rotation about the center.
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      EXPECT_NEAR(dst[y * 6 + x], px(src, 6, y, 5 - x), 1e-9);
    }
  }
}

TEST(Augment, IntegerTranslationShiftsWithZeroFill) {
  const auto src = ramp(6);
  std::vector<double> dst(src.size());
  AugmentDraw d;
  d.translate_x = 2.0;
  d.translate_y = -1.0;
  apply_augment(src.data(), dst.data(), 6, d);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) EXPECT_DOUBLE_EQ(dst[y * 6 + x], px(src, 6, x - 2, y + 1));
  }
}

TEST(Augment, ZoomSamplesBilinearly) {
  const auto src = ramp(8);
  std::vector<double> dst(src.size());
  AugmentDraw d;
  d.zoom = 1.1;
  apply_augment(src.data(), dst.data(), 8, d);
  const double c = 3.5;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double sx = c + (x - c) / 1.1, sy = c + (y - c) / 1.1;
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const double ax = sx - x0, ay = sy - y0;
      const double want = (1 - ax) * (1 - ay) * px(src, 8, x0, y0) +
                          ax * (1 - ay) * px(src, 8, x0 + 1, y0) +
                          (1 - ax) * ay * px(src, 8, x0, y0 + 1) +
                          ax * ay * px(src, 8, x0 + 1, y0 + 1);
      EXPECT_NEAR(dst[y * 8 + x], want, 1e-12);
    }
  }
}

TEST(Augment, DrawsStayWithinConfiguredRanges) {
  AugmentConfig cfg;
  Rng rng(3);
  int hflips = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto d = draw_augment(cfg, rng);
    hflips += d.hflip;
    EXPECT_LE(std::abs(d.rotation_rad), 15.0 * std::numbers::pi / 180.0 + 1e-15);
    EXPECT_GE(d.zoom, 0.9);
    EXPECT_LE(d.zoom, 1.1);
    EXPECT_LE(std::abs(d.translate_x), 15.0);
    EXPECT_LE(std::abs(d.translate_y), 15.0);
  }
  EXPECT_GT(hflips, 850);
  EXPECT_LT(hflips, 1150);
}

TEST(Augment, DisabledConfigLeavesPatchesUntouched) {
  AugmentConfig cfg{false, false, 0.0, 0.0, 0.0};
  Rng rng(1);
  const auto patch = Tensor::from({1, 6, 6}, ramp(6));
  EXPECT_TRUE(std::ranges::equal(augment(patch, cfg, rng).data(), patch.data()));
}

TEST(Augment, InvalidInputsAreRejected) {
  AugmentConfig cfg;
  cfg.max_zoom_frac = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.max_rotation_deg = -1.0;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_THROW(apply_augment(Tensor::zeros({2, 3, 3}), AugmentDraw{}), Error);
}

// --------------------------------------------------------------- sampling

TEST(Sampling, DistinctDrawsWhenPoolIsLargeEnough) {
  std::vector<std::size_t> pool{3, 5, 7, 9, 11, 13};
  Rng rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const auto s = sample_indices(pool, 4, rng);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 4u);
    for (auto v : s) EXPECT_NE(std::find(pool.begin(), pool.end(), v), pool.end());
  }
}

TEST(Sampling, SmallPoolsAreDrawnWithReplacement) {
  std::vector<std::size_t> pool{4, 8};
  Rng rng(2);
  const auto s = sample_indices(pool, 32, rng);
  ASSERT_EQ(s.size(), 32u);
  EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()), (std::set<std::size_t>{4, 8}));
}

TEST(Sampling, BalancedBatchSplitsEvenly) {
  std::vector<std::size_t> pos{1, 2, 3}, neg(100);
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = 100 + i;
  Rng rng(3);
  const auto b = balanced_batch(pos, neg, 64, rng);
  EXPECT_EQ(b.positives.size(), 32u);
  EXPECT_EQ(b.negatives.size(), 32u);
  for (auto i : b.positives) EXPECT_LE(i, 3u);
  for (auto i : b.negatives) EXPECT_GE(i, 100u);
}

TEST(Sampling, EmptyClassIsAnError) {
  std::vector<std::size_t> some{1}, none;
  Rng rng(4);
  EXPECT_THROW(balanced_batch(none, some, 8, rng), Error);
  EXPECT_THROW(balanced_batch(some, none, 8, rng), Error);
  EXPECT_THROW(balanced_batch(some, some, 7, rng), Error);
}

TEST(PseudoLabels, ThresholdSplitsScores) {
  const auto s = pseudo_labels_from_scores({0.1, 0.5, 0.49, 0.9}, 200);
  EXPECT_EQ(s.labels, (std::vector<PseudoLabel>{PseudoLabel::kNegative, PseudoLabel::kPositive,
                                                PseudoLabel::kNegative, PseudoLabel::kPositive}));
  EXPECT_EQ(s.last_refresh_iteration, 200);
  EXPECT_EQ(s.count(PseudoLabel::kPositive), 2u);
}

TEST(PseudoLabels, EmptyClassFallsBackToExtremes) {
  const auto s = pseudo_labels_from_scores({0.1, 0.3, 0.2, 0.05, 0.4}, 0, 0.5, 2);
  EXPECT_EQ(s.indices_with(PseudoLabel::kPositive), (std::vector<std::size_t>{1, 4}));
  EXPECT_EQ(s.count(PseudoLabel::kNegative), 3u);
  const auto t = pseudo_labels_from_scores({0.9, 0.8, 0.95}, 0, 0.5, 1);
  EXPECT_EQ(t.indices_with(PseudoLabel::kNegative), (std::vector<std::size_t>{1}));
}

TEST(PseudoLabels, ExamRuleKeepsTopKOfPositiveExams) {
  TargetPool t;
  t.patches.side = 1;
  t.patches.exam_ids = {"a", "a", "a", "b", "b", "a"};
  t.patches.labels.assign(6, PatchLabel::kUnlabeled);
  t.patches.pixels.assign(6, 0.0);
  t.exam_labels = {{"a", true}, {"b", false}};
  const auto s = exam_weak_labels_from_scores({0.2, 0.9, 0.2, 0.99, 0.1, 0.5}, t, 2, 0);
  using enum PseudoLabel;
  // Index 0 wins the 0.2 tie against index 2 by pool order.
  EXPECT_EQ(s.labels, (std::vector<PseudoLabel>{kDiscarded, kPositive, kDiscarded, kNegative,
                                                kNegative, kPositive}));
  const auto s1 = exam_weak_labels_from_scores({0.2, 0.9, 0.3, 0.99, 0.1, 0.5}, t, 3, 0);
  EXPECT_EQ(s1.labels, (std::vector<PseudoLabel>{kDiscarded, kPositive, kPositive, kNegative,
                                                 kNegative, kPositive}));
}

TEST(PseudoLabels, ExamRuleNeedsEveryExamLabel) {
  TargetPool t;
  t.patches.side = 1;
  t.patches.exam_ids = {"a", "c"};
  t.patches.labels.assign(2, PatchLabel::kUnlabeled);
  t.patches.pixels.assign(2, 0.0);
  t.exam_labels = {{"a", true}};
  EXPECT_THROW(exam_weak_labels_from_scores({0.1, 0.2}, t, 4, 0), Error);
}

TEST(PseudoLabels, ScoresMatchPerPatchPrediction) {
  auto net = model::PatchNet::build(tiny_net(), 5);
  const auto pool = toy_pool(3, 2, 1.0, 6);
  const auto scores = score_patches(net, pool, 7);
  ASSERT_EQ(scores.size(), pool.size());
  for (std::size_t i = 0; i < pool.size(); i += 5) {
    grad::NoGradScope no_grad;
    const auto x = Tensor::from({1, 1, kSide, kSide},
                                {pool.patch(i), pool.patch(i) + pool.patch_size()});
    EXPECT_NEAR(scores[i], net.predict(x, model::Mode::kEval).data()[0], 1e-12);
  }
}

// ------------------------------------------------------------------- plan

TEST(Plan, NamesCarryBalancingSuffix) {
  auto p = AdaptPlan::defaults(Method::kWdgrl, Balancing::kPseudoExam);
  EXPECT_EQ(p.name(), "WDGRL-PE");
  p.balancing = Balancing::kPseudo;
  EXPECT_EQ(p.name(), "WDGRL-P");
  EXPECT_EQ(AdaptPlan::defaults(Method::kSupervisedFt).name(), "SUPERVISED_FT");
  EXPECT_EQ(parse_method("REVGRAD"), Method::kRevGrad);
  EXPECT_THROW(parse_method("GAN"), Error);
  EXPECT_THROW(parse_balancing("half"), Error);
}

TEST(Plan, DefaultsFollowTheReferenceSchedule) {
  const auto p = AdaptPlan::defaults(Method::kRevGrad);
  EXPECT_EQ(p.iterations, 1000);
  EXPECT_EQ(p.rebalance_interval, 200);
  EXPECT_EQ(p.batch_size, 64);
  EXPECT_EQ(p.top_k_exam, 4);
  EXPECT_EQ(p.optimizer, grad::OptimizerKind::kSgd);
  EXPECT_EQ(AdaptPlan::defaults(Method::kWdgrl).domain_net.output, model::DomainOutput::kCritic);
  SourceTrainConfig s;
  EXPECT_EQ(s.lr_for_epoch(6), 0.001);
  EXPECT_EQ(s.lr_for_epoch(7), 0.0002);
}

TEST(Plan, InconsistentPlansAreRejected) {
  auto p = AdaptPlan::defaults(Method::kNone);
  p.balancing = Balancing::kPseudo;
  EXPECT_THROW(p.validate(), Error);
  p = AdaptPlan::defaults(Method::kWdgrl);
  p.domain_net.output = model::DomainOutput::kProbability;
  EXPECT_THROW(p.validate(), Error);
  p = AdaptPlan::defaults(Method::kRevGrad);
  p.batch_size = 63;
  EXPECT_THROW(p.validate(), Error);
  p = AdaptPlan::defaults(Method::kRevGrad);
  p.rebalance_interval = 0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Plan, JsonRoundTrip) {
  auto p = AdaptPlan::defaults(Method::kAdda, Balancing::kPseudoExam);
  p.lr = 0.003;
  p.critic_steps = 3;
  p.seeds = {4, 5};
  const nlohmann::json j = p;
  const auto q = j.get<AdaptPlan>();
  EXPECT_EQ(nlohmann::json(q), j);
  EXPECT_EQ(q.name(), "ADDA-PE");
}

// ---------------------------------------------------------------- trainer

TEST(Trainer, IterationsPerEpochCoverAllNegatives) {
  EXPECT_EQ(iterations_per_epoch(64, 64), 2u);
  EXPECT_EQ(iterations_per_epoch(65, 64), 3u);
  EXPECT_EQ(iterations_per_epoch(1, 64), 1u);
}

TEST(Trainer, SourceTrainingLearnsTheToyTask) {
  const auto pool = toy_pool(30, 2, 1.0, 7);
  auto net = model::PatchNet::build(tiny_net(), 8);
  SourceTrainConfig cfg;
  cfg.epochs = 4;
  cfg.high_lr_epochs = 2;
  cfg.lr = 0.01;
  cfg.late_lr = 0.002;
  cfg.batch_size = 32;
  cfg.augment = false;
  const auto log = train_source(net, pool, cfg, 9);
  const std::size_t per_epoch = iterations_per_epoch(pool.indices_with(PatchLabel::kNegative).size(), 32);
  ASSERT_EQ(log.size(), 4 * per_epoch);
  EXPECT_EQ(log.front().method, "SOURCE");
  EXPECT_EQ(log[2 * per_epoch - 1].lr, 0.01);
  EXPECT_EQ(log[2 * per_epoch].lr, 0.002);
  const auto scores = score_patches(net, pool);
  double correct = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    correct += (scores[i] >= 0.5) == (pool.labels[i] == PatchLabel::kPositive);
  }
  EXPECT_GT(correct / pool.size(), 0.95);
}

TEST(Trainer, SourceTrainingNeedsBothClasses) {
  auto pool = toy_pool(4, 100, 1.0, 1);  // only exam 0 is positive
  for (auto& l : pool.labels) l = PatchLabel::kNegative;
  auto net = model::PatchNet::build(tiny_net(), 1);
  EXPECT_THROW(train_source(net, pool, SourceTrainConfig{}, 1), Error);
}

TEST(Trainer, DiscriminatorLearnsSeparableFeatures) {
  model::DomainNetConfig dc;
  auto disc = model::DomainNet::build(dc, 3, 1);
  Rng rng(2);
  auto fs = Tensor::zeros({32, 3}), ft = Tensor::zeros({32, 3});
  for (auto& v : fs.data()) v = rng.normal() + 1.0;
  for (auto& v : ft.data()) v = rng.normal() - 1.0;
  auto opt = grad::OptimizerState::sgd(0.1);
  const double first = discriminator_step(disc, fs, ft, opt);
  double last = first;
  for (int i = 0; i < 50; ++i) last = discriminator_step(disc, fs, ft, opt);
  EXPECT_LT(last, first);
  EXPECT_LT(last, 0.3);
}

TEST(Trainer, CriticStepClipsAndWidensTheGap) {
  auto dc = model::DomainNetConfig{};
  dc.output = model::DomainOutput::kCritic;
  dc.num_layers = 2;
  dc.hidden_units = 8;
  auto critic = model::DomainNet::build(dc, 3, 3);
  Rng rng(4);
  auto fs = Tensor::zeros({16, 3}), ft = Tensor::zeros({16, 3});
  for (auto& v : fs.data()) v = rng.normal() + 2.0;
  for (auto& v : ft.data()) v = rng.normal();
  auto opt = grad::OptimizerState::sgd(0.05);
  const double before = critic_objective(critic, fs, ft);
  for (int i = 0; i < 30; ++i) critic_step(critic, fs, ft, opt, 0.05);
  EXPECT_GT(critic_objective(critic, fs, ft), before);
  for (const auto& p : critic.parameters()) {
    for (double v : p.data()) EXPECT_LE(std::abs(v), 0.05);
  }
  model::DomainNet prob = model::DomainNet::build(model::DomainNetConfig{}, 3, 1);
  EXPECT_THROW(critic_step(prob, fs, ft, opt, 0.01), Error);
}

class AdaptFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    source_ = toy_pool(20, 2, 1.0, 11);
    target_ = as_target(toy_pool(30, 3, 1.4, 12));
    source_net_ = model::PatchNet::build(tiny_net(), 13);
    SourceTrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 32;
    cfg.lr = 0.01;
    cfg.augment = false;
    train_source(source_net_, source_, cfg, 14);
  }

  AdaptPlan plan(Method m, Balancing b, int iterations) const {
    auto p = AdaptPlan::defaults(m, b);
    p.iterations = iterations;
    p.augment = false;
    return p;
  }

  PatchPool source_;
  TargetPool target_;
  model::PatchNet source_net_ = model::PatchNet::build(tiny_net(), 0);
};

TEST_F(AdaptFixture, PseudoBalancedBatchesAreHalfAndHalf) {
  const auto p = plan(Method::kRevGrad, Balancing::kPseudo, 1000);
  std::vector<int> refreshes;
  std::size_t batches = 0, balanced = 0;
  TrainHooks hooks;
  hooks.on_refresh = [&](int it, const PseudoLabelState& s) {
    refreshes.push_back(it);
    EXPECT_EQ(s.last_refresh_iteration, it);
  };
  hooks.on_target_batch = [&](const TargetBatchEvent& e) {
    ++batches;
    ASSERT_EQ(e.indices.size(), 64u);
    const auto pos = std::count(e.labels.begin(), e.labels.end(), PseudoLabel::kPositive);
    const auto neg = std::count(e.labels.begin(), e.labels.end(), PseudoLabel::kNegative);
    balanced += pos == 32 && neg == 32;
  };
  auto result = run_adaptation(source_net_, source_, target_, nullptr, p, 15, hooks);
  EXPECT_EQ(batches, 1000u);
  EXPECT_EQ(balanced, 1000u);
  EXPECT_EQ(refreshes, (std::vector<int>{0, 200, 400, 600, 800}));
  EXPECT_EQ(result.log.size(), 1000u);
}

TEST_F(AdaptFixture, ExamBalancingRespectsWeakLabels) {
  auto p = plan(Method::kWdgrl, Balancing::kPseudoExam, 400);
  PseudoLabelState current;
  std::size_t discarded_drawn = 0;
  TrainHooks hooks;
  hooks.on_refresh = [&](int, const PseudoLabelState& s) {
    current = s;
    std::map<std::string, int> pos_per_exam;
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
      const auto& exam = target_.patches.exam_ids[i];
      if (s.labels[i] == PseudoLabel::kPositive) {
        ++pos_per_exam[exam];
        EXPECT_TRUE(target_.exam_labels.at(exam)) << "positive from negative exam " << exam;
      }
      if (!target_.exam_labels.at(exam)) {
        EXPECT_EQ(s.labels[i], PseudoLabel::kNegative);
      }
    }
    for (const auto& [exam, n] : pos_per_exam) {
      EXPECT_LE(n, 4) << exam;
    }
  };
  hooks.on_target_batch = [&](const TargetBatchEvent& e) {
    for (auto i : e.indices) discarded_drawn += current.labels[i] == PseudoLabel::kDiscarded;
  };
  run_adaptation(source_net_, source_, target_, nullptr, p, 16, hooks);
  EXPECT_EQ(discarded_drawn, 0u);
  EXPECT_GT(current.count(PseudoLabel::kDiscarded), 0u);
}

TEST_F(AdaptFixture, ExamBalancingNeedsExamLabels) {
  auto blind = target_;
  blind.exam_labels.clear();
  EXPECT_THROW(run_adaptation(source_net_, source_, blind, nullptr,
                              plan(Method::kRevGrad, Balancing::kPseudoExam, 5), 1),
               Error);
}

TEST_F(AdaptFixture, AddaKeepsSourceAndHeadFrozen) {
  const auto before = source_net_.state();
  std::vector<std::vector<double>> snap;
  for (const auto& t : before) snap.emplace_back(t.tensor.data().begin(), t.tensor.data().end());
  std::vector<double> disc_losses;
  TrainHooks hooks;
  hooks.on_log = [&](const LogRow& r) { disc_losses.push_back(r.domain_loss); };
  auto result = run_adaptation(source_net_, source_, target_, nullptr,
                               plan(Method::kAdda, Balancing::kNone, 60), 17, hooks);
  const auto after = source_net_.state();
  for (std::size_t i = 0; i < after.size(); ++i) {
    EXPECT_TRUE(std::ranges::equal(after[i].tensor.data(), snap[i])) << after[i].name;
  }
  const auto h0 = source_net_.head_parameters();
  const auto h1 = result.net.head_parameters();
  for (std::size_t i = 0; i < h0.size(); ++i) EXPECT_TRUE(std::ranges::equal(h0[i].data(), h1[i].data()));
  const auto e0 = source_net_.extractor_parameters();
  const auto e1 = result.net.extractor_parameters();
  EXPECT_FALSE(std::ranges::equal(e0[0].data(), e1[0].data()));
  ASSERT_EQ(disc_losses.size(), 60u);
}

TEST_F(AdaptFixture, SameSeedReplaysExactly) {
  const auto p = plan(Method::kWdgrl, Balancing::kPseudo, 30);
  auto a = run_adaptation(source_net_, source_, target_, nullptr, p, 18);
  auto b = run_adaptation(source_net_, source_, target_, nullptr, p, 18);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].classifier_loss, b.log[i].classifier_loss);
    EXPECT_EQ(a.log[i].domain_loss, b.log[i].domain_loss);
  }
  const auto sa = a.net.state(), sb = b.net.state();
  for (std::size_t i = 0; i < sa.size(); ++i) {
    EXPECT_TRUE(std::ranges::equal(sa[i].tensor.data(), sb[i].tensor.data()));
  }
}

TEST_F(AdaptFixture, NoneReturnsTheSourceNetwork) {
  auto r = run_adaptation(source_net_, source_, target_, nullptr,
                          plan(Method::kNone, Balancing::kNone, 1000), 1);
  EXPECT_TRUE(r.log.empty());
  const auto a = source_net_.state(), b = r.net.state();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(std::ranges::equal(a[i].tensor.data(), b[i].tensor.data()));
  }
}

TEST_F(AdaptFixture, FineTuneNeedsLabeledTargetPatches) {
  EXPECT_THROW(run_adaptation(source_net_, source_, target_, nullptr,
                              plan(Method::kSupervisedFt, Balancing::kNone, 5), 1),
               Error);
  const auto labeled = toy_pool(10, 2, 1.4, 19);
  auto r = run_adaptation(source_net_, source_, target_, &labeled,
                          plan(Method::kSupervisedFt, Balancing::kNone, 20), 1);
  EXPECT_EQ(r.log.size(), 20u);
  EXPECT_EQ(r.log[0].method, "SUPERVISED_FT");
}

TEST(TrainLog, CsvLayout) {
  const auto path = std::filesystem::temp_directory_path() / "dmda_log.csv";
  write_log(path, {{0, "WDGRL-P", 0.5, -0.25, 0.01, 3, 4}}, "method=WDGRL-P seed=1");
  std::ifstream in(path);
  std::string l0, l1, l2;
  std::getline(in, l0);
  std::getline(in, l1);
  std::getline(in, l2);
  EXPECT_EQ(l0, "# method=WDGRL-P seed=1");
  EXPECT_EQ(l1, "iteration,method,classifier_loss,domain_loss,lr,n_pseudo_pos,n_pseudo_neg");
  EXPECT_EQ(l2.rfind("0,WDGRL-P,0.5", 0), 0u);
  EXPECT_NE(l2.find(",3,4"), std::string::npos);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace dmda::train
