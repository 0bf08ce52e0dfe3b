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

#include "dmda/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "dmda/error.hpp"
#include "dmda/grad/ops.hpp"
#include "dmda/grad/tape.hpp"

namespace dmda::train {

using candidates::PatchLabel;
using candidates::PatchPool;
using candidates::TargetPool;
using grad::Tensor;
using model::Mode;

namespace {

enum Stream : std::uint64_t { kBatchStream = 1, kAugmentStream = 2, kDomainInitStream = 3 };

Tensor batch_tensor(std::size_t n, int side) {
  const auto s = static_cast<std::size_t>(side);
  return Tensor::empty({n, 1, s, s});
}

/// Copies patches `indices` of `pool` into rows [offset, offset + n) of `batch`.
void fill_rows(Tensor& batch, std::size_t offset, const PatchPool& pool,
               std::span<const std::size_t> indices, const AugmentConfig* augment, Rng& rng) {
  const std::size_t psize = pool.patch_size();
  double* out = batch.data().data() + offset * psize;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const double* src = pool.patch(indices[r]);
    if (augment != nullptr) {
      apply_augment(src, out + r * psize, pool.side, draw_augment(*augment, rng));
    } else {
      std::copy_n(src, psize, out + r * psize);
    }
  }
}

Tensor labels_tensor(std::size_t n_ones, std::size_t n_zeros) {
  std::vector<double> y(n_ones, 1.0);
  y.resize(n_ones + n_zeros, 0.0);
  return Tensor::from({n_ones + n_zeros}, std::move(y));
}

/// Source rows 0, target rows 1.
Tensor domain_labels(std::size_t n_source, std::size_t n_target) {
  std::vector<double> y(n_source, 0.0);
  y.resize(n_source + n_target, 1.0);
  return Tensor::from({n_source + n_target}, std::move(y));
}

grad::OptimizerState make_optimizer(const AdaptPlan& plan) {
  return plan.optimizer == grad::OptimizerKind::kSgd
             ? grad::OptimizerState::sgd(plan.lr, plan.momentum)
             : grad::OptimizerState::adam(plan.lr);
}

void concat_params(std::vector<Tensor>& into, const std::vector<Tensor>& more) {
  into.insert(into.end(), more.begin(), more.end());
}

struct SourceBatcher {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;

  SourceBatcher(const PatchPool& pool, const char* who) {
    positives = pool.indices_with(PatchLabel::kPositive);
    negatives = pool.indices_with(PatchLabel::kNegative);
    require(!positives.empty(), ErrorCode::kState,
            std::string(who) + ": labeled pool has no positive patches");
    require(!negatives.empty(), ErrorCode::kState,
            std::string(who) + ": labeled pool has no negative patches");
  }

  /// Positives first, then negatives.
  std::vector<std::size_t> draw(int batch_size, Rng& rng) const {
    auto b = balanced_batch(positives, negatives, batch_size, rng);
    b.positives.insert(b.positives.end(), b.negatives.begin(), b.negatives.end());
    return b.positives;
  }
};

/// Target batches, balanced by pseudo-labels refreshed on a fixed schedule.
class TargetSampler {
 public:
  TargetSampler(const TargetPool& target, const AdaptPlan& plan, const TrainHooks& hooks)
      : target_(target), plan_(plan), hooks_(hooks) {
    require(target.patches.size() > 0, ErrorCode::kState, "adaptation: target pool is empty");
    if (plan.balancing == Balancing::kPseudoExam) {
      require(target.has_exam_labels(), ErrorCode::kState,
              "adaptation: pseudo_exam balancing needs exam-level labels on the target set");
    }
    all_.resize(target.patches.size());
    for (std::size_t i = 0; i < all_.size(); ++i) all_[i] = i;
  }

  bool balanced() const { return plan_.balancing != Balancing::kNone; }

  void maybe_refresh(int iteration, model::PatchNet& scorer) {
    if (!balanced() || iteration % plan_.rebalance_interval != 0) return;
    if (plan_.balancing == Balancing::kPseudo) {
      state_ = refresh_pseudo_labels(scorer, target_, iteration, plan_.pseudo_threshold,
                                     static_cast<std::size_t>(plan_.batch_size / 2));
    } else {
      state_ = refresh_exam_weak_labels(scorer, target_, plan_.top_k_exam, iteration);
    }
    positives_ = state_.indices_with(PseudoLabel::kPositive);
    negatives_ = state_.indices_with(PseudoLabel::kNegative);
    if (hooks_.on_refresh) hooks_.on_refresh(iteration, state_);
  }

  std::vector<std::size_t> draw(int iteration, Rng& rng) {
    std::vector<std::size_t> idx;
    std::vector<PseudoLabel> labels;
    if (balanced()) {
      auto b = balanced_batch(positives_, negatives_, plan_.batch_size, rng);
      idx = std::move(b.positives);
      idx.insert(idx.end(), b.negatives.begin(), b.negatives.end());
      if (hooks_.on_target_batch) {
        for (auto i : idx) labels.push_back(state_.labels[i]);
      }
    } else {
      idx = sample_indices(all_, static_cast<std::size_t>(plan_.batch_size), rng);
    }
    if (hooks_.on_target_batch) hooks_.on_target_batch({iteration, idx, labels});
    return idx;
  }

  std::size_t n_pos() const { return positives_.size(); }
  std::size_t n_neg() const { return negatives_.size(); }

 private:
  const TargetPool& target_;
  const AdaptPlan& plan_;
  const TrainHooks& hooks_;
  std::vector<std::size_t> all_;
  PseudoLabelState state_;
  std::vector<std::size_t> positives_;
  std::vector<std::size_t> negatives_;
};

void emit(std::vector<LogRow>& log, const TrainHooks& hooks, LogRow row) {
  if (hooks.on_log) hooks.on_log(row);
  log.push_back(std::move(row));
}

void check_method(const AdaptPlan& plan, Method expected, const char* who) {
  plan.validate();
  require(plan.method == expected, ErrorCode::kInvalidArgument,
          std::string(who) + ": plan method is " + method_name(plan.method) + ", expected " +
              method_name(expected));
}

void check_pools(const model::PatchNet& net, const PatchPool& source, const TargetPool& target) {
  const int side = net.config().input_side;
  require(source.side == side && target.patches.side == side, ErrorCode::kShape,
          "adaptation: patch side does not match the network input side " +
              std::to_string(side));
}

std::vector<double> snapshot(const std::vector<model::NamedTensor>& state) {
  std::vector<double> out;
  for (const auto& t : state) out.insert(out.end(), t.tensor.data().begin(), t.tensor.data().end());
  return out;
}

}  // namespace

std::size_t iterations_per_epoch(std::size_t n_negatives, int batch_size) {
  const auto half = static_cast<std::size_t>(batch_size / 2);
  return (n_negatives + half - 1) / half;
}

std::vector<LogRow> train_source(model::PatchNet& net, const PatchPool& source,
                                 const SourceTrainConfig& config, std::uint64_t seed,
                                 const TrainHooks& hooks) {
  config.validate();
  require(source.side == net.config().input_side, ErrorCode::kShape,
          "train_source: patch side does not match the network input side");
  const SourceBatcher pools(source, "train_source");
  const auto half = static_cast<std::size_t>(config.batch_size / 2);
  const std::size_t per_epoch = iterations_per_epoch(pools.negatives.size(), config.batch_size);

  Rng rng(derive_seed(seed, kBatchStream));
  Rng aug_rng(derive_seed(seed, kAugmentStream));
  const AugmentConfig* aug = config.augment ? &config.augmentation : nullptr;
  auto opt = grad::OptimizerState::adam(config.lr);
  auto params = net.parameters();
  const Tensor y = labels_tensor(half, half);
  std::vector<LogRow> log;
  std::vector<std::size_t> order = pools.negatives;
  int iteration = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    opt.learning_rate = config.lr_for_epoch(epoch);
    rng.shuffle(order.begin(), order.end());
    for (std::size_t it = 0; it < per_epoch; ++it) {
      auto idx = sample_indices(pools.positives, half, rng);
      for (std::size_t k = 0; k < half; ++k) idx.push_back(order[(it * half + k) % order.size()]);
      auto x = batch_tensor(idx.size(), source.side);
      fill_rows(x, 0, source, idx, aug, aug_rng);

      grad::Tape tape;
      double loss_value;
      {
        grad::TapeScope scope(tape);
        const auto loss = grad::binary_cross_entropy(net.predict(x, Mode::kTrain), y);
        loss_value = loss.item();
        grad::backward(tape, loss);
      }
      grad::optimizer_step(opt, params);
      emit(log, hooks, {iteration++, "SOURCE", loss_value, 0.0, opt.learning_rate, 0, 0});
    }
  }
  return log;
}

double discriminator_step(model::DomainNet& disc, const Tensor& source_features,
                          const Tensor& target_features, grad::OptimizerState& opt) {
  require(disc.ends_in_sigmoid(), ErrorCode::kInvalidArgument,
          "discriminator_step: domain net must end in a sigmoid");
  const auto fs = source_features.detach();
  const auto ft = target_features.detach();
  const auto y = labels_tensor(fs.shape()[0], ft.shape()[0]);
  auto params = disc.parameters();
  grad::zero_grads(params);
  grad::Tape tape;
  double value;
  {
    grad::TapeScope scope(tape);
    const auto p = grad::concat_rows(disc.forward(fs), disc.forward(ft));
    const auto loss = grad::binary_cross_entropy(p, y);
    value = loss.item();
    grad::backward(tape, loss);
  }
  grad::optimizer_step(opt, params);
  return value;
}

double critic_objective(const model::DomainNet& critic, const Tensor& source_features,
                        const Tensor& target_features) {
  grad::NoGradScope no_grad;
  return grad::sub(grad::mean(critic.forward(source_features)),
                   grad::mean(critic.forward(target_features)))
      .item();
}

double critic_step(model::DomainNet& critic, const Tensor& source_features,
                   const Tensor& target_features, grad::OptimizerState& opt, double clip_c) {
  require(!critic.ends_in_sigmoid(), ErrorCode::kInvalidArgument,
          "critic_step: domain net must have unbounded output");
  require(clip_c > 0.0, ErrorCode::kInvalidArgument, "critic_step: clip_c must be > 0");
  const auto fs = source_features.detach();
  const auto ft = target_features.detach();
  auto params = critic.parameters();
  grad::zero_grads(params);
  grad::Tape tape;
  double value;
  {
    grad::TapeScope scope(tape);
    const auto gap = grad::sub(grad::mean(critic.forward(fs)), grad::mean(critic.forward(ft)));
    value = gap.item();
    grad::backward(tape, grad::scalar_mul(gap, -1.0));
  }
  grad::optimizer_step(opt, params);
  grad::clip_weights(params, clip_c);
  return value;
}

std::vector<LogRow> adapt_revgrad(model::PatchNet& net, const PatchPool& source,
                                  const TargetPool& target, const AdaptPlan& plan,
                                  std::uint64_t seed, const TrainHooks& hooks) {
  check_method(plan, Method::kRevGrad, "adapt_revgrad");
  check_pools(net, source, target);
  const SourceBatcher src(source, "adapt_revgrad");
  TargetSampler tgt(target, plan, hooks);
  auto disc = model::DomainNet::build(plan.domain_net, net.feature_dim(),
                                      derive_seed(seed, kDomainInitStream));
  Rng rng(derive_seed(seed, kBatchStream));
  Rng aug_rng(derive_seed(seed, kAugmentStream));
  const AugmentConfig* aug = plan.augment ? &plan.augmentation : nullptr;

  auto opt = make_optimizer(plan);
  auto params = net.parameters();
  concat_params(params, disc.parameters());
  const auto half = static_cast<std::size_t>(plan.batch_size / 2);
  const auto bs = static_cast<std::size_t>(plan.batch_size);
  const Tensor y_cls = labels_tensor(half, half);
  const Tensor y_dom = domain_labels(bs, bs);

  std::vector<LogRow> log;
  for (int it = 0; it < plan.iterations; ++it) {
    tgt.maybe_refresh(it, net);
    const auto s_idx = src.draw(plan.batch_size, rng);
    const auto t_idx = tgt.draw(it, rng);
    auto x = batch_tensor(2 * bs, source.side);
    fill_rows(x, 0, source, s_idx, aug, aug_rng);
    fill_rows(x, bs, target.patches, t_idx, aug, aug_rng);

    grad::Tape tape;
    double cls_value, dom_value;
    {
      grad::TapeScope scope(tape);
      const auto f = net.features(x, Mode::kTrain);
      const auto cls = grad::binary_cross_entropy(net.classify(grad::slice_rows(f, 0, bs)), y_cls);
      const auto d = disc.forward(grad::grad_reverse(f, plan.grl_lambda));
      const auto dom = grad::binary_cross_entropy(d, y_dom);
      cls_value = cls.item();
      dom_value = dom.item();
      grad::backward(tape, grad::add(cls, grad::scalar_mul(dom, plan.lambda_domain)));
    }
    grad::optimizer_step(opt, params);
    if (hooks.on_domain_step) hooks.on_domain_step(it, disc);
    emit(log, hooks, {it, plan.name(), cls_value, dom_value, opt.learning_rate, tgt.n_pos(), tgt.n_neg()});
  }
  return log;
}

model::PatchNet adapt_adda(const model::PatchNet& source_net, const PatchPool& source,
                           const TargetPool& target, const AdaptPlan& plan, std::uint64_t seed,
                           std::vector<LogRow>* log_out, const TrainHooks& hooks) {
  check_method(plan, Method::kAdda, "adapt_adda");
  check_pools(source_net, source, target);
  const SourceBatcher src(source, "adapt_adda");
  TargetSampler tgt(target, plan, hooks);
  const auto reference = snapshot(source_net.state());
  model::PatchNet frozen = source_net.clone();
  model::PatchNet target_net = source_net.clone();
  auto disc = model::DomainNet::build(plan.domain_net, source_net.feature_dim(),
                                      derive_seed(seed, kDomainInitStream));
  Rng rng(derive_seed(seed, kBatchStream));
  Rng aug_rng(derive_seed(seed, kAugmentStream));
  const AugmentConfig* aug = plan.augment ? &plan.augmentation : nullptr;

  auto disc_opt = make_optimizer(plan);
  auto target_opt = make_optimizer(plan);
  auto extractor = target_net.extractor_parameters();
  auto disc_params = disc.parameters();
  const auto half = static_cast<std::size_t>(plan.batch_size / 2);
  const auto bs = static_cast<std::size_t>(plan.batch_size);
  const Tensor y_cls = labels_tensor(half, half);
  const Tensor y_fool = labels_tensor(bs, 0);

  std::vector<LogRow> log;
  for (int it = 0; it < plan.iterations; ++it) {
    tgt.maybe_refresh(it, target_net);
    const auto s_idx = src.draw(plan.batch_size, rng);
    const auto t_idx = tgt.draw(it, rng);
    auto xs = batch_tensor(bs, source.side);
    auto xt = batch_tensor(bs, source.side);
    fill_rows(xs, 0, source, s_idx, aug, aug_rng);
    fill_rows(xt, 0, target.patches, t_idx, aug, aug_rng);

    Tensor fs;
    double cls_value;
    {
      grad::NoGradScope no_grad;
      fs = frozen.features(xs, Mode::kEval);
      cls_value = grad::binary_cross_entropy(frozen.classify(fs), y_cls).item();
    }
    grad::Tape tape;
    double disc_value = 0.0;
    {
      grad::TapeScope scope(tape);
      const auto ft = target_net.features(xt, Mode::kTrain);
      for (int k = 0; k < plan.critic_steps; ++k) {
        const double v = discriminator_step(disc, fs, ft, disc_opt);
        if (k == 0) disc_value = v;
      }
      const auto fool = grad::binary_cross_entropy(disc.forward(ft), y_fool);
      grad::backward(tape, fool);
    }
    grad::optimizer_step(target_opt, extractor);
    grad::zero_grads(disc_params);
    if (hooks.on_domain_step) hooks.on_domain_step(it, disc);
    emit(log, hooks,
         {it, plan.name(), cls_value, disc_value, target_opt.learning_rate, tgt.n_pos(), tgt.n_neg()});
  }

  require(snapshot(frozen.state()) == reference && snapshot(source_net.state()) == reference,
          ErrorCode::kInternal, "adapt_adda: frozen source network was modified");
  const auto head_now = target_net.head_parameters();
  const auto head_ref = source_net.head_parameters();
  for (std::size_t i = 0; i < head_ref.size(); ++i) {
    require(std::ranges::equal(head_now[i].data(), head_ref[i].data()), ErrorCode::kInternal,
            "adapt_adda: frozen classifier head was modified");
  }
  if (log_out != nullptr) *log_out = std::move(log);
  return target_net;
}

std::vector<LogRow> adapt_wdgrl(model::PatchNet& net, const PatchPool& source,
                                const TargetPool& target, const AdaptPlan& plan,
                                std::uint64_t seed, const TrainHooks& hooks) {
  check_method(plan, Method::kWdgrl, "adapt_wdgrl");
  check_pools(net, source, target);
  const SourceBatcher src(source, "adapt_wdgrl");
  TargetSampler tgt(target, plan, hooks);
  auto critic = model::DomainNet::build(plan.domain_net, net.feature_dim(),
                                        derive_seed(seed, kDomainInitStream));
  Rng rng(derive_seed(seed, kBatchStream));
  Rng aug_rng(derive_seed(seed, kAugmentStream));
  const AugmentConfig* aug = plan.augment ? &plan.augmentation : nullptr;

  auto critic_opt = make_optimizer(plan);
  auto net_opt = make_optimizer(plan);
  auto params = net.parameters();
  auto critic_params = critic.parameters();
  grad::clip_weights(critic_params, plan.clip_c);
  const auto half = static_cast<std::size_t>(plan.batch_size / 2);
  const auto bs = static_cast<std::size_t>(plan.batch_size);
  const Tensor y_cls = labels_tensor(half, half);

  std::vector<LogRow> log;
  for (int it = 0; it < plan.iterations; ++it) {
    tgt.maybe_refresh(it, net);
    const auto s_idx = src.draw(plan.batch_size, rng);
    const auto t_idx = tgt.draw(it, rng);
    auto x = batch_tensor(2 * bs, source.side);
    fill_rows(x, 0, source, s_idx, aug, aug_rng);
    fill_rows(x, bs, target.patches, t_idx, aug, aug_rng);

    grad::Tape tape;
    double cls_value, gap_value;
    {
      grad::TapeScope scope(tape);
      const auto f = net.features(x, Mode::kTrain);
      const auto fs = grad::slice_rows(f, 0, bs);
      const auto ft = grad::slice_rows(f, bs, 2 * bs);
      for (int k = 0; k < plan.critic_steps; ++k) {
        critic_step(critic, fs, ft, critic_opt, plan.clip_c);
      }
      const auto cls = grad::binary_cross_entropy(net.classify(fs), y_cls);
      const auto gap =
          grad::sub(grad::mean(critic.forward(fs)), grad::mean(critic.forward(ft)));
      cls_value = cls.item();
      gap_value = gap.item();
      grad::backward(tape, grad::add(cls, grad::scalar_mul(gap, plan.lambda_domain)));
    }
    grad::optimizer_step(net_opt, params);
    grad::zero_grads(critic_params);
    if (hooks.on_domain_step) hooks.on_domain_step(it, critic);
    emit(log, hooks,
         {it, plan.name(), cls_value, gap_value, net_opt.learning_rate, tgt.n_pos(), tgt.n_neg()});
  }
  return log;
}

std::vector<LogRow> finetune_supervised(model::PatchNet& net, const PatchPool& labeled_target,
                                        const AdaptPlan& plan, std::uint64_t seed,
                                        const TrainHooks& hooks) {
  check_method(plan, Method::kSupervisedFt, "finetune_supervised");
  require(labeled_target.side == net.config().input_side, ErrorCode::kShape,
          "finetune_supervised: patch side does not match the network input side");
  std::vector<LogRow> log;
  if (plan.iterations == 0) return log;
  const SourceBatcher pools(labeled_target, "finetune_supervised");
  Rng rng(derive_seed(seed, kBatchStream));
  Rng aug_rng(derive_seed(seed, kAugmentStream));
  const AugmentConfig* aug = plan.augment ? &plan.augmentation : nullptr;
  auto opt = make_optimizer(plan);
  auto params = net.parameters();
  const auto half = static_cast<std::size_t>(plan.batch_size / 2);
  const Tensor y = labels_tensor(half, half);
  for (int it = 0; it < plan.iterations; ++it) {
    const auto idx = pools.draw(plan.batch_size, rng);
    auto x = batch_tensor(idx.size(), labeled_target.side);
    fill_rows(x, 0, labeled_target, idx, aug, aug_rng);
    grad::Tape tape;
    double value;
    {
      grad::TapeScope scope(tape);
      const auto loss = grad::binary_cross_entropy(net.predict(x, Mode::kTrain), y);
      value = loss.item();
      grad::backward(tape, loss);
    }
    grad::optimizer_step(opt, params);
    emit(log, hooks, {it, plan.name(), value, 0.0, opt.learning_rate, 0, 0});
  }
  return log;
}

AdaptResult run_adaptation(const model::PatchNet& source_net, const PatchPool& source,
                           const TargetPool& target, const PatchPool* labeled_target,
                           const AdaptPlan& plan, std::uint64_t seed, const TrainHooks& hooks) {
  plan.validate();
  AdaptResult r{source_net.clone(), {}};
  switch (plan.method) {
    case Method::kNone:
      break;
    case Method::kRevGrad:
      r.log = adapt_revgrad(r.net, source, target, plan, seed, hooks);
      break;
    case Method::kAdda:
      r.net = adapt_adda(source_net, source, target, plan, seed, &r.log, hooks);
      break;
    case Method::kWdgrl:
      r.log = adapt_wdgrl(r.net, source, target, plan, seed, hooks);
      break;
    case Method::kSupervisedFt:
      require(labeled_target != nullptr, ErrorCode::kInvalidArgument,
              "run_adaptation: SUPERVISED_FT needs a labeled target pool");
      r.log = finetune_supervised(r.net, *labeled_target, plan, seed, hooks);
      break;
  }
  return r;
}

void write_log(const std::filesystem::path& path, const std::vector<LogRow>& rows,
               const std::string& provenance) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "write_log: cannot open " + path.string());
  if (!provenance.empty()) out << "# " << provenance << '\n';
  out << "iteration,method,classifier_loss,domain_loss,lr,n_pseudo_pos,n_pseudo_neg\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.iteration << ',' << r.method << ',' << r.classifier_loss << ',' << r.domain_loss
        << ',' << r.lr << ',' << r.n_pseudo_pos << ',' << r.n_pseudo_neg << '\n';
  }
  require(out.good(), ErrorCode::kIo, "write_log: failed writing " + path.string());
}

}  // namespace dmda::train
