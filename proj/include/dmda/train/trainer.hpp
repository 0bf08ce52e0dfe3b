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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dmda/candidates/patch_pool.hpp"
#include "dmda/grad/optim.hpp"
#include "dmda/model/domain_net.hpp"
#include "dmda/model/patch_net.hpp"
#include "dmda/train/plan.hpp"
#include "dmda/train/sampling.hpp"

namespace dmda::train {

struct LogRow {
  int iteration = 0;
  std::string method;
  double classifier_loss = 0.0;
  double domain_loss = 0.0;
  double lr = 0.0;
  std::size_t n_pseudo_pos = 0;
  std::size_t n_pseudo_neg = 0;
};

/// Target batch as drawn, with the pseudo-labels in force when it was drawn.
struct TargetBatchEvent {
  int iteration = 0;
  std::span<const std::size_t> indices;
  std::span<const PseudoLabel> labels;  // empty when the target batch is unbalanced
};

struct TrainHooks {
  std::function<void(const LogRow&)> on_log;
  std::function<void(int iteration, const PseudoLabelState&)> on_refresh;
  std::function<void(const TargetBatchEvent&)> on_target_batch;
  std::function<void(int iteration, const model::DomainNet&)> on_domain_step;
};

/// Iterations per epoch when each batch holds batch_size/2 negatives.
std::size_t iterations_per_epoch(std::size_t n_negatives, int batch_size);

/// Supervised training with balanced batches. An epoch visits every
/// negative once; the learning rate drops after `high_lr_epochs`.
std::vector<LogRow> train_source(model::PatchNet& net, const candidates::PatchPool& source,
                                 const SourceTrainConfig& config, std::uint64_t seed,
                                 const TrainHooks& hooks = {});

/// One discriminator update on fixed features (source -> 1, target -> 0).
/// Returns the loss before the update.
double discriminator_step(model::DomainNet& disc, const grad::Tensor& source_features,
                          const grad::Tensor& target_features, grad::OptimizerState& opt);

/// One critic update raising mean(critic(source)) - mean(critic(target)),
/// then weight clipping. Returns the objective before the update.
double critic_step(model::DomainNet& critic, const grad::Tensor& source_features,
                   const grad::Tensor& target_features, grad::OptimizerState& opt,
                   double clip_c);

/// mean(critic(source)) - mean(critic(target)) without recording.
double critic_objective(const model::DomainNet& critic, const grad::Tensor& source_features,
                        const grad::Tensor& target_features);

std::vector<LogRow> adapt_revgrad(model::PatchNet& net, const candidates::PatchPool& source,
                                  const candidates::TargetPool& target, const AdaptPlan& plan,
                                  std::uint64_t seed, const TrainHooks& hooks = {});

/// Returns target extractor + the source head. `source_net` stays untouched.
model::PatchNet adapt_adda(const model::PatchNet& source_net, const candidates::PatchPool& source,
                           const candidates::TargetPool& target, const AdaptPlan& plan,
                           std::uint64_t seed, std::vector<LogRow>* log = nullptr,
                           const TrainHooks& hooks = {});

std::vector<LogRow> adapt_wdgrl(model::PatchNet& net, const candidates::PatchPool& source,
                                const candidates::TargetPool& target, const AdaptPlan& plan,
                                std::uint64_t seed, const TrainHooks& hooks = {});

std::vector<LogRow> finetune_supervised(model::PatchNet& net,
                                        const candidates::PatchPool& labeled_target,
                                        const AdaptPlan& plan, std::uint64_t seed,
                                        const TrainHooks& hooks = {});

struct AdaptResult {
  model::PatchNet net;
  std::vector<LogRow> log;
};

/// Dispatches on plan.method. `labeled_target` is needed only for
/// SUPERVISED_FT.
AdaptResult run_adaptation(const model::PatchNet& source_net, const candidates::PatchPool& source,
                           const candidates::TargetPool& target,
                           const candidates::PatchPool* labeled_target, const AdaptPlan& plan,
                           std::uint64_t seed, const TrainHooks& hooks = {});

/// CSV with a leading '# ' provenance line when `provenance` is non-empty.
void write_log(const std::filesystem::path& path, const std::vector<LogRow>& rows,
               const std::string& provenance = {});

}  // namespace dmda::train
