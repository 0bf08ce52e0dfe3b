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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmda/grad/optim.hpp"
#include "dmda/model/domain_net.hpp"
#include "dmda/train/augment.hpp"

namespace dmda::train {

enum class Method { kNone, kRevGrad, kAdda, kWdgrl, kSupervisedFt };
enum class Balancing { kNone, kPseudo, kPseudoExam };

std::string method_name(Method m);
Method parse_method(const std::string& name);
std::string balancing_name(Balancing b);
Balancing parse_balancing(const std::string& name);

/// Supervised source training schedule.
struct SourceTrainConfig {
  int epochs = 10;
  int high_lr_epochs = 6;  // epochs 1..high_lr_epochs use `lr`, the rest `late_lr`
  double lr = 0.001;
  double late_lr = 0.0002;
  int batch_size = 64;
  bool augment = true;
  AugmentConfig augmentation;

  void validate() const;
  double lr_for_epoch(int epoch) const { return epoch <= high_lr_epochs ? lr : late_lr; }
};

void to_json(nlohmann::json& j, const SourceTrainConfig& c);
void from_json(const nlohmann::json& j, SourceTrainConfig& c);

struct AdaptPlan {
  Method method = Method::kNone;
  Balancing balancing = Balancing::kNone;
  int iterations = 1000;
  int rebalance_interval = 200;
  int batch_size = 64;
  grad::OptimizerKind optimizer = grad::OptimizerKind::kSgd;
  double lr = 0.01;
  double momentum = 0.0;
  double lambda_domain = 1.0;
  double grl_lambda = 1.0;      // gradient-reversal scale
  int critic_steps = 5;         // critic (or discriminator) updates per feature update
  double clip_c = 0.01;
  int top_k_exam = 4;
  double pseudo_threshold = 0.5;
  model::DomainNetConfig domain_net;
  bool augment = true;
  AugmentConfig augmentation;
  std::vector<std::uint64_t> seeds;

  /// Defaults for the method, before any config overrides.
  static AdaptPlan defaults(Method method, Balancing balancing = Balancing::kNone);

  /// METHOD, METHOD-P or METHOD-PE.
  std::string name() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const AdaptPlan& p);
void from_json(const nlohmann::json& j, AdaptPlan& p);

}  // namespace dmda::train
