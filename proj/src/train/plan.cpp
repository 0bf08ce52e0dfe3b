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

#include "dmda/train/plan.hpp"

#include "dmda/error.hpp"

namespace dmda::train {

std::string method_name(Method m) {
  switch (m) {
    case Method::kNone: return "NONE";
    case Method::kRevGrad: return "REVGRAD";
    case Method::kAdda: return "ADDA";
    case Method::kWdgrl: return "WDGRL";
    case Method::kSupervisedFt: return "SUPERVISED_FT";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (auto m : {Method::kNone, Method::kRevGrad, Method::kAdda, Method::kWdgrl,
                 Method::kSupervisedFt}) {
    if (method_name(m) == name) return m;
  }
  fail(ErrorCode::kInvalidArgument,
       "unknown method '" + name + "' (expected NONE, REVGRAD, ADDA, WDGRL or SUPERVISED_FT)");
}

std::string balancing_name(Balancing b) {
  switch (b) {
    case Balancing::kNone: return "none";
    case Balancing::kPseudo: return "pseudo";
    case Balancing::kPseudoExam: return "pseudo_exam";
  }
  return "?";
}

Balancing parse_balancing(const std::string& name) {
  for (auto b : {Balancing::kNone, Balancing::kPseudo, Balancing::kPseudoExam}) {
    if (balancing_name(b) == name) return b;
  }
  fail(ErrorCode::kInvalidArgument,
       "unknown balancing '" + name + "' (expected none, pseudo or pseudo_exam)");
}

void SourceTrainConfig::validate() const {
  require(epochs >= 1, ErrorCode::kInvalidArgument, "source training: epochs must be >= 1");
  require(high_lr_epochs >= 0, ErrorCode::kInvalidArgument,
          "source training: high_lr_epochs must be >= 0");
  require(lr > 0.0 && late_lr > 0.0, ErrorCode::kInvalidArgument,
          "source training: learning rates must be > 0");
  require(batch_size >= 2 && batch_size % 2 == 0, ErrorCode::kInvalidArgument,
          "source training: batch_size must be even and >= 2");
  augmentation.validate();
}

void to_json(nlohmann::json& j, const SourceTrainConfig& c) {
  j = {{"epochs", c.epochs},          {"high_lr_epochs", c.high_lr_epochs},
       {"lr", c.lr},                  {"late_lr", c.late_lr},
       {"batch_size", c.batch_size},  {"augment", c.augment},
       {"augmentation", c.augmentation}};
}

void from_json(const nlohmann::json& j, SourceTrainConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.high_lr_epochs = j.value("high_lr_epochs", c.high_lr_epochs);
  c.lr = j.value("lr", c.lr);
  c.late_lr = j.value("late_lr", c.late_lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.augment = j.value("augment", c.augment);
  if (j.contains("augmentation")) c.augmentation = j.at("augmentation").get<AugmentConfig>();
}

AdaptPlan AdaptPlan::defaults(Method method, Balancing balancing) {
  AdaptPlan p;
  p.method = method;
  p.balancing = balancing;
  if (method == Method::kWdgrl) {
    p.lambda_domain = 0.1;
    p.critic_steps = 5;
    p.domain_net.output = model::DomainOutput::kCritic;
  } else if (method == Method::kAdda) {
    p.critic_steps = 1;
  }
  return p;
}

std::string AdaptPlan::name() const {
  std::string n = method_name(method);
  if (balancing == Balancing::kPseudo) n += "-P";
  if (balancing == Balancing::kPseudoExam) n += "-PE";
  return n;
}

void AdaptPlan::validate() const {
  const std::string who = "plan " + name() + ": ";
  require(iterations >= 0, ErrorCode::kInvalidArgument, who + "iterations must be >= 0");
  require(rebalance_interval >= 1, ErrorCode::kInvalidArgument,
          who + "rebalance_interval must be >= 1");
  require(batch_size >= 2 && batch_size % 2 == 0, ErrorCode::kInvalidArgument,
          who + "batch_size must be even and >= 2");
  require(lr > 0.0, ErrorCode::kInvalidArgument, who + "lr must be > 0");
  require(momentum >= 0.0 && momentum < 1.0, ErrorCode::kInvalidArgument,
          who + "momentum must be in [0, 1)");
  require(lambda_domain >= 0.0 && grl_lambda >= 0.0, ErrorCode::kInvalidArgument,
          who + "domain weights must be >= 0");
  require(critic_steps >= 1, ErrorCode::kInvalidArgument,
          who + "critic_steps must be >= 1, got " + std::to_string(critic_steps));
  require(clip_c > 0.0, ErrorCode::kInvalidArgument, who + "clip_c must be > 0");
  require(top_k_exam >= 1, ErrorCode::kInvalidArgument, who + "top_k_exam must be >= 1");
  require(pseudo_threshold > 0.0 && pseudo_threshold < 1.0, ErrorCode::kInvalidArgument,
          who + "pseudo_threshold must be in (0, 1)");
  const bool adversarial =
      method == Method::kRevGrad || method == Method::kAdda || method == Method::kWdgrl;
  require(adversarial || balancing == Balancing::kNone, ErrorCode::kInvalidArgument,
          who + "balancing applies only to adversarial methods");
  if (method == Method::kWdgrl) {
    require(domain_net.output == model::DomainOutput::kCritic, ErrorCode::kInvalidArgument,
            who + "WDGRL needs a critic-output domain net");
  } else if (adversarial) {
    require(domain_net.output == model::DomainOutput::kProbability, ErrorCode::kInvalidArgument,
            who + "discriminator must have probability output");
  }
  domain_net.validate();
  augmentation.validate();
}

void to_json(nlohmann::json& j, const AdaptPlan& p) {
  j = {{"method", method_name(p.method)},
       {"balancing", balancing_name(p.balancing)},
       {"iterations", p.iterations},
       {"rebalance_interval", p.rebalance_interval},
       {"batch_size", p.batch_size},
       {"optimizer", p.optimizer == grad::OptimizerKind::kSgd ? "SGD" : "ADAM"},
       {"lr", p.lr},
       {"momentum", p.momentum},
       {"lambda_domain", p.lambda_domain},
       {"grl_lambda", p.grl_lambda},
       {"critic_steps", p.critic_steps},
       {"clip_c", p.clip_c},
       {"top_k_exam", p.top_k_exam},
       {"pseudo_threshold", p.pseudo_threshold},
       {"domain_net", p.domain_net},
       {"augment", p.augment},
       {"augmentation", p.augmentation},
       {"seeds", p.seeds}};
}

void from_json(const nlohmann::json& j, AdaptPlan& p) {
  p = AdaptPlan::defaults(parse_method(j.at("method").get<std::string>()),
                          parse_balancing(j.value("balancing", std::string("none"))));
  p.iterations = j.value("iterations", p.iterations);
  p.rebalance_interval = j.value("rebalance_interval", p.rebalance_interval);
  p.batch_size = j.value("batch_size", p.batch_size);
  if (j.contains("optimizer")) {
    const auto opt = j.at("optimizer").get<std::string>();
    require(opt == "SGD" || opt == "ADAM", ErrorCode::kInvalidArgument,
            "plan: optimizer must be SGD or ADAM, got '" + opt + "'");
    p.optimizer = opt == "SGD" ? grad::OptimizerKind::kSgd : grad::OptimizerKind::kAdam;
  }
  p.lr = j.value("lr", p.lr);
  p.momentum = j.value("momentum", p.momentum);
  p.lambda_domain = j.value("lambda_domain", p.lambda_domain);
  p.grl_lambda = j.value("grl_lambda", p.grl_lambda);
  p.critic_steps = j.value("critic_steps", p.critic_steps);
  p.clip_c = j.value("clip_c", p.clip_c);
  p.top_k_exam = j.value("top_k_exam", p.top_k_exam);
  p.pseudo_threshold = j.value("pseudo_threshold", p.pseudo_threshold);
  if (j.contains("domain_net")) {
    const auto output = p.domain_net.output;
    p.domain_net = j.at("domain_net").get<model::DomainNetConfig>();
    if (!j.at("domain_net").contains("output")) p.domain_net.output = output;
  }
  p.augment = j.value("augment", p.augment);
  if (j.contains("augmentation")) p.augmentation = j.at("augmentation").get<AugmentConfig>();
  p.seeds = j.value("seeds", p.seeds);
}

}  // namespace dmda::train
