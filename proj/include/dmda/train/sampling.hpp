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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dmda/candidates/patch_pool.hpp"
#include "dmda/model/patch_net.hpp"
#include "dmda/rng.hpp"

namespace dmda::train {

struct BalancedBatch {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

/// batch_size/2 draws from each pool: without replacement when the pool is
/// large enough, with replacement otherwise.
BalancedBatch balanced_batch(std::span<const std::size_t> positives,
                             std::span<const std::size_t> negatives, int batch_size, Rng& rng);

/// k draws from `pool`, distinct when pool.size() >= k.
std::vector<std::size_t> sample_indices(std::span<const std::size_t> pool, std::size_t k,
                                        Rng& rng);

enum class PseudoLabel : std::int8_t { kNegative = 0, kPositive = 1, kDiscarded = 2 };

struct PseudoLabelState {
  std::vector<double> scores;
  std::vector<PseudoLabel> labels;
  int last_refresh_iteration = -1;

  std::vector<std::size_t> indices_with(PseudoLabel label) const;
  std::size_t count(PseudoLabel label) const;
};

/// Eval-mode probabilities for every patch in the pool, in pool order.
std::vector<double> score_patches(model::PatchNet& net, const candidates::PatchPool& pool,
                                  std::size_t chunk = 256);

/// Positive iff score >= threshold. When a class would end up empty the
/// `min_per_class` most extreme patches are moved into it.
PseudoLabelState pseudo_labels_from_scores(std::vector<double> scores, int iteration,
                                           double threshold = 0.5,
                                           std::size_t min_per_class = 0);

/// Per positive exam, its top_k scores become positive and the rest are
/// discarded; every patch of a negative exam is negative.
PseudoLabelState exam_weak_labels_from_scores(std::vector<double> scores,
                                              const candidates::TargetPool& target, int top_k,
                                              int iteration);

PseudoLabelState refresh_pseudo_labels(model::PatchNet& net, const candidates::TargetPool& target,
                                       int iteration, double threshold = 0.5,
                                       std::size_t min_per_class = 0);

PseudoLabelState refresh_exam_weak_labels(model::PatchNet& net,
                                          const candidates::TargetPool& target, int top_k,
                                          int iteration);

}  // namespace dmda::train
