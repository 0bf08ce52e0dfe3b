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

#include "dmda/train/sampling.hpp"

#include <algorithm>
#include <numeric>

#include "dmda/error.hpp"
#include "dmda/grad/tape.hpp"

namespace dmda::train {

using candidates::PatchPool;
using candidates::TargetPool;

std::vector<std::size_t> sample_indices(std::span<const std::size_t> pool, std::size_t k,
                                        Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(k);
  if (pool.size() >= k) {
    // Partial Fisher-Yates over a scratch copy.
    std::vector<std::size_t> scratch(pool.begin(), pool.end());
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + rng.below(scratch.size() - i);
      std::swap(scratch[i], scratch[j]);
      out.push_back(scratch[i]);
    }
  } else {
    for (std::size_t i = 0; i < k; ++i) out.push_back(pool[rng.below(pool.size())]);
  }
  return out;
}

BalancedBatch balanced_batch(std::span<const std::size_t> positives,
                             std::span<const std::size_t> negatives, int batch_size, Rng& rng) {
  require(batch_size >= 2 && batch_size % 2 == 0, ErrorCode::kInvalidArgument,
          "balanced_batch: batch_size must be even and >= 2, got " + std::to_string(batch_size));
  require(!positives.empty(), ErrorCode::kState, "balanced_batch: positive pool is empty");
  require(!negatives.empty(), ErrorCode::kState, "balanced_batch: negative pool is empty");
  const auto half = static_cast<std::size_t>(batch_size / 2);
  BalancedBatch b;
  b.positives = sample_indices(positives, half, rng);
  b.negatives = sample_indices(negatives, half, rng);
  return b;
}

std::vector<std::size_t> PseudoLabelState::indices_with(PseudoLabel label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) out.push_back(i);
  }
  return out;
}

std::size_t PseudoLabelState::count(PseudoLabel label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::vector<double> score_patches(model::PatchNet& net, const PatchPool& pool, std::size_t chunk) {
  require(pool.side == net.config().input_side, ErrorCode::kShape,
          "score_patches: patch side " + std::to_string(pool.side) + " != net input side " +
              std::to_string(net.config().input_side));
  require(chunk >= 1, ErrorCode::kInvalidArgument, "score_patches: chunk must be >= 1");
  grad::NoGradScope no_grad;
  std::vector<double> scores;
  scores.reserve(pool.size());
  const auto side = static_cast<std::size_t>(pool.side);
  for (std::size_t begin = 0; begin < pool.size(); begin += chunk) {
    const std::size_t n = std::min(chunk, pool.size() - begin);
    auto batch = grad::Tensor::empty({n, 1, side, side});
    std::copy_n(pool.patch(begin), n * pool.patch_size(), batch.data().data());
    const auto p = net.predict(batch, model::Mode::kEval);
    scores.insert(scores.end(), p.data().begin(), p.data().end());
  }
  return scores;
}

PseudoLabelState pseudo_labels_from_scores(std::vector<double> scores, int iteration,
                                           double threshold, std::size_t min_per_class) {
  PseudoLabelState s;
  s.labels.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    s.labels[i] = scores[i] >= threshold ? PseudoLabel::kPositive : PseudoLabel::kNegative;
  }
  const std::size_t n = scores.size();
  const std::size_t k = std::min(min_per_class, n / 2);
  if (k > 0) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    if (s.count(PseudoLabel::kPositive) == 0) {
      for (std::size_t i = 0; i < k; ++i) s.labels[order[i]] = PseudoLabel::kPositive;
    } else if (s.count(PseudoLabel::kNegative) == 0) {
      for (std::size_t i = 0; i < k; ++i) s.labels[order[n - 1 - i]] = PseudoLabel::kNegative;
    }
  }
  s.scores = std::move(scores);
  s.last_refresh_iteration = iteration;
  return s;
}

PseudoLabelState exam_weak_labels_from_scores(std::vector<double> scores, const TargetPool& target,
                                              int top_k, int iteration) {
  const auto& pool = target.patches;
  require(scores.size() == pool.size(), ErrorCode::kShape,
          "exam_weak_labels: score count does not match the pool");
  require(top_k >= 1, ErrorCode::kInvalidArgument, "exam_weak_labels: top_k must be >= 1");
  require(target.has_exam_labels(), ErrorCode::kState,
          "exam_weak_labels: target pool carries no exam-level labels");

  std::map<std::string, std::vector<std::size_t>> by_exam;
  for (std::size_t i = 0; i < pool.size(); ++i) by_exam[pool.exam_ids[i]].push_back(i);

  PseudoLabelState s;
  s.labels.assign(pool.size(), PseudoLabel::kDiscarded);
  for (auto& [exam, members] : by_exam) {
    const auto it = target.exam_labels.find(exam);
    require(it != target.exam_labels.end(), ErrorCode::kState,
            "exam_weak_labels: missing exam-level label for exam '" + exam + "'");
    if (!it->second) {
      for (auto i : members) s.labels[i] = PseudoLabel::kNegative;
      continue;
    }
    std::stable_sort(members.begin(), members.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const auto k = std::min(members.size(), static_cast<std::size_t>(top_k));
    for (std::size_t r = 0; r < k; ++r) s.labels[members[r]] = PseudoLabel::kPositive;
  }
  s.scores = std::move(scores);
  s.last_refresh_iteration = iteration;
  return s;
}

PseudoLabelState refresh_pseudo_labels(model::PatchNet& net, const TargetPool& target,
                                       int iteration, double threshold,
                                       std::size_t min_per_class) {
  return pseudo_labels_from_scores(score_patches(net, target.patches), iteration, threshold,
                                   min_per_class);
}

PseudoLabelState refresh_exam_weak_labels(model::PatchNet& net, const TargetPool& target,
                                          int top_k, int iteration) {
  require(target.has_exam_labels(), ErrorCode::kState,
          "refresh_exam_weak_labels: target pool carries no exam-level labels");
  return exam_weak_labels_from_scores(score_patches(net, target.patches), target, top_k,
                                      iteration);
}

}  // namespace dmda::train
