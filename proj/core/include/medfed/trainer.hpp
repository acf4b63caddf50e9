// Copyright 2026 The medfed Authors. All Rights Reserved.
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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "medfed/data.hpp"
#include "medfed/model.hpp"

namespace medfed {

enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
  std::size_t local_epochs = 5;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Global-norm gradient clipping; disabled when empty.
  std::optional<double> grad_clip_norm = 5.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError on non-positive sizes or rates.
  void validate() const;
};

/// Optimizer state for one parameter set. Adam moments start at zero.
class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const ModelDims& dims);

  /// In-place update of `params` with `grads`.
  void step(ModelParams& params, const ModelParams& grads);
  std::size_t steps_taken() const { return steps_; }

 private:
  TrainConfig config_;
  ModelParams first_moment_;
  ModelParams second_moment_;
  std::size_t steps_ = 0;
};

double global_norm(const ModelParams& grads);
/// Rescales grads to `max_norm` when their global norm exceeds it.
/// Returns the norm before clipping.
double clip_global_norm(ModelParams& grads, double max_norm);

/// Teacher-forced loss of a batch: each pair contributes its mean
/// per-position cross-entropy multiplied by `pair_weights[i]`.
ad::Var batch_sequence_loss(const ParamVars& params,
                            std::span<const TokenizedPair* const> pairs,
                            std::span<const double> pair_weights);

/// Mean cross-entropy over the predicted positions target_ids[1..T-1].
double sequence_loss(const ModelParams& params, const TokenizedPair& pair);

/// Mean sequence_loss over `pairs`, evaluated in batches.
double evaluate(const ModelParams& params, std::span<const TokenizedPair> pairs,
                std::size_t batch_size = 256);

struct EpochResult {
  ModelParams params;
  double mean_loss = 0.0;
};

/// One seeded-shuffled pass of minibatch steps. `epoch` selects the shuffle
/// sub-stream. Throws DivergenceError naming the batch on a non-finite loss.
EpochResult train_epoch(const ModelParams& params,
                        std::span<const TokenizedPair> train,
                        const TrainConfig& config, Optimizer& optimizer,
                        std::size_t epoch = 0);

struct ClientUpdate {
  int client_id = 0;
  ModelParams params;
  std::size_t sample_count = 0;
  double mean_train_loss = 0.0;
  double mean_test_loss = 0.0;
};

/// Copies the global weights, runs config.local_epochs epochs on the
/// shard's training split with fresh optimizer state, and evaluates on the
/// shard's test split. With zero epochs the reported train loss is an
/// evaluation of the unchanged weights.
ClientUpdate local_train(const ModelParams& global_params,
                         const ClientShard& shard, const TrainConfig& config,
                         std::optional<std::size_t> round = std::nullopt);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double own_test_loss = 0.0;
  double pooled_test_loss = 0.0;
};

struct CentralizedResult {
  ModelParams params;
  std::vector<EpochMetrics> history;
};

/// Single-client baseline: `epochs` epochs on the shard with one optimizer,
/// logging own-shard and pooled test losses after each epoch. With zero
/// epochs a single evaluation-only row (epoch 0) is produced.
CentralizedResult train_centralized(
    const ModelParams& init, const ClientShard& shard,
    std::span<const TokenizedPair> pooled_test, std::size_t epochs,
    const TrainConfig& config,
    const std::function<void(const EpochMetrics&, const ModelParams&)>&
        on_epoch = {});

}  // namespace medfed
