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

#include "medfed/trainer.hpp"

#include <cmath>
#include <numeric>

#include "medfed/errors.hpp"
#include "medfed/rng.hpp"

namespace medfed {

namespace {

template <class F>
void zip(ModelParams& a, const ModelParams& b, F&& f) {
  std::vector<const Tensor*> rhs;
  b.for_each([&](const std::string&, const Tensor& t) { rhs.push_back(&t); });
  std::size_t i = 0;
  a.for_each([&](const std::string&, Tensor& t) { f(t, *rhs[i++]); });
}

double forward_loss(const ModelParams& params,
                    std::span<const TokenizedPair* const> pairs,
                    std::span<const double> weights) {
  ad::Graph graph;
  const ParamVars p = bind(graph, params, false);
  return batch_sequence_loss(p, pairs, weights).value().item();
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and non-negative");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_epsilon > 0.0)) {
    throw ConfigError("invalid adam hyper-parameters");
  }
  if (grad_clip_norm && !(*grad_clip_norm > 0.0)) {
    throw ConfigError("grad_clip_norm must be positive");
  }
}

Optimizer::Optimizer(const TrainConfig& config, const ModelDims& dims)
    : config_(config) {
  config_.validate();
  if (config_.optimizer == OptimizerKind::kAdam) {
    first_moment_ = zero_params(dims);
    second_moment_ = zero_params(dims);
  }
}

void Optimizer::step(ModelParams& params, const ModelParams& grads) {
  ++steps_;
  const double lr = config_.learning_rate;
  if (config_.optimizer == OptimizerKind::kSgd) {
    zip(params, grads, [&](Tensor& p, const Tensor& g) {
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
    });
    return;
  }
  const double b1 = config_.adam_beta1;
  const double b2 = config_.adam_beta2;
  const double eps = config_.adam_epsilon;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  zip(first_moment_, grads, [&](Tensor& m, const Tensor& g) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = b1 * m[i] + (1 - b1) * g[i];
  });
  zip(second_moment_, grads, [&](Tensor& v, const Tensor& g) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
    }
  });
  std::vector<const Tensor*> m, v;
  first_moment_.for_each([&](const std::string&, const Tensor& t) { m.push_back(&t); });
  second_moment_.for_each([&](const std::string&, const Tensor& t) { v.push_back(&t); });
  std::size_t k = 0;
  params.for_each([&](const std::string&, Tensor& p) {
    const Tensor& mk = *m[k];
    const Tensor& vk = *v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] -= lr * (mk[i] / c1) / (std::sqrt(vk[i] / c2) + eps);
    }
    ++k;
  });
}

double global_norm(const ModelParams& grads) {
  double sq = 0.0;
  grads.for_each([&](const std::string&, const Tensor& t) {
    for (double g : t.data()) sq += g * g;
  });
  return std::sqrt(sq);
}

double clip_global_norm(ModelParams& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    grads.for_each([&](const std::string&, Tensor& t) {
      for (double& g : t.data()) g *= factor;
    });
  }
  return norm;
}

ad::Var batch_sequence_loss(const ParamVars& params,
                            std::span<const TokenizedPair* const> pairs,
                            std::span<const double> pair_weights) {
  if (pairs.empty()) throw ContractError("sequence loss of an empty batch");
  if (pair_weights.size() != pairs.size()) {
    throw ContractError("one weight per pair required");
  }
  const std::size_t batch = pairs.size();
  std::vector<std::vector<TokenId>> inputs;
  inputs.reserve(batch);
  std::size_t steps = 0;
  for (const TokenizedPair* pair : pairs) {
    if (pair->target_ids.size() < 2) {
      throw ContractError("target sequence needs at least 2 tokens");
    }
    inputs.push_back(pair->input_ids);
    steps = std::max(steps, pair->target_ids.size() - 1);
  }

  const EncodedBatch enc = encode_batch(params, inputs);
  ad::Var hidden = enc.final_state;
  ad::Var total;
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<TokenId> prev(batch, kPadId);
    std::vector<std::size_t> targets(batch, kPadId);
    std::vector<double> weights(batch, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      const auto& target = pairs[b]->target_ids;
      const std::size_t predicted = target.size() - 1;
      if (t < predicted) {
        prev[b] = target[t];
        targets[b] = target[t + 1];
        weights[b] = pair_weights[b] / static_cast<double>(predicted);
      }
    }
    const DecodeStepVars step = decode_step_batch(params, prev, hidden, enc);
    hidden = step.hidden;
    ad::Var ce = ad::cross_entropy(step.logits, std::move(targets), std::move(weights));
    total = t == 0 ? ce : ad::add(total, ce);
  }
  return total;
}

double sequence_loss(const ModelParams& params, const TokenizedPair& pair) {
  const TokenizedPair* pairs[] = {&pair};
  const double weights[] = {1.0};
  return forward_loss(params, pairs, weights);
}

double evaluate(const ModelParams& params, std::span<const TokenizedPair> pairs,
                std::size_t batch_size) {
  if (pairs.empty()) throw ContractError("evaluate: no pairs");
  if (batch_size == 0) throw ContractError("evaluate: batch_size must be positive");
  // Batches of similar length waste little work on padding.
  std::vector<const TokenizedPair*> sorted;
  sorted.reserve(pairs.size());
  for (const TokenizedPair& p : pairs) sorted.push_back(&p);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TokenizedPair* a, const TokenizedPair* b) {
                     return a->input_ids.size() < b->input_ids.size();
                   });
  double total = 0.0;
  for (std::size_t start = 0; start < sorted.size(); start += batch_size) {
    const std::size_t end = std::min(sorted.size(), start + batch_size);
    const std::vector<const TokenizedPair*> batch(
        sorted.begin() + static_cast<std::ptrdiff_t>(start),
        sorted.begin() + static_cast<std::ptrdiff_t>(end));
    const std::vector<double> weights(batch.size(), 1.0);
    total += forward_loss(params, batch, weights);
  }
  return total / static_cast<double>(pairs.size());
}

EpochResult train_epoch(const ModelParams& params,
                        std::span<const TokenizedPair> train,
                        const TrainConfig& config, Optimizer& optimizer,
                        std::size_t epoch) {
  config.validate();
  if (train.empty()) throw ContractError("train_epoch: empty training set");
  EpochResult result{params, 0.0};

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(config.seed, "shuffle", epoch);
  std::shuffle(order.begin(), order.end(), rng);

  double loss_sum = 0.0;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < order.size();
       start += config.batch_size, ++batch_index) {
    const std::size_t end = std::min(order.size(), start + config.batch_size);
    std::vector<const TokenizedPair*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);
    const std::vector<double> weights(batch.size(),
                                      1.0 / static_cast<double>(batch.size()));

    ad::Graph graph;
    const ParamVars vars = bind(graph, result.params, true);
    double loss = 0.0;
    ModelParams grads;
    try {
      const ad::Var loss_var = batch_sequence_loss(vars, batch, weights);
      loss = loss_var.value().item();
      graph.backward(loss_var);
      grads = gradients(graph, vars);
    } catch (const NumericError& e) {
      throw DivergenceError("non-finite value in epoch " + std::to_string(epoch + 1) +
                                ", batch " + std::to_string(batch_index + 1) + ": " +
                                e.what(),
                            std::nullopt, std::nullopt, epoch + 1, batch_index + 1);
    }
    if (!std::isfinite(loss)) {
      throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch + 1) +
                                ", batch " + std::to_string(batch_index + 1),
                            std::nullopt, std::nullopt, epoch + 1, batch_index + 1);
    }
    if (config.grad_clip_norm) clip_global_norm(grads, *config.grad_clip_norm);
    optimizer.step(result.params, grads);
    if (!all_finite(result.params)) {
      throw DivergenceError("parameters became non-finite in epoch " +
                                std::to_string(epoch + 1) + ", batch " +
                                std::to_string(batch_index + 1),
                            std::nullopt, std::nullopt, epoch + 1, batch_index + 1);
    }
    loss_sum += loss * static_cast<double>(batch.size());
  }
  result.mean_loss = loss_sum / static_cast<double>(train.size());
  return result;
}

ClientUpdate local_train(const ModelParams& global_params,
                         const ClientShard& shard, const TrainConfig& config,
                         std::optional<std::size_t> round) {
  if (shard.train.empty()) {
    throw ContractError("client " + std::to_string(shard.client_id) +
                        " has no training data");
  }
  ClientUpdate update;
  update.client_id = shard.client_id;
  update.params = global_params;
  update.sample_count = shard.train.size();
  Optimizer optimizer(config, dims_of(global_params));
  try {
    for (std::size_t e = 0; e < config.local_epochs; ++e) {
      EpochResult r = train_epoch(update.params, shard.train, config, optimizer, e);
      update.params = std::move(r.params);
      update.mean_train_loss = r.mean_loss;
    }
  } catch (const DivergenceError& e) {
    std::string where = "client " + std::to_string(shard.client_id);
    if (round) where += ", round " + std::to_string(*round);
    throw DivergenceError(where + ": " + e.what(), shard.client_id, round,
                          e.epoch(), e.batch());
  }
  if (config.local_epochs == 0) {
    update.mean_train_loss = evaluate(update.params, shard.train);
  }
  update.mean_test_loss =
      shard.test.empty() ? 0.0 : evaluate(update.params, shard.test);
  return update;
}

CentralizedResult train_centralized(
    const ModelParams& init, const ClientShard& shard,
    std::span<const TokenizedPair> pooled_test, std::size_t epochs,
    const TrainConfig& config,
    const std::function<void(const EpochMetrics&, const ModelParams&)>& on_epoch) {
  if (shard.train.empty()) throw ContractError("centralized: empty training set");
  CentralizedResult result{init, {}};
  Optimizer optimizer(config, dims_of(init));
  auto record = [&](std::size_t epoch, double train_loss) {
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = train_loss;
    m.own_test_loss = shard.test.empty() ? 0.0 : evaluate(result.params, shard.test);
    m.pooled_test_loss =
        pooled_test.empty() ? 0.0 : evaluate(result.params, pooled_test);
    result.history.push_back(m);
    if (on_epoch) on_epoch(m, result.params);
  };
  if (epochs == 0) {
    record(0, evaluate(result.params, shard.train));
    return result;
  }
  for (std::size_t e = 0; e < epochs; ++e) {
    EpochResult r = train_epoch(result.params, shard.train, config, optimizer, e);
    result.params = std::move(r.params);
    record(e + 1, r.mean_loss);
  }
  return result;
}

}  // namespace medfed
