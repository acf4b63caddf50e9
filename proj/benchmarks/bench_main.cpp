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

#include <benchmark/benchmark.h>

#include <random>

#include "medfed/autodiff.hpp"
#include "medfed/data.hpp"
#include "medfed/federation.hpp"
#include "medfed/model.hpp"
#include "medfed/serialization.hpp"
#include "medfed/tensor.hpp"
#include "medfed/trainer.hpp"

namespace {

using namespace medfed;

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t({r, c});
  for (double& v : t.data()) v = u(rng);
  return t;
}

ModelDims desk_dims() {
  ModelDims d;
  d.vocab_in = 136;
  d.vocab_out = 45;
  d.embed_dim = 32;
  d.hidden_dim = 128;
  d.attention_dim = 128;
  return d;
}

std::vector<TokenizedPair> synthetic_pairs(std::size_t n) {
  const auto pairs = synthesize_dataset(41, 132, n, 7);
  const Vocab vocab = build_vocab(pairs);
  return tokenize_all(pairs, vocab);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_matrix(64, n, 1);
  const Tensor b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::matmul(a, b));
  state.counters["flops"] = benchmark::Counter(
      2.0 * 64 * static_cast<double>(n * n), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Matmul)->Arg(128)->Arg(1024);

void BM_GruStep(benchmark::State& state) {
  const ModelParams p = init_params(desk_dims(), 3);
  const Tensor x = random_matrix(1, 32, 4).reshaped({32});
  const Tensor h = random_matrix(1, 128, 5).reshaped({128});
  for (auto _ : state) benchmark::DoNotOptimize(gru_step(p.encoder_gru, x, h));
}
BENCHMARK(BM_GruStep);

void BM_TrainBatch(benchmark::State& state) {
  ModelDims dims = desk_dims();
  const auto data = synthetic_pairs(64);
  dims.vocab_in = 136;
  ModelParams params = init_params(dims, 9);
  TrainConfig config;
  config.batch_size = 64;
  Optimizer opt(config, dims);
  for (auto _ : state) {
    EpochResult r = train_epoch(params, data, config, opt, 0);
    benchmark::DoNotOptimize(r.mean_loss);
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_TrainBatch)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  const ModelParams params = init_params(desk_dims(), 9);
  const auto data = synthetic_pairs(256);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(params, data));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

void BM_Aggregate(benchmark::State& state) {
  const ModelDims dims = desk_dims();
  std::vector<ClientUpdate> updates;
  for (int k = 0; k < 5; ++k) {
    updates.push_back({k + 1, init_params(dims, static_cast<std::uint64_t>(k)),
                       k == 4 ? 920u : 1000u, 0.0, 0.0});
  }
  for (auto _ : state) benchmark::DoNotOptimize(aggregate(updates));
}
BENCHMARK(BM_Aggregate)->Unit(benchmark::kMillisecond);

void BM_SerializeRoundTrip(benchmark::State& state) {
  const ModelParams params = init_params(desk_dims(), 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(deserialize_params(serialize_params(params)));
  }
}
BENCHMARK(BM_SerializeRoundTrip)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
