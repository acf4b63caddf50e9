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

#include <filesystem>

#include <gtest/gtest.h>

#include "medfed/errors.hpp"
#include "medfed/federation.hpp"
#include "medfed/serialization.hpp"
#include "test_support.hpp"

namespace medfed {
namespace {

using testing::small_federation;

FederatedConfig config_for(const testing::SmallFederation& fed, std::size_t rounds) {
  FederatedConfig c;
  c.num_clients = fed.shards.size();
  c.num_rounds = rounds;
  c.dims = testing::dims_for(fed.vocab);
  c.train.local_epochs = 2;
  c.train.batch_size = 8;
  c.train.learning_rate = 1e-2;
  c.seed = 11;
  return c;
}

TEST(RunRoundTest, SingleClientGlobalEqualsItsUpdate) {
  const auto fed = small_federation({20}, 1);
  const FederatedConfig c = config_for(fed, 1);
  GlobalState s;
  s.global_params = initial_global_params(c);
  const GlobalState next = run_round(s, fed.shards, c);
  const ClientUpdate u =
      local_train(s.global_params, fed.shards[0], client_train_config(c, fed.shards[0].client_id, 1), 1);
  EXPECT_TRUE(next.global_params == u.params);
  EXPECT_EQ(next.round_index, 1u);
  ASSERT_EQ(next.history.size(), 1u);
  EXPECT_EQ(next.history[0].clients[0].train_loss, u.mean_train_loss);
}

TEST(RunRoundTest, GlobalIsAggregateOfBroadcastUpdates) {
  const auto fed = small_federation({20, 30, 10}, 2);
  const FederatedConfig c = config_for(fed, 1);
  GlobalState s;
  s.global_params = initial_global_params(c);
  const GlobalState next = run_round(s, fed.shards, c);
  std::vector<ClientUpdate> updates;
  for (const ClientShard& shard : fed.shards) {
    updates.push_back(local_train(s.global_params, shard, client_train_config(c, shard.client_id, 1), 1));
  }
  EXPECT_TRUE(next.global_params == aggregate(updates));
  EXPECT_EQ(next.history[0].global_test_loss, evaluate(next.global_params, pooled_test(fed.shards)));
  EXPECT_EQ(next.history[0].global_train_loss,
            evaluate(next.global_params, pooled_train(fed.shards)));
  EXPECT_TRUE(all_finite(next.global_params));
}

TEST(RunRoundTest, ShardCountMustMatch) {
  const auto fed = small_federation({20, 20}, 3);
  FederatedConfig c = config_for(fed, 1);
  c.num_clients = 3;
  GlobalState s;
  s.global_params = initial_global_params(config_for(fed, 1));
  EXPECT_THROW(run_round(s, fed.shards, c), ConfigError);
}

TEST(RunFederationTest, OneRoundGivesOneHistoryRow) {
  const auto fed = small_federation({20, 20}, 4);
  EXPECT_EQ(run_federation(config_for(fed, 1), fed.shards).history.size(), 1u);
  FederatedConfig zero = config_for(fed, 1);
  zero.num_rounds = 0;
  EXPECT_THROW(run_federation(zero, fed.shards), ConfigError);
}

TEST(RunFederationTest, RoundsObservedInOrder) {
  const auto fed = small_federation({15, 15, 15}, 5);
  std::vector<std::size_t> seen;
  const GlobalState s = run_federation(config_for(fed, 3), fed.shards,
                                       [&](const GlobalState& g) { seen.push_back(g.round_index); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3}));
  ASSERT_EQ(s.history.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(s.history[r].round, r + 1);
    EXPECT_EQ(s.history[r].clients.size(), 3u);
  }
}

TEST(RunFederationTest, DeterministicAndThreadingInvariant) {
  const auto fed = small_federation({20, 12}, 6);
  FederatedConfig c = config_for(fed, 2);
  const GlobalState a = run_federation(c, fed.shards);
  const GlobalState b = run_federation(c, fed.shards);
  c.parallel_clients = false;
  const GlobalState serial = run_federation(c, fed.shards);
  EXPECT_EQ(serialize_params(a.global_params), serialize_params(b.global_params));
  EXPECT_TRUE(serial.global_params == a.global_params);
  EXPECT_EQ(metrics_csv(a.history), metrics_csv(serial.history));
}

TEST(RunFederationTest, SocketMatchesInProcessBitwise) {
  const auto fed = small_federation({20, 12, 16}, 7);
  FederatedConfig c = config_for(fed, 2);
  const GlobalState local = run_federation(c, fed.shards);
  c.transport = TransportKind::kSocket;
  const GlobalState remote = run_federation(c, fed.shards);
  EXPECT_EQ(serialize_params(remote.global_params), serialize_params(local.global_params));
  EXPECT_EQ(metrics_csv(remote.history), metrics_csv(local.history));
}

TEST(RunFederationTest, CheckpointsAndMetricsPerRound) {
  const auto fed = small_federation({20, 20}, 8);
  testing::TempDir dir;
  FederatedConfig c = config_for(fed, 2);
  c.checkpoint_dir = dir / "ckpt";
  c.metrics_path = dir / "metrics.csv";
  const GlobalState s = run_federation(c, fed.shards);
  EXPECT_TRUE(std::filesystem::exists(round_checkpoint_path(dir / "ckpt", 1)));
  EXPECT_TRUE(load_checkpoint(round_checkpoint_path(dir / "ckpt", 2)) == s.global_params);
  const auto rows = read_metrics_csv(dir / "metrics.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].global_test_loss, s.history[1].global_test_loss);
}

TEST(RunFederationTest, ResumeMatchesUninterruptedRun) {
  const auto fed = small_federation({20, 14}, 9);
  const FederatedConfig full = config_for(fed, 3);
  const GlobalState straight = run_federation(full, fed.shards);
  const GlobalState first = run_federation(config_for(fed, 1), fed.shards);
  const GlobalState resumed = run_federation(full, fed.shards, {}, first);
  EXPECT_TRUE(resumed.global_params == straight.global_params);
  EXPECT_EQ(resumed.round_index, 3u);
  EXPECT_EQ(metrics_csv(resumed.history), metrics_csv(straight.history));
  const GlobalState done = run_federation(full, fed.shards, {}, straight);
  EXPECT_EQ(done.round_index, 3u);
}

TEST(RunFederationTest, DivergenceNamesClientAndRound) {
  auto fed = small_federation({20, 20}, 10);
  FederatedConfig c = config_for(fed, 2);
  c.train.optimizer = OptimizerKind::kSgd;
  c.train.learning_rate = 1e300;
  c.train.grad_clip_norm.reset();
  try {
    run_federation(c, fed.shards);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    ASSERT_TRUE(e.client_id().has_value());
    EXPECT_TRUE(*e.client_id() == 1 || *e.client_id() == 2);
    EXPECT_EQ(e.round(), 1u);
  }
}

TEST(AggregationModeTest, UniformDiffersFromWeightedWithUnequalCounts) {
  const auto fed = small_federation({40, 10}, 12);
  FederatedConfig c = config_for(fed, 1);
  const GlobalState weighted = run_federation(c, fed.shards);
  c.aggregation = AggregationMode::kUniform;
  const GlobalState uniform = run_federation(c, fed.shards);
  EXPECT_FALSE(weighted.global_params == uniform.global_params);
}

}  // namespace
}  // namespace medfed
