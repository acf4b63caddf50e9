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

#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "gradient_cases.hpp"
#include "medfed/errors.hpp"
#include "medfed/federation.hpp"
#include "medfed/serialization.hpp"
#include "test_support.hpp"

namespace medfed {
namespace {

using testing::random_params;
using testing::tiny_dims;

ClientUpdate update(int id, std::size_t samples, ModelParams params) {
  ClientUpdate u;
  u.client_id = id;
  u.sample_count = samples;
  u.params = std::move(params);
  return u;
}

ModelParams filled(double v) {
  ModelParams p = zero_params(tiny_dims());
  p.for_each([&](const std::string&, Tensor& t) { t = Tensor::filled(t.shape(), v); });
  return p;
}

std::vector<double> flat(const ModelParams& p) {
  std::vector<double> out;
  for (const Tensor& t : testing::flatten(p)) out.insert(out.end(), t.values().begin(), t.values().end());
  return out;
}

// Weighted mean over flattened parameters with counts as plain doubles.
std::vector<double> oracle(std::span<const ClientUpdate> updates, bool uniform) {
  double total = 0.0;
  for (const ClientUpdate& u : updates) total += uniform ? 1.0 : static_cast<double>(u.sample_count);
  std::vector<double> out(flat(updates[0].params).size(), 0.0);
  for (const ClientUpdate& u : updates) {
    const double w = (uniform ? 1.0 : static_cast<double>(u.sample_count)) / total;
    const std::vector<double> v = flat(u.params);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += w * v[i];
  }
  return out;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(AggregateTest, TableSizesWithScalarWeights) {
  const std::vector<std::size_t> sizes{1000, 1000, 1000, 1000, 920};
  std::vector<ClientUpdate> updates;
  for (int k = 0; k < 5; ++k) updates.push_back(update(k + 1, sizes[k], filled(k + 1.0)));
  const ModelParams g = aggregate(updates);
  for (double v : flat(g)) EXPECT_NEAR(v, 14600.0 / 4920.0, 1e-12);
  EXPECT_NEAR(14600.0 / 4920.0, 2.9675, 1e-4);
}

TEST(AggregateTest, EqualCountsGiveArithmeticMean) {
  std::vector<ClientUpdate> updates{update(1, 10, filled(0.0)), update(2, 10, filled(2.0))};
  for (double v : flat(aggregate(updates))) EXPECT_EQ(v, 1.0);
}

TEST(AggregateTest, WeightsSumToOne) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ClientUpdate> updates;
    const int k = 1 + static_cast<int>(rng() % 7);
    for (int i = 0; i < k; ++i) updates.push_back(update(i, 1 + rng() % 5000, ModelParams{}));
    for (AggregationMode mode : {AggregationMode::kWeighted, AggregationMode::kUniform}) {
      const auto w = aggregation_weights(updates, mode);
      EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
    }
  }
}

TEST(AggregateTest, MatchesFlattenedOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ClientUpdate> updates;
    for (int i = 0; i < 5; ++i) {
      updates.push_back(update(i + 1, 1 + rng() % 2000, random_params(tiny_dims(), rng(), -3, 3)));
    }
    EXPECT_LT(max_diff(flat(aggregate(updates)), oracle(updates, false)), 1e-12);
    EXPECT_LT(max_diff(flat(aggregate(updates, AggregationMode::kUniform)), oracle(updates, true)),
              1e-12);
  }
}

TEST(AggregateTest, IdenticalUpdatesReturnSharedParams) {
  const ModelParams p = random_params(tiny_dims(), 3);
  std::vector<ClientUpdate> updates;
  for (int i = 0; i < 5; ++i) updates.push_back(update(i, 100 + 37 * i, p));
  EXPECT_LT(max_diff(flat(aggregate(updates)), flat(p)), 1e-12);
}

TEST(AggregateTest, SingleUpdateIsExact) {
  const ModelParams p = random_params(tiny_dims(), 4, -10, 10);
  std::vector<ClientUpdate> updates{update(3, 77, p)};
  EXPECT_TRUE(aggregate(updates) == p);
  EXPECT_TRUE(aggregate(updates, AggregationMode::kUniform) == p);
}

TEST(AggregateTest, OrderOfInputDoesNotMatter) {
  std::vector<ClientUpdate> updates;
  for (int i = 0; i < 5; ++i) updates.push_back(update(i + 1, 100 * (i + 1), random_params(tiny_dims(), 10 + i)));
  const ModelParams a = aggregate(updates);
  std::reverse(updates.begin(), updates.end());
  EXPECT_TRUE(aggregate(updates) == a);
  std::rotate(updates.begin(), updates.begin() + 2, updates.end());
  EXPECT_TRUE(aggregate(updates) == a);
}

TEST(AggregateTest, UniformEqualsWeightedForEqualCounts) {
  std::vector<ClientUpdate> updates;
  for (int i = 0; i < 4; ++i) updates.push_back(update(i, 250, random_params(tiny_dims(), 20 + i)));
  EXPECT_LT(max_diff(flat(aggregate(updates)), flat(aggregate(updates, AggregationMode::kUniform))),
            1e-12);
}

TEST(AggregateTest, ResultLiesWithinClientRange) {
  std::vector<ClientUpdate> updates;
  for (int i = 0; i < 4; ++i) updates.push_back(update(i, 1 + 300 * i, random_params(tiny_dims(), 30 + i)));
  const std::vector<double> g = flat(aggregate(updates));
  std::vector<std::vector<double>> cs;
  for (const ClientUpdate& u : updates) cs.push_back(flat(u.params));
  for (std::size_t i = 0; i < g.size(); ++i) {
    double lo = cs[0][i], hi = cs[0][i];
    for (const auto& c : cs) {
      lo = std::min(lo, c[i]);
      hi = std::max(hi, c[i]);
    }
    EXPECT_GE(g[i], lo - 1e-15);
    EXPECT_LE(g[i], hi + 1e-15);
  }
}

TEST(AggregateTest, Errors) {
  EXPECT_THROW(aggregate({}), ContractError);
  std::vector<ClientUpdate> zero{update(1, 0, filled(1.0))};
  EXPECT_THROW(aggregate(zero), ContractError);
  std::vector<ClientUpdate> mismatch{update(1, 5, filled(1.0)),
                                     update(2, 5, random_params(tiny_dims(7, 6), 1))};
  try {
    aggregate(mismatch);
    FAIL() << "expected AggregationError";
  } catch (const AggregationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("client 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("client 1"), std::string::npos) << msg;
  }
}

TEST(ClientConfigTest, SeedDependsOnClientAndRound) {
  FederatedConfig c;
  c.seed = 5;
  EXPECT_EQ(client_train_config(c, 1, 2).seed, client_train_config(c, 1, 2).seed);
  EXPECT_NE(client_train_config(c, 1, 2).seed, client_train_config(c, 2, 2).seed);
  EXPECT_NE(client_train_config(c, 1, 2).seed, client_train_config(c, 1, 3).seed);
}

TEST(FederatedConfigTest, ValidateRejectsZeroCounts) {
  FederatedConfig c;
  c.dims = tiny_dims();
  EXPECT_NO_THROW(c.validate());
  c.num_rounds = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.num_rounds = 1;
  c.num_clients = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(MetricsCsvTest, RoundTripIncludesGlobalRows) {
  std::vector<RoundMetrics> history(2);
  for (std::size_t r = 0; r < 2; ++r) {
    history[r].round = r + 1;
    history[r].clients = {{1, 0.1 / 3, 1.25, 800}, {2, 2.0 / 7, 3.5, 736}};
    history[r].global_train_loss = 0.7 + r;
    history[r].global_test_loss = 1.0 / 3 + r;
    history[r].mean_client_train_loss = (0.1 / 3 * 800 + 2.0 / 7 * 736) / 1536;
  }
  const std::string text = metrics_csv(history);
  EXPECT_EQ(text.rfind("round,client_id,train_loss,test_loss,sample_count\n", 0), 0u);
  EXPECT_NE(text.find("1,global,"), std::string::npos);
  testing::TempDir dir;
  write_metrics_csv(dir / "m.csv", history);
  const auto back = read_metrics_csv(dir / "m.csv");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(back[r].round, r + 1);
    ASSERT_EQ(back[r].clients.size(), 2u);
    EXPECT_EQ(back[r].clients[0].train_loss, history[r].clients[0].train_loss);
    EXPECT_EQ(back[r].clients[1].sample_count, 736u);
    EXPECT_EQ(back[r].global_train_loss, history[r].global_train_loss);
    EXPECT_EQ(back[r].global_test_loss, history[r].global_test_loss);
    EXPECT_NEAR(back[r].mean_client_train_loss, history[r].mean_client_train_loss, 1e-15);
  }
}

TEST(MetricsCsvTest, BadFilesRejected) {
  testing::TempDir dir;
  EXPECT_THROW(read_metrics_csv(dir / "absent.csv"), IoError);
  const std::string bad = "nope\n";
  write_file_atomic(dir / "bad.csv",
                    std::span(reinterpret_cast<const std::uint8_t*>(bad.data()), bad.size()));
  EXPECT_THROW(read_metrics_csv(dir / "bad.csv"), FormatError);
}

TEST(PoolTest, ConcatenatesInClientOrder) {
  const auto fed = testing::small_federation({10, 20}, 1);
  const auto train = pooled_train(fed.shards);
  const auto test = pooled_test(fed.shards);
  EXPECT_EQ(train.size(), 8u + 16u);
  EXPECT_EQ(test.size(), 2u + 4u);
  EXPECT_EQ(train.front(), fed.shards[0].train.front());
  EXPECT_EQ(test.back(), fed.shards[1].test.back());
}

}  // namespace
}  // namespace medfed
