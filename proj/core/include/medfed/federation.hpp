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
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medfed/data.hpp"
#include "medfed/model.hpp"
#include "medfed/protocol.hpp"
#include "medfed/trainer.hpp"

namespace medfed {

enum class AggregationMode { kWeighted, kUniform };
enum class TransportKind { kInProcess, kSocket };

const char* to_string(AggregationMode mode);
const char* to_string(TransportKind kind);

struct FederatedConfig {
  std::size_t num_clients = 5;
  std::size_t num_rounds = 30;
  ModelDims dims;
  TrainConfig train;
  AggregationMode aggregation = AggregationMode::kWeighted;
  TransportKind transport = TransportKind::kInProcess;
  /// Socket transport bind address; port 0 picks an ephemeral port.
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::uint64_t seed = 0;
  /// Train clients on separate threads within a round.
  bool parallel_clients = true;
  /// Writes round_{t}.fedw here after every round when set.
  std::optional<std::filesystem::path> checkpoint_dir;
  /// Rewrites the metrics CSV here after every round when set.
  std::optional<std::filesystem::path> metrics_path;

  void validate() const;
};

struct ClientRoundMetrics {
  int client_id = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  std::size_t sample_count = 0;
};

struct RoundMetrics {
  std::size_t round = 0;
  std::vector<ClientRoundMetrics> clients;
  /// The new global model re-evaluated on the pooled training splits.
  double global_train_loss = 0.0;
  /// The new global model evaluated on the pooled test splits.
  double global_test_loss = 0.0;
  /// Sample-weighted mean of the clients' own training losses.
  double mean_client_train_loss = 0.0;
};

struct GlobalState {
  std::size_t round_index = 0;
  ModelParams global_params;
  std::vector<RoundMetrics> history;
};

/// Per-update aggregation coefficients, in input order.
/// Weighted: |D_k| / Σ_j |D_j|; uniform: 1/K.
std::vector<double> aggregation_weights(std::span<const ClientUpdate> updates,
                                        AggregationMode mode);

/// Tensor-by-tensor linear combination of the client parameters with the
/// coefficients above, summed in ascending client_id order.
ModelParams aggregate(std::span<const ClientUpdate> updates,
                      AggregationMode mode = AggregationMode::kWeighted);

/// Training configuration a client uses in a given round: the shared
/// settings with a seed derived from (federation seed, client, round).
TrainConfig client_train_config(const FederatedConfig& config, int client_id,
                                std::size_t round);

/// Training and test splits of all clients, in client order.
std::vector<TokenizedPair> pooled_train(std::span<const ClientShard> shards);
std::vector<TokenizedPair> pooled_test(std::span<const ClientShard> shards);

/// Server side of the round protocol. Holds the global state, collects
/// PUSH_UPDATE messages for the open round and aggregates once every
/// expected client has reported. All methods are thread-safe.
class Coordinator {
 public:
  struct Options {
    /// Clients expected to report every round.
    std::vector<int> client_ids;
    std::size_t num_rounds = 1;
    AggregationMode mode = AggregationMode::kWeighted;
    std::vector<TokenizedPair> pooled_train;
    std::vector<TokenizedPair> pooled_test;
    std::optional<std::filesystem::path> checkpoint_dir;
    std::optional<std::filesystem::path> metrics_path;
  };

  Coordinator(GlobalState initial, Options options);

  /// Answers one request. Never throws for bad input; errors become ERROR
  /// replies.
  protocol::Message handle(const protocol::Message& request);

  GlobalState state() const;
  protocol::Status status() const;
  /// Drops every update received for the open round.
  void abort_round();

 private:
  protocol::Message handle_locked(const protocol::Message& request);
  void complete_round_locked();
  protocol::Status status_locked() const;

  mutable std::mutex mutex_;
  GlobalState state_;
  Options options_;
  std::vector<ClientUpdate> pending_;
};

/// One synchronous communication round: broadcast W_g, local training on
/// every shard, aggregation, pooled evaluation. Throws on any client failure
/// without aggregating.
GlobalState run_round(const GlobalState& state, std::span<const ClientShard> shards,
                      const FederatedConfig& config);

/// Full federation from freshly initialized weights, or from `resume` when
/// given. `on_round` observes each completed round.
GlobalState run_federation(
    const FederatedConfig& config, std::span<const ClientShard> shards,
    const std::function<void(const GlobalState&)>& on_round = {},
    std::optional<GlobalState> resume = std::nullopt);

/// Initial global weights for a configuration (the "init" seed stream).
ModelParams initial_global_params(const FederatedConfig& config);

/// Metrics CSV: header `round,client_id,train_loss,test_loss,sample_count`,
/// one row per client per round plus a `global` row per round.
void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const RoundMetrics> history);
std::string metrics_csv(std::span<const RoundMetrics> history);
std::vector<RoundMetrics> read_metrics_csv(const std::filesystem::path& path);

std::filesystem::path round_checkpoint_path(const std::filesystem::path& dir,
                                            std::size_t round);

}  // namespace medfed
