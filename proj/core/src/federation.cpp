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

#include "medfed/federation.hpp"

#include <exception>
#include <memory>
#include <thread>

#include "medfed/errors.hpp"
#include "medfed/rng.hpp"
#include "medfed/transport.hpp"

namespace medfed {

namespace {

using protocol::MessageKind;

Coordinator::Options coordinator_options(const FederatedConfig& config,
                                         std::span<const ClientShard> shards) {
  Coordinator::Options o;
  for (const ClientShard& s : shards) o.client_ids.push_back(s.client_id);
  o.num_rounds = config.num_rounds;
  o.mode = config.aggregation;
  o.pooled_train = pooled_train(shards);
  o.pooled_test = pooled_test(shards);
  o.checkpoint_dir = config.checkpoint_dir;
  o.metrics_path = config.metrics_path;
  return o;
}

// Owns the coordinator (and socket server) for a sequence of rounds.
class Session {
 public:
  Session(const FederatedConfig& config, std::span<const ClientShard> shards,
          GlobalState initial)
      : config_(config),
        shards_(shards),
        coordinator_(std::move(initial), coordinator_options(config, shards)) {
    if (config.transport == TransportKind::kSocket) {
      server_ = std::make_unique<SocketServer>(coordinator_, config.host, config.port);
      for (std::size_t i = 0; i < shards.size(); ++i) {
        endpoints_.push_back(
            std::make_unique<SocketEndpoint>(server_->host(), server_->port()));
      }
    } else {
      for (std::size_t i = 0; i < shards.size(); ++i) {
        endpoints_.push_back(std::make_unique<InProcessEndpoint>(coordinator_));
      }
    }
  }

  ~Session() {
    endpoints_.clear();
    if (server_) server_->stop();
  }

  void run_round() {
    const std::size_t round = coordinator_.status().completed_rounds + 1;
    std::vector<std::exception_ptr> failures(shards_.size());
    auto work = [&](std::size_t i) {
      try {
        client_round(i, round);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    };
    if (config_.parallel_clients && shards_.size() > 1) {
      std::vector<std::thread> threads;
      threads.reserve(shards_.size());
      for (std::size_t i = 0; i < shards_.size(); ++i) threads.emplace_back(work, i);
      for (auto& t : threads) t.join();
    } else {
      for (std::size_t i = 0; i < shards_.size(); ++i) {
        work(i);
        if (failures[i]) break;
      }
    }
    for (std::size_t i = 0; i < failures.size(); ++i) {
      if (!failures[i]) continue;
      coordinator_.abort_round();
      rethrow_attributed(failures[i], shards_[i].client_id, round);
    }
    if (coordinator_.status().completed_rounds != round) {
      coordinator_.abort_round();
      throw ContractError("round " + std::to_string(round) +
                          " did not complete after every client reported");
    }
  }

  GlobalState state() const { return coordinator_.state(); }

 private:
  void client_round(std::size_t i, std::size_t round) {
    const ClientShard& shard = shards_[i];
    Endpoint& ep = *endpoints_[i];
    const auto r32 = static_cast<std::uint32_t>(round);
    const protocol::Message reply =
        ep.exchange(protocol::make_get_global({r32, shard.client_id}));
    expect_reply(reply, MessageKind::kGlobalParams);
    const protocol::GlobalParams global = protocol::parse_global_params(reply);
    const ClientUpdate update =
        local_train(global.params, shard,
                    client_train_config(config_, shard.client_id, round), round);
    expect_reply(ep.exchange(protocol::make_push_update(r32, update)),
                 MessageKind::kAck);
  }

  [[noreturn]] static void rethrow_attributed(const std::exception_ptr& failure,
                                              int client_id, std::size_t round) {
    const std::string where =
        "round " + std::to_string(round) + ", client " + std::to_string(client_id) + ": ";
    try {
      std::rethrow_exception(failure);
    } catch (const DivergenceError&) {
      throw;  // already attributed by local_train
    } catch (const TransportError& e) {
      throw TransportError(e.kind(), where + e.what());
    } catch (const DecodeError& e) {
      throw DecodeError(e.kind(), where + e.what());
    } catch (const ContractError& e) {
      throw ContractError(where + e.what());
    }
  }

  const FederatedConfig& config_;
  std::span<const ClientShard> shards_;
  Coordinator coordinator_;
  std::unique_ptr<SocketServer> server_;
  std::vector<std::unique_ptr<Endpoint>> endpoints_;
};

void check_shards(const FederatedConfig& config, std::span<const ClientShard> shards) {
  if (shards.size() != config.num_clients) {
    throw ConfigError("expected " + std::to_string(config.num_clients) +
                      " client shards, got " + std::to_string(shards.size()));
  }
}

}  // namespace

ModelParams initial_global_params(const FederatedConfig& config) {
  return init_params(config.dims, derive_seed(config.seed, "init"));
}

GlobalState run_round(const GlobalState& state, std::span<const ClientShard> shards,
                      const FederatedConfig& config) {
  config.validate();
  check_shards(config, shards);
  FederatedConfig one = config;
  one.num_rounds = std::max(config.num_rounds, state.round_index + 1);
  Session session(one, shards, state);
  session.run_round();
  return session.state();
}

GlobalState run_federation(const FederatedConfig& config,
                           std::span<const ClientShard> shards,
                           const std::function<void(const GlobalState&)>& on_round,
                           std::optional<GlobalState> resume) {
  config.validate();
  check_shards(config, shards);
  GlobalState initial;
  if (resume) {
    initial = std::move(*resume);
    if (dims_of(initial.global_params) != config.dims) {
      throw ConfigError("resume state dimensions differ from the configuration");
    }
  } else {
    initial.global_params = initial_global_params(config);
  }
  if (initial.round_index >= config.num_rounds) return initial;

  Session session(config, shards, std::move(initial));
  for (;;) {
    session.run_round();
    GlobalState state = session.state();
    if (on_round) on_round(state);
    if (state.round_index >= config.num_rounds) return state;
  }
}

}  // namespace medfed
