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

#include "medfed/errors.hpp"
#include "medfed/federation.hpp"
#include "medfed/serialization.hpp"

namespace medfed {

namespace {

using protocol::ErrorCode;
using protocol::Message;
using protocol::MessageKind;

std::string client_name(int id) { return "client " + std::to_string(id); }

}  // namespace

Coordinator::Coordinator(GlobalState initial, Options options)
    : state_(std::move(initial)), options_(std::move(options)) {
  if (options_.client_ids.empty()) throw ConfigError("coordinator: no clients");
  if (options_.num_rounds < 1) throw ConfigError("coordinator: no rounds");
  std::sort(options_.client_ids.begin(), options_.client_ids.end());
  if (std::adjacent_find(options_.client_ids.begin(), options_.client_ids.end()) !=
      options_.client_ids.end()) {
    throw ConfigError("coordinator: duplicate client ids");
  }
  if (state_.round_index > options_.num_rounds) {
    throw ConfigError("coordinator: state is past the final round");
  }
}

Message Coordinator::handle(const Message& request) {
  std::lock_guard lock(mutex_);
  try {
    return handle_locked(request);
  } catch (const DecodeError& e) {
    return protocol::make_error(ErrorCode::kMalformed, e.what());
  } catch (const std::exception& e) {
    return protocol::make_error(ErrorCode::kInternal, e.what());
  }
}

Message Coordinator::handle_locked(const Message& request) {
  const auto completed = static_cast<std::uint32_t>(state_.round_index);
  const bool finished = state_.round_index >= options_.num_rounds;
  auto known = [&](int id) {
    return std::binary_search(options_.client_ids.begin(),
                              options_.client_ids.end(), id);
  };

  switch (request.kind) {
    case MessageKind::kGetStatus:
      if (!request.payload.empty()) {
        return protocol::make_error(ErrorCode::kMalformed,
                                    "GET_STATUS carries no payload");
      }
      return protocol::make_status(status_locked());

    case MessageKind::kGetGlobal: {
      const protocol::GetGlobal req = protocol::parse_get_global(request);
      if (!known(req.client_id)) {
        return protocol::make_error(ErrorCode::kUnknownClient,
                                    client_name(req.client_id) + " is not enrolled");
      }
      if (req.round <= completed) {
        return protocol::make_error(
            ErrorCode::kStaleRound, "round " + std::to_string(req.round) +
                                        " already completed");
      }
      if (finished) {
        return protocol::make_error(ErrorCode::kFinished, "federation finished after " +
                                                              std::to_string(completed) +
                                                              " rounds");
      }
      if (req.round > completed + 1) return protocol::make_not_ready(completed);
      return protocol::make_global_params(req.round, state_.global_params);
    }

    case MessageKind::kPushUpdate: {
      protocol::PushUpdate req = protocol::parse_push_update(request);
      const int id = req.update.client_id;
      if (!known(id)) {
        return protocol::make_error(ErrorCode::kUnknownClient,
                                    client_name(id) + " is not enrolled");
      }
      if (req.round <= completed) {
        return protocol::make_error(ErrorCode::kStaleRound,
                                    client_name(id) + ": round " +
                                        std::to_string(req.round) +
                                        " already completed");
      }
      if (finished) {
        return protocol::make_error(ErrorCode::kFinished, "federation finished");
      }
      if (req.round > completed + 1) {
        return protocol::make_error(ErrorCode::kRejectedUpdate,
                                    client_name(id) + ": round " +
                                        std::to_string(req.round) + " is not open");
      }
      const bool duplicate = std::any_of(pending_.begin(), pending_.end(),
                                         [&](const ClientUpdate& u) {
                                           return u.client_id == id;
                                         });
      if (duplicate) {
        return protocol::make_error(ErrorCode::kDuplicate,
                                    client_name(id) + " already reported round " +
                                        std::to_string(req.round));
      }
      if (req.update.sample_count == 0) {
        return protocol::make_error(ErrorCode::kRejectedUpdate,
                                    client_name(id) + " reported zero samples");
      }
      if (dims_of(req.update.params) != dims_of(state_.global_params)) {
        return protocol::make_error(ErrorCode::kRejectedUpdate,
                                    client_name(id) +
                                        " sent parameters of different dimensions");
      }
      pending_.push_back(std::move(req.update));
      if (pending_.size() == options_.client_ids.size()) complete_round_locked();
      return protocol::make_ack(req.round);
    }

    case MessageKind::kGlobalParams:
    case MessageKind::kAck:
    case MessageKind::kStatus:
    case MessageKind::kNotReady:
    case MessageKind::kError:
      break;
  }
  return protocol::make_error(ErrorCode::kMalformed,
                              std::string("coordinator does not accept ") +
                                  protocol::to_string(request.kind));
}

void Coordinator::complete_round_locked() {
  std::vector<ClientUpdate> updates;
  updates.swap(pending_);
  std::sort(updates.begin(), updates.end(),
            [](const ClientUpdate& a, const ClientUpdate& b) {
              return a.client_id < b.client_id;
            });

  GlobalState next = state_;
  next.global_params = aggregate(updates, options_.mode);
  if (!all_finite(next.global_params)) {
    throw NumericError("aggregated parameters are not finite");
  }
  next.round_index = state_.round_index + 1;

  RoundMetrics metrics;
  metrics.round = next.round_index;
  double num = 0.0, den = 0.0;
  for (const ClientUpdate& u : updates) {
    metrics.clients.push_back(
        {u.client_id, u.mean_train_loss, u.mean_test_loss, u.sample_count});
    num += u.mean_train_loss * static_cast<double>(u.sample_count);
    den += static_cast<double>(u.sample_count);
  }
  metrics.mean_client_train_loss = num / den;
  metrics.global_train_loss = options_.pooled_train.empty()
                                  ? metrics.mean_client_train_loss
                                  : evaluate(next.global_params, options_.pooled_train);
  metrics.global_test_loss = options_.pooled_test.empty()
                                 ? 0.0
                                 : evaluate(next.global_params, options_.pooled_test);
  next.history.push_back(std::move(metrics));

  if (options_.checkpoint_dir) {
    std::filesystem::create_directories(*options_.checkpoint_dir);
    save_checkpoint(round_checkpoint_path(*options_.checkpoint_dir, next.round_index),
                    next.global_params);
  }
  if (options_.metrics_path) write_metrics_csv(*options_.metrics_path, next.history);
  state_ = std::move(next);
}

GlobalState Coordinator::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

protocol::Status Coordinator::status() const {
  std::lock_guard lock(mutex_);
  return status_locked();
}

protocol::Status Coordinator::status_locked() const {
  protocol::Status s;
  s.completed_rounds = static_cast<std::uint32_t>(state_.round_index);
  s.total_rounds = static_cast<std::uint32_t>(options_.num_rounds);
  s.expected_clients = static_cast<std::uint32_t>(options_.client_ids.size());
  for (const ClientUpdate& u : pending_) s.received_clients.push_back(u.client_id);
  std::sort(s.received_clients.begin(), s.received_clients.end());
  return s;
}

void Coordinator::abort_round() {
  std::lock_guard lock(mutex_);
  pending_.clear();
}

}  // namespace medfed
