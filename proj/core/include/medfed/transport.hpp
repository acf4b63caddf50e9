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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "medfed/bytes.hpp"
#include "medfed/protocol.hpp"

namespace medfed {

class Coordinator;

/// Request/response channel to a coordinator.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  /// Sends one request and returns the reply. Throws TransportError.
  virtual protocol::Message exchange(const protocol::Message& request) = 0;
};

/// Direct invocation of a coordinator living in the same process.
class InProcessEndpoint final : public Endpoint {
 public:
  explicit InProcessEndpoint(Coordinator& coordinator) : coordinator_(coordinator) {}
  protocol::Message exchange(const protocol::Message& request) override;

 private:
  Coordinator& coordinator_;
};

/// Client side of the TCP transport. Connects lazily and keeps the
/// connection open across exchanges.
class SocketEndpoint final : public Endpoint {
 public:
  SocketEndpoint(std::string host, std::uint16_t port,
                 std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~SocketEndpoint() override;
  SocketEndpoint(const SocketEndpoint&) = delete;
  SocketEndpoint& operator=(const SocketEndpoint&) = delete;

  protocol::Message exchange(const protocol::Message& request) override;

  /// Sends arbitrary bytes and reads one reply frame (for protocol tests).
  protocol::Message exchange_raw(std::span<const std::uint8_t> bytes);
  /// Sends arbitrary bytes without waiting for a reply.
  void send_raw(std::span<const std::uint8_t> bytes);
  void close();

 private:
  void ensure_connected();
  protocol::Message read_reply();

  std::string host_;
  std::uint16_t port_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
};

/// Checks a reply's kind; ERROR replies and unexpected kinds become
/// TransportError(kRemote) carrying the server's message.
void expect_reply(const protocol::Message& reply, protocol::MessageKind kind);

/// TCP server dispatching frames to a Coordinator. One thread per
/// connection; the coordinator serializes state changes.
class SocketServer {
 public:
  struct ConnectionError {
    std::size_t connection = 0;
    int last_client_id = -1;
    std::string what;
  };

  SocketServer(Coordinator& coordinator, std::string host = "127.0.0.1",
               std::uint16_t port = 0);
  ~SocketServer();
  SocketServer(const SocketServer&) = delete;
  SocketServer& operator=(const SocketServer&) = delete;

  std::uint16_t port() const { return port_; }
  const std::string& host() const { return host_; }
  void stop();

  /// Connection-level failures seen so far (disconnects mid-frame,
  /// oversized frames, socket errors).
  std::vector<ConnectionError> connection_errors() const;
  std::size_t connections_accepted() const { return accepted_.load(); }

 private:
  void accept_loop();
  void serve(int fd, std::size_t connection);
  void record_error(std::size_t connection, int client_id, std::string what);

  Coordinator& coordinator_;
  std::string host_;
  std::uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> accepted_{0};
  std::thread acceptor_;

  mutable std::mutex mutex_;
  std::vector<std::thread> workers_;
  std::vector<int> open_fds_;
  std::vector<ConnectionError> errors_;
};

}  // namespace medfed
