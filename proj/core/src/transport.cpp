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

#include "medfed/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "medfed/errors.hpp"
#include "medfed/federation.hpp"

namespace medfed {

namespace {

using protocol::Message;
using protocol::MessageKind;
using TKind = TransportError::Kind;

enum class IoStatus { kOk, kEof, kTimeout, kError };

struct IoResult {
  IoStatus status = IoStatus::kOk;
  std::size_t transferred = 0;
  int error = 0;
};

IoResult read_full(int fd, std::uint8_t* buf, std::size_t n) {
  IoResult res;
  while (res.transferred < n) {
    const ssize_t got = ::recv(fd, buf + res.transferred, n - res.transferred, 0);
    if (got > 0) {
      res.transferred += static_cast<std::size_t>(got);
    } else if (got == 0) {
      res.status = IoStatus::kEof;
      return res;
    } else if (errno == EINTR) {
      continue;
    } else {
      res.error = errno;
      res.status = (errno == EAGAIN || errno == EWOULDBLOCK) ? IoStatus::kTimeout
                                                             : IoStatus::kError;
      return res;
    }
  }
  return res;
}

IoResult write_full(int fd, std::span<const std::uint8_t> bytes) {
  IoResult res;
  while (res.transferred < bytes.size()) {
    const ssize_t sent = ::send(fd, bytes.data() + res.transferred,
                                bytes.size() - res.transferred, MSG_NOSIGNAL);
    if (sent >= 0) {
      res.transferred += static_cast<std::size_t>(sent);
    } else if (errno == EINTR) {
      continue;
    } else {
      res.error = errno;
      res.status = (errno == EAGAIN || errno == EWOULDBLOCK) ? IoStatus::kTimeout
                                                             : IoStatus::kError;
      return res;
    }
  }
  return res;
}

std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &result) != 0 || !result) {
    throw TransportError(TKind::kConnectionRefused, "cannot resolve host " + host);
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(result->ai_addr)->sin_addr;
  ::freeaddrinfo(result);
  return addr;
}

std::string errno_text(int err) { return std::strerror(err); }

}  // namespace

Message InProcessEndpoint::exchange(const Message& request) {
  // Round-trip through the frame codec so both transports see the same bytes.
  return protocol::decode_frame(
      protocol::encode_frame(coordinator_.handle(
          protocol::decode_frame(protocol::encode_frame(request)))));
}

void expect_reply(const Message& reply, MessageKind kind) {
  if (reply.kind == kind) return;
  if (reply.kind == MessageKind::kError) {
    const protocol::ErrorReply err = protocol::parse_error(reply);
    throw TransportError(TKind::kRemote, std::string("coordinator replied ") +
                                             protocol::to_string(err.code) +
                                             ": " + err.message);
  }
  throw TransportError(TKind::kRemote, std::string("expected ") +
                                           protocol::to_string(kind) +
                                           " reply, got " +
                                           protocol::to_string(reply.kind));
}

SocketEndpoint::SocketEndpoint(std::string host, std::uint16_t port,
                               std::chrono::milliseconds timeout)
    : host_(std::move(host)), port_(port), timeout_(timeout) {}

SocketEndpoint::~SocketEndpoint() { close(); }

void SocketEndpoint::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void SocketEndpoint::ensure_connected() {
  if (fd_ >= 0) return;
  const sockaddr_in addr = resolve(host_, port_);
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) {
    throw TransportError(TKind::kConnectionRefused,
                         "socket(): " + errno_text(errno));
  }
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout_.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout_.count() % 1000) * 1000);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int err = errno;
    ::close(fd);
    if (err == ETIMEDOUT || err == EAGAIN || err == EINPROGRESS) {
      throw TransportError(TKind::kTimeout, "connect to " + host_ + ":" +
                                                std::to_string(port_) +
                                                " timed out");
    }
    throw TransportError(TKind::kConnectionRefused,
                         "connect to " + host_ + ":" + std::to_string(port_) +
                             ": " + errno_text(err));
  }
  fd_ = fd;
}

void SocketEndpoint::send_raw(std::span<const std::uint8_t> bytes) {
  ensure_connected();
  const IoResult res = write_full(fd_, bytes);
  if (res.status != IoStatus::kOk) {
    close();
    throw TransportError(res.status == IoStatus::kTimeout ? TKind::kTimeout
                                                          : TKind::kDisconnected,
                         "send failed: " + errno_text(res.error));
  }
}

Message SocketEndpoint::read_reply() {
  std::uint8_t header[protocol::kFrameHeaderBytes];
  auto fail = [this](const IoResult& res, const char* what) {
    close();
    if (res.status == IoStatus::kTimeout) {
      throw TransportError(TKind::kTimeout, std::string(what) + " timed out");
    }
    throw TransportError(TKind::kDisconnected,
                         std::string(what) + ": connection closed by peer");
  };
  IoResult res = read_full(fd_, header, sizeof(header));
  if (res.status != IoStatus::kOk) fail(res, "reading reply header");
  const std::uint32_t length = le32(header);
  if (length == 0 || length > protocol::kMaxFrameBytes) {
    close();
    throw TransportError(TKind::kMalformedFrame,
                         "reply frame length " + std::to_string(length));
  }
  Bytes frame(protocol::kFrameHeaderBytes + length);
  std::copy_n(header, sizeof(header), frame.begin());
  res = read_full(fd_, frame.data() + sizeof(header), length);
  if (res.status != IoStatus::kOk) fail(res, "reading reply body");
  try {
    return protocol::decode_frame(frame);
  } catch (const DecodeError& e) {
    throw TransportError(TKind::kMalformedFrame,
                         std::string("malformed reply: ") + e.what());
  }
}

Message SocketEndpoint::exchange_raw(std::span<const std::uint8_t> bytes) {
  send_raw(bytes);
  return read_reply();
}

Message SocketEndpoint::exchange(const Message& request) {
  return exchange_raw(protocol::encode_frame(request));
}

SocketServer::SocketServer(Coordinator& coordinator, std::string host,
                           std::uint16_t port)
    : coordinator_(coordinator), host_(std::move(host)) {
  const sockaddr_in addr = resolve(host_, port);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw IoError("socket(): " + errno_text(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    const int err = errno;
    ::close(listen_fd_);
    throw IoError("cannot listen on " + host_ + ":" + std::to_string(port) +
                  ": " + errno_text(err));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

SocketServer::~SocketServer() { stop(); }

void SocketServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) {
    if (t.joinable()) t.join();
  }
}

std::vector<SocketServer::ConnectionError> SocketServer::connection_errors() const {
  std::lock_guard lock(mutex_);
  return errors_;
}

void SocketServer::record_error(std::size_t connection, int client_id,
                                std::string what) {
  std::lock_guard lock(mutex_);
  errors_.push_back({connection, client_id, std::move(what)});
}

void SocketServer::accept_loop() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;  // listener closed
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    const std::size_t id = ++accepted_;
    std::lock_guard lock(mutex_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    open_fds_.push_back(fd);
    workers_.emplace_back([this, fd, id] { serve(fd, id); });
  }
}

void SocketServer::serve(int fd, std::size_t connection) {
  int client_id = -1;
  auto reply = [&](const Message& m) {
    const IoResult res = write_full(fd, protocol::encode_frame(m));
    if (res.status != IoStatus::kOk) {
      record_error(connection, client_id, "reply failed: " + errno_text(res.error));
      return false;
    }
    return true;
  };

  while (!stopping_) {
    std::uint8_t header[protocol::kFrameHeaderBytes];
    IoResult res = read_full(fd, header, sizeof(header));
    if (res.status == IoStatus::kEof && res.transferred == 0) break;  // clean close
    if (res.status != IoStatus::kOk) {
      if (!stopping_) {
        record_error(connection, client_id,
                     "disconnected mid-frame after " +
                         std::to_string(res.transferred) + " header bytes");
      }
      break;
    }
    const std::uint32_t length = le32(header);
    if (length == 0) {
      if (!reply(protocol::make_error(protocol::ErrorCode::kMalformed,
                                      "empty frame"))) {
        break;
      }
      continue;
    }
    if (length > protocol::kMaxFrameBytes) {
      // The stream cannot be resynchronized past an absurd length.
      record_error(connection, client_id,
                   "oversized frame of " + std::to_string(length) + " bytes");
      reply(protocol::make_error(protocol::ErrorCode::kMalformed,
                                 "frame length exceeds limit"));
      break;
    }
    Bytes body(length);
    res = read_full(fd, body.data(), length);
    if (res.status != IoStatus::kOk) {
      if (res.transferred >= 9 &&
          (body[0] == static_cast<std::uint8_t>(MessageKind::kGetGlobal) ||
           body[0] == static_cast<std::uint8_t>(MessageKind::kPushUpdate))) {
        client_id = static_cast<int>(le32(body.data() + 5));
      }
      if (!stopping_) {
        record_error(connection, client_id,
                     "disconnected mid-frame after " +
                         std::to_string(res.transferred) + " of " +
                         std::to_string(length) + " body bytes");
      }
      break;
    }
    if (!protocol::is_known_kind(body[0])) {
      if (!reply(protocol::make_error(
              protocol::ErrorCode::kMalformed,
              "unknown message kind " + std::to_string(body[0])))) {
        break;
      }
      continue;
    }
    Message request{static_cast<MessageKind>(body[0]),
                    Bytes(body.begin() + 1, body.end())};
    if ((request.kind == MessageKind::kGetGlobal ||
         request.kind == MessageKind::kPushUpdate) &&
        request.payload.size() >= 8) {
      client_id = static_cast<int>(le32(request.payload.data() + 4));
    }
    if (!reply(coordinator_.handle(request))) break;
  }

  std::lock_guard lock(mutex_);
  open_fds_.erase(std::remove(open_fds_.begin(), open_fds_.end(), fd),
                  open_fds_.end());
  ::close(fd);
}

}  // namespace medfed
