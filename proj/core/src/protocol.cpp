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

#include "medfed/protocol.hpp"

#include "medfed/errors.hpp"
#include "medfed/serialization.hpp"

namespace medfed::protocol {

namespace {

using Kind = DecodeError::Kind;

void expect_kind(const Message& m, MessageKind kind) {
  if (m.kind != kind) {
    throw DecodeError(Kind::kMalformed, std::string("expected ") +
                                            to_string(kind) + " message, got " +
                                            to_string(m.kind));
  }
}

void expect_consumed(const ByteReader& r, MessageKind kind) {
  if (r.remaining() != 0) {
    throw DecodeError(Kind::kMalformed, std::to_string(r.remaining()) +
                                            " trailing bytes in " +
                                            to_string(kind) + " payload");
  }
}

Message build(MessageKind kind, Bytes payload) {
  return Message{kind, std::move(payload)};
}

}  // namespace

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::kGetGlobal: return "GET_GLOBAL";
    case MessageKind::kGlobalParams: return "GLOBAL_PARAMS";
    case MessageKind::kPushUpdate: return "PUSH_UPDATE";
    case MessageKind::kAck: return "ACK";
    case MessageKind::kGetStatus: return "GET_STATUS";
    case MessageKind::kStatus: return "STATUS";
    case MessageKind::kNotReady: return "NOT_READY";
    case MessageKind::kError: return "ERROR";
  }
  return "UNKNOWN";
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformed: return "MALFORMED";
    case ErrorCode::kStaleRound: return "STALE_ROUND";
    case ErrorCode::kDuplicate: return "DUPLICATE";
    case ErrorCode::kUnknownClient: return "UNKNOWN_CLIENT";
    case ErrorCode::kRejectedUpdate: return "REJECTED_UPDATE";
    case ErrorCode::kFinished: return "FINISHED";
    case ErrorCode::kInternal: return "INTERNAL";
  }
  return "UNKNOWN";
}

bool is_known_kind(std::uint8_t kind) {
  return kind >= static_cast<std::uint8_t>(MessageKind::kGetGlobal) &&
         kind <= static_cast<std::uint8_t>(MessageKind::kError);
}

Bytes encode_frame(const Message& message) {
  Bytes out;
  out.reserve(kFrameHeaderBytes + 1 + message.payload.size());
  ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(message.payload.size() + 1));
  w.u8(static_cast<std::uint8_t>(message.kind));
  w.raw(message.payload);
  return out;
}

Message decode_frame(std::span<const std::uint8_t> frame) {
  ByteReader r(frame);
  const std::uint32_t length = r.u32();
  if (length == 0 || length > kMaxFrameBytes) {
    throw DecodeError(Kind::kMalformed,
                      "invalid frame length " + std::to_string(length));
  }
  const std::uint8_t kind = r.u8();
  if (!is_known_kind(kind)) {
    throw DecodeError(Kind::kMalformed,
                      "unknown message kind " + std::to_string(kind));
  }
  const auto body = r.raw(length - 1);
  if (r.remaining() != 0) {
    throw DecodeError(Kind::kMalformed, "bytes after the end of the frame");
  }
  return Message{static_cast<MessageKind>(kind), Bytes(body.begin(), body.end())};
}

Message make_get_global(const GetGlobal& m) {
  Bytes p;
  ByteWriter w(p);
  w.u32(m.round);
  w.u32(static_cast<std::uint32_t>(m.client_id));
  return build(MessageKind::kGetGlobal, std::move(p));
}

Message make_global_params(std::uint32_t round, const ModelParams& params) {
  Bytes p;
  ByteWriter w(p);
  w.u32(round);
  w.raw(serialize_params(params));
  return build(MessageKind::kGlobalParams, std::move(p));
}

Message make_push_update(std::uint32_t round, const ClientUpdate& update) {
  Bytes p;
  ByteWriter w(p);
  w.u32(round);
  w.u32(static_cast<std::uint32_t>(update.client_id));
  w.u64(update.sample_count);
  w.f64(update.mean_train_loss);
  w.f64(update.mean_test_loss);
  w.raw(serialize_params(update.params));
  return build(MessageKind::kPushUpdate, std::move(p));
}

Message make_ack(std::uint32_t round) {
  Bytes p;
  ByteWriter(p).u32(round);
  return build(MessageKind::kAck, std::move(p));
}

Message make_get_status() { return build(MessageKind::kGetStatus, {}); }

Message make_status(const Status& status) {
  Bytes p;
  ByteWriter w(p);
  w.u32(status.completed_rounds);
  w.u32(status.total_rounds);
  w.u32(status.expected_clients);
  w.u32(static_cast<std::uint32_t>(status.received_clients.size()));
  for (std::int32_t c : status.received_clients) w.u32(static_cast<std::uint32_t>(c));
  return build(MessageKind::kStatus, std::move(p));
}

Message make_not_ready(std::uint32_t completed_rounds) {
  Bytes p;
  ByteWriter(p).u32(completed_rounds);
  return build(MessageKind::kNotReady, std::move(p));
}

Message make_error(ErrorCode code, std::string_view message) {
  Bytes p;
  ByteWriter w(p);
  w.u8(static_cast<std::uint8_t>(code));
  w.str16(message.substr(0, 0xffff));
  return build(MessageKind::kError, std::move(p));
}

GetGlobal parse_get_global(const Message& m) {
  expect_kind(m, MessageKind::kGetGlobal);
  ByteReader r(m.payload);
  GetGlobal out;
  out.round = r.u32();
  out.client_id = static_cast<std::int32_t>(r.u32());
  expect_consumed(r, m.kind);
  return out;
}

GlobalParams parse_global_params(const Message& m) {
  expect_kind(m, MessageKind::kGlobalParams);
  ByteReader r(m.payload);
  GlobalParams out;
  out.round = r.u32();
  out.params = deserialize_params(r.raw(r.remaining()));
  return out;
}

PushUpdate parse_push_update(const Message& m) {
  expect_kind(m, MessageKind::kPushUpdate);
  ByteReader r(m.payload);
  PushUpdate out;
  out.round = r.u32();
  out.update.client_id = static_cast<std::int32_t>(r.u32());
  out.update.sample_count = r.u64();
  out.update.mean_train_loss = r.f64();
  out.update.mean_test_loss = r.f64();
  out.update.params = deserialize_params(r.raw(r.remaining()));
  return out;
}

std::uint32_t parse_ack(const Message& m) {
  expect_kind(m, MessageKind::kAck);
  ByteReader r(m.payload);
  const std::uint32_t round = r.u32();
  expect_consumed(r, m.kind);
  return round;
}

Status parse_status(const Message& m) {
  expect_kind(m, MessageKind::kStatus);
  ByteReader r(m.payload);
  Status out;
  out.completed_rounds = r.u32();
  out.total_rounds = r.u32();
  out.expected_clients = r.u32();
  const std::uint32_t n = r.u32();
  if (n > r.remaining() / 4) {
    throw DecodeError(Kind::kTruncated, "status lists more clients than sent");
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    out.received_clients.push_back(static_cast<std::int32_t>(r.u32()));
  }
  expect_consumed(r, m.kind);
  return out;
}

std::uint32_t parse_not_ready(const Message& m) {
  expect_kind(m, MessageKind::kNotReady);
  ByteReader r(m.payload);
  const std::uint32_t completed = r.u32();
  expect_consumed(r, m.kind);
  return completed;
}

ErrorReply parse_error(const Message& m) {
  expect_kind(m, MessageKind::kError);
  ByteReader r(m.payload);
  ErrorReply out;
  out.code = static_cast<ErrorCode>(r.u8());
  out.message = r.str16();
  expect_consumed(r, m.kind);
  return out;
}

}  // namespace medfed::protocol
