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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medfed/bytes.hpp"
#include "medfed/model.hpp"
#include "medfed/trainer.hpp"

namespace medfed::protocol {

// Wire frame: u32 little-endian length of (kind + payload), u8 kind, payload.

enum class MessageKind : std::uint8_t {
  kGetGlobal = 1,     // u32 round, i32 client_id
  kGlobalParams = 2,  // u32 round, parameter image
  kPushUpdate = 3,    // u32 round, i32 client_id, u64 samples, f64 train, f64 test, image
  kAck = 4,           // u32 round
  kGetStatus = 5,     // empty
  kStatus = 6,        // u32 completed, u32 total, u32 expected, u32 n, n×i32 clients
  kNotReady = 7,      // u32 completed rounds
  kError = 8,         // u8 code, u16 length, message
};

enum class ErrorCode : std::uint8_t {
  kMalformed = 1,
  kStaleRound = 2,
  kDuplicate = 3,
  kUnknownClient = 4,
  kRejectedUpdate = 5,
  kFinished = 6,
  kInternal = 7,
};

const char* to_string(MessageKind kind);
const char* to_string(ErrorCode code);
bool is_known_kind(std::uint8_t kind);

struct Message {
  MessageKind kind = MessageKind::kGetStatus;
  Bytes payload;
  friend bool operator==(const Message&, const Message&) = default;
};

inline constexpr std::size_t kFrameHeaderBytes = 4;
/// Frames larger than this are rejected without reading the body.
inline constexpr std::uint32_t kMaxFrameBytes = 1u << 30;

Bytes encode_frame(const Message& message);
/// Decodes one complete frame (header + body). Throws DecodeError when the
/// bytes do not hold exactly one well-formed frame.
Message decode_frame(std::span<const std::uint8_t> frame);

struct GetGlobal {
  std::uint32_t round = 0;
  std::int32_t client_id = -1;
};

struct GlobalParams {
  std::uint32_t round = 0;
  ModelParams params;
};

struct PushUpdate {
  std::uint32_t round = 0;
  ClientUpdate update;
};

struct Status {
  std::uint32_t completed_rounds = 0;
  std::uint32_t total_rounds = 0;
  std::uint32_t expected_clients = 0;
  std::vector<std::int32_t> received_clients;
};

struct ErrorReply {
  ErrorCode code = ErrorCode::kInternal;
  std::string message;
};

Message make_get_global(const GetGlobal& m);
Message make_global_params(std::uint32_t round, const ModelParams& params);
Message make_push_update(std::uint32_t round, const ClientUpdate& update);
Message make_ack(std::uint32_t round);
Message make_get_status();
Message make_status(const Status& status);
Message make_not_ready(std::uint32_t completed_rounds);
Message make_error(ErrorCode code, std::string_view message);

// Payload parsers; each throws DecodeError on a malformed payload or a
// message of the wrong kind.
GetGlobal parse_get_global(const Message& m);
GlobalParams parse_global_params(const Message& m);
PushUpdate parse_push_update(const Message& m);
std::uint32_t parse_ack(const Message& m);
Status parse_status(const Message& m);
std::uint32_t parse_not_ready(const Message& m);
ErrorReply parse_error(const Message& m);

}  // namespace medfed::protocol
