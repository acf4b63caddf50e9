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
#include <filesystem>
#include <span>

#include "medfed/bytes.hpp"
#include "medfed/model.hpp"

namespace medfed {

inline constexpr std::uint32_t kParamsFormatVersion = 1;

/// Binary parameter image:
///   "FEDW" | u32 version | 5×u64 dims | u32 tensor count |
///   per tensor: u16 name length, name, u8 rank, rank×u64 dims, f64 values |
///   u32 CRC-32 of everything before it.
/// All integers and floats are little-endian.
Bytes serialize_params(const ModelParams& params);

/// Inverse of serialize_params. Throws DecodeError with kind kTruncated,
/// kBadMagic, kBadVersion, kBadChecksum or kMalformed.
ModelParams deserialize_params(std::span<const std::uint8_t> bytes);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

/// Checkpoint file I/O in the format above (written atomically via rename).
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

Bytes read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);

}  // namespace medfed
