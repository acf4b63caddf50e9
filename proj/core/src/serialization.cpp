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

#include "medfed/serialization.hpp"

#include <zlib.h>

#include <array>
#include <fstream>
#include <iterator>

#include "medfed/errors.hpp"

namespace medfed {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'F', 'E', 'D', 'W'};
constexpr std::size_t kMaxRank = 4;

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

Bytes serialize_params(const ModelParams& params) {
  const ModelDims dims = dims_of(params);
  if (!all_finite(params)) {
    throw NumericError("refusing to serialize non-finite parameters");
  }
  Bytes out;
  out.reserve(64 + parameter_count(params) * 8);
  ByteWriter w(out);
  w.raw(kMagic);
  w.u32(kParamsFormatVersion);
  w.u64(dims.vocab_in);
  w.u64(dims.vocab_out);
  w.u64(dims.embed_dim);
  w.u64(dims.hidden_dim);
  w.u64(dims.attention_dim);
  w.u32(static_cast<std::uint32_t>(parameter_names().size()));
  params.for_each([&](const std::string& name, const Tensor& t) {
    w.str16(name);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u64(d);
    for (double v : t.data()) w.f64(v);
  });
  w.u32(crc32(out));
  return out;
}

ModelParams deserialize_params(std::span<const std::uint8_t> bytes) {
  using Kind = DecodeError::Kind;
  ByteReader r(bytes);
  const auto magic = r.raw(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw DecodeError(Kind::kBadMagic, "not a parameter image (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kParamsFormatVersion) {
    throw DecodeError(Kind::kBadVersion,
                      "unsupported parameter format version " +
                          std::to_string(version));
  }
  ModelDims dims;
  dims.vocab_in = r.u64();
  dims.vocab_out = r.u64();
  dims.embed_dim = r.u64();
  dims.hidden_dim = r.u64();
  dims.attention_dim = r.u64();
  const std::vector<std::string> names = parameter_names();
  const std::uint32_t count = r.u32();
  if (count != names.size()) {
    throw DecodeError(Kind::kMalformed,
                      "expected " + std::to_string(names.size()) +
                          " tensors, header says " + std::to_string(count));
  }

  std::vector<Tensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.str16();
    if (name != names[k]) {
      throw DecodeError(Kind::kMalformed, "tensor " + std::to_string(k) +
                                              " is '" + name + "', expected '" +
                                              names[k] + "'");
    }
    const std::size_t rank = r.u8();
    if (rank == 0 || rank > kMaxRank) {
      throw DecodeError(Kind::kMalformed, "tensor " + name + " has rank " +
                                              std::to_string(rank));
    }
    Shape shape(rank);
    std::size_t elements = 1;
    for (auto& d : shape) {
      d = r.u64();
      if (d != 0 && elements > r.remaining() / d) {
        throw DecodeError(Kind::kTruncated,
                          "tensor " + name + " is larger than the input");
      }
      elements *= d;
    }
    if (elements > r.remaining() / 8) {
      throw DecodeError(Kind::kTruncated,
                        "tensor " + name + " is larger than the input");
    }
    std::vector<double> data(elements);
    for (double& v : data) v = r.f64();
    tensors.emplace_back(std::move(shape), std::move(data));
  }
  const std::size_t body_end = r.position();
  const std::uint32_t stored = r.u32();
  if (r.remaining() != 0) {
    throw DecodeError(Kind::kMalformed, std::to_string(r.remaining()) +
                                            " trailing bytes after checksum");
  }
  if (crc32(bytes.first(body_end)) != stored) {
    throw DecodeError(Kind::kBadChecksum, "parameter image checksum mismatch");
  }

  ModelParams params;
  std::size_t i = 0;
  params.for_each([&](const std::string&, Tensor& t) { t = std::move(tensors[i++]); });
  try {
    if (dims_of(params) != dims) {
      throw DecodeError(Kind::kMalformed, "header dims disagree with tensors");
    }
  } catch (const DimensionError& e) {
    throw DecodeError(Kind::kMalformed, e.what());
  }
  if (!all_finite(params)) {
    throw DecodeError(Kind::kMalformed, "parameter image holds non-finite values");
  }
  return params;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  write_file_atomic(path, serialize_params(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return deserialize_params(bytes);
  } catch (const DecodeError& e) {
    throw DecodeError(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace medfed
