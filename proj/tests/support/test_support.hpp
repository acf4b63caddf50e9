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
#include <string>
#include <vector>

#include "medfed/data.hpp"
#include "medfed/model.hpp"
#include "medfed/rng.hpp"
#include "medfed/tensor.hpp"

namespace medfed::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -2.0, double hi = 2.0);

/// hidden=8, embed=4, attention=8 and the given vocabulary sizes.
ModelDims tiny_dims(std::size_t vocab_in = 6, std::size_t vocab_out = 6);

/// Every tensor uniform in [lo, hi], biases included.
ModelParams random_params(const ModelDims& dims, std::uint64_t seed,
                          double lo = -0.5, double hi = 0.5);

/// <start> ids... <end> with `length` symptom ids drawn from [4, vocab_in).
std::vector<TokenId> random_input(std::size_t length, std::size_t vocab_in, Rng& rng);

TokenizedPair random_pair(const ModelDims& dims, Rng& rng, std::size_t min_len = 1,
                          std::size_t max_len = 4);

/// Small synthetic federation: `sizes[k]` pairs for client k+1, split 80/20.
struct SmallFederation {
  Vocab vocab;
  std::vector<ClientShard> shards;
};
SmallFederation small_federation(const std::vector<std::size_t>& sizes,
                                 std::uint64_t seed, std::size_t diseases = 4,
                                 std::size_t symptoms = 12);

/// Model dims sized to a vocabulary with small hidden layers.
ModelDims dims_for(const Vocab& vocab, std::size_t hidden = 8, std::size_t embed = 4);

}  // namespace medfed::testing
