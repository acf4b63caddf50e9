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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "medfed/data.hpp"
#include "medfed/federation.hpp"
#include "medfed/model.hpp"
#include "medfed/trainer.hpp"

namespace medfed::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitDivergence = 4,
  kExitIo = 5,
};

/// Bad command-line input detected after parsing (empty symptoms, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

struct PrepareOptions {
  std::optional<fs::path> input;
  bool synthetic = false;
  std::size_t clients = 5;
  std::vector<std::size_t> sizes;
  std::uint64_t seed = 0;
  std::size_t diseases = 41;
  std::size_t symptoms = 132;
  std::size_t samples = 4920;
  double train_fraction = 0.8;
  fs::path out;
};

struct PrepareResult {
  std::vector<std::size_t> shard_sizes;
  std::size_t skipped_rows = 0;
};

PrepareResult prepare_data(const PrepareOptions& options, std::ostream& log);

/// Dataset directory written by prepare_data.
struct Dataset {
  fs::path dir;
  nlohmann::json manifest;
  Vocab vocab;
  std::vector<ClientShard> shards;  // client ids 1..K
};

/// Loads and checksum-verifies a prepared dataset.
Dataset load_dataset(const fs::path& dir);

struct ModelOptions {
  std::string preset = "paper";
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> embed;
  std::optional<std::size_t> attention;
};

/// Dims for a preset with per-field overrides and the dataset vocab sizes.
ModelDims resolve_dims(const ModelOptions& options, const Vocab& vocab);

struct TrainOptions {
  fs::path data;
  fs::path out;
  ModelOptions model;
  std::uint64_t seed = 0;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";
  double clip = 5.0;  // 0 disables clipping
  std::size_t local_epochs = 5;

  // train-centralized
  int client = 1;
  std::size_t epochs = 30;
  std::size_t checkpoint_every = 0;

  // train-federated
  std::size_t rounds = 30;
  std::optional<std::size_t> clients;
  std::string mode = "weighted";
  std::string transport = "in-process";
  bool parallel = true;
};

nlohmann::json to_json(const TrainOptions& options);
TrainOptions train_options_from_json(const nlohmann::json& j);

TrainConfig make_train_config(const TrainOptions& options);

struct CentralizedSummary {
  std::vector<EpochMetrics> history;
  fs::path final_checkpoint;
};
CentralizedSummary train_centralized_cmd(const TrainOptions& options,
                                         std::ostream& log);

struct FederatedSummary {
  std::vector<RoundMetrics> history;
  fs::path final_checkpoint;
};
FederatedSummary train_federated_cmd(const TrainOptions& options, std::ostream& log);

struct EvaluateOptions {
  fs::path data;
  std::vector<fs::path> checkpoints;
  std::optional<fs::path> csv;
};

struct EvaluationRow {
  std::string model;
  double train_loss = 0.0;
  double pooled_test_loss = 0.0;
};

std::vector<EvaluationRow> evaluate_cmd(const EvaluateOptions& options,
                                        std::ostream& out);

struct InferOptions {
  fs::path checkpoint;
  fs::path vocab;
  std::string symptoms;
  std::size_t top_k = 0;
  std::size_t max_len = 8;
  std::optional<fs::path> json;
  bool color = false;
};

struct InferReport {
  std::vector<std::string> input_tokens;   // including <start> and <end>
  std::vector<std::string> output_tokens;  // including <end> when produced
  std::vector<std::string> diseases;       // predicted tokens without <end>
  Tensor weights;                          // [output steps × input tokens]
  std::size_t unknown_symptoms = 0;

  nlohmann::json attention_json() const;
};

/// Splits "a, b ,c" into normalized symptom names. Throws UsageError when
/// no name remains.
std::vector<std::string> parse_symptom_list(const std::string& text);

InferReport infer(const ModelParams& params, const Vocab& vocab,
                  const std::vector<std::string>& symptoms, std::size_t max_len,
                  std::ostream* warnings = nullptr);
InferReport infer_cmd(const InferOptions& options, std::ostream& out,
                      std::ostream& err);

/// Text heatmap: one row per output token, one column per input token,
/// intensity ramp per cell and the row maximum in brackets.
std::string render_heatmap(const InferReport& report, bool color);

struct ReproduceResult {
  bool identical = false;
  std::uint32_t expected_crc = 0;
  std::uint32_t actual_crc = 0;
};
ReproduceResult reproduce_cmd(const fs::path& manifest, const fs::path& out,
                              std::ostream& log);

/// CRC-32 of a file's contents.
std::uint32_t file_crc32(const fs::path& path);

}  // namespace medfed::cli
