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
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "medfed/errors.hpp"
#include "medfed/federation.hpp"
#include "medfed/rng.hpp"
#include "medfed/serialization.hpp"

namespace medfed {

namespace {

std::vector<const Tensor*> tensors_of(const ModelParams& p) {
  std::vector<const Tensor*> out;
  p.for_each([&](const std::string&, const Tensor& t) { out.push_back(&t); });
  return out;
}

std::vector<Tensor*> tensors_of(ModelParams& p) {
  std::vector<Tensor*> out;
  p.for_each([&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const char* to_string(AggregationMode mode) {
  return mode == AggregationMode::kWeighted ? "weighted" : "uniform";
}

const char* to_string(TransportKind kind) {
  return kind == TransportKind::kInProcess ? "in-process" : "socket";
}

void FederatedConfig::validate() const {
  if (num_clients < 1) throw ConfigError("num_clients must be at least 1");
  if (num_rounds < 1) throw ConfigError("num_rounds must be at least 1");
  dims.validate();
  train.validate();
}

std::vector<double> aggregation_weights(std::span<const ClientUpdate> updates,
                                        AggregationMode mode) {
  if (updates.empty()) throw ContractError("aggregate: no client updates");
  std::vector<double> weights(updates.size());
  if (mode == AggregationMode::kUniform) {
    std::fill(weights.begin(), weights.end(),
              1.0 / static_cast<double>(updates.size()));
    return weights;
  }
  double total = 0.0;
  for (const ClientUpdate& u : updates) {
    if (u.sample_count == 0) {
      throw ContractError("aggregate: client " + std::to_string(u.client_id) +
                          " reported zero samples");
    }
    total += static_cast<double>(u.sample_count);
  }
  for (std::size_t i = 0; i < updates.size(); ++i) {
    weights[i] = static_cast<double>(updates[i].sample_count) / total;
  }
  return weights;
}

ModelParams aggregate(std::span<const ClientUpdate> updates, AggregationMode mode) {
  const std::vector<double> weights = aggregation_weights(updates, mode);
  for (const ClientUpdate& u : updates) {
    if (u.sample_count == 0) {
      throw ContractError("aggregate: client " + std::to_string(u.client_id) +
                          " reported zero samples");
    }
  }

  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return updates[a].client_id < updates[b].client_id;
  });

  const ClientUpdate& first = updates[order.front()];
  const auto reference = tensors_of(first.params);
  const std::vector<std::string> names = parameter_names();
  for (std::size_t idx : order) {
    const auto ts = tensors_of(updates[idx].params);
    for (std::size_t i = 0; i < reference.size(); ++i) {
      if (ts[i]->shape() != reference[i]->shape()) {
        throw AggregationError(
            "aggregate: tensor " + names[i] + " of client " +
            std::to_string(updates[idx].client_id) + " has shape " +
            to_string(ts[i]->shape()) + " but client " +
            std::to_string(first.client_id) + " has " +
            to_string(reference[i]->shape()));
      }
    }
  }

  ModelParams out = first.params;
  auto acc = tensors_of(out);
  const double w0 = weights[order.front()];
  for (Tensor* t : acc) {
    for (double& v : t->data()) v *= w0;
  }
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto ts = tensors_of(updates[order[k]].params);
    const double w = weights[order[k]];
    for (std::size_t i = 0; i < acc.size(); ++i) kernels::axpy(w, *ts[i], *acc[i]);
  }
  return out;
}

TrainConfig client_train_config(const FederatedConfig& config, int client_id,
                                std::size_t round) {
  TrainConfig out = config.train;
  const std::uint64_t index = (static_cast<std::uint64_t>(round) << 32) |
                              static_cast<std::uint32_t>(client_id);
  out.seed = derive_seed(config.seed, "client-train", index);
  return out;
}

std::vector<TokenizedPair> pooled_train(std::span<const ClientShard> shards) {
  std::vector<TokenizedPair> out;
  for (const ClientShard& s : shards) out.insert(out.end(), s.train.begin(), s.train.end());
  return out;
}

std::vector<TokenizedPair> pooled_test(std::span<const ClientShard> shards) {
  std::vector<TokenizedPair> out;
  for (const ClientShard& s : shards) out.insert(out.end(), s.test.begin(), s.test.end());
  return out;
}

std::string metrics_csv(std::span<const RoundMetrics> history) {
  std::ostringstream out;
  out << "round,client_id,train_loss,test_loss,sample_count\n";
  for (const RoundMetrics& r : history) {
    std::size_t total = 0;
    for (const ClientRoundMetrics& c : r.clients) {
      out << r.round << ',' << c.client_id << ',' << format_double(c.train_loss)
          << ',' << format_double(c.test_loss) << ',' << c.sample_count << '\n';
      total += c.sample_count;
    }
    out << r.round << ",global," << format_double(r.global_train_loss) << ','
        << format_double(r.global_test_loss) << ',' << total << '\n';
  }
  return out.str();
}

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const RoundMetrics> history) {
  const std::string text = metrics_csv(history);
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                    text.size()));
}

std::vector<RoundMetrics> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics file " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("round,client_id,train_loss,test_loss,sample_count", 0) != 0) {
    throw FormatError(path.string() + ": unexpected metrics header");
  }
  std::vector<RoundMetrics> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 5 columns");
    }
    try {
      const std::size_t round = std::stoul(cells[0]);
      if (out.empty() || out.back().round != round) {
        out.push_back(RoundMetrics{});
        out.back().round = round;
      }
      RoundMetrics& r = out.back();
      if (cells[1] == "global") {
        r.global_train_loss = std::stod(cells[2]);
        r.global_test_loss = std::stod(cells[3]);
      } else {
        ClientRoundMetrics c;
        c.client_id = std::stoi(cells[1]);
        c.train_loss = std::stod(cells[2]);
        c.test_loss = std::stod(cells[3]);
        c.sample_count = std::stoul(cells[4]);
        r.clients.push_back(c);
      }
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": unparsable metrics row");
    }
  }
  for (RoundMetrics& r : out) {
    double num = 0.0, den = 0.0;
    for (const ClientRoundMetrics& c : r.clients) {
      num += c.train_loss * static_cast<double>(c.sample_count);
      den += static_cast<double>(c.sample_count);
    }
    r.mean_client_train_loss = den > 0.0 ? num / den : 0.0;
  }
  return out;
}

std::filesystem::path round_checkpoint_path(const std::filesystem::path& dir,
                                            std::size_t round) {
  return dir / ("round_" + std::to_string(round) + ".fedw");
}

}  // namespace medfed
