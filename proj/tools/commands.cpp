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

#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "medfed/errors.hpp"
#include "medfed/rng.hpp"
#include "medfed/serialization.hpp"

namespace medfed::cli {

namespace {

using nlohmann::json;

constexpr int kDatasetFormatVersion = 1;
constexpr int kRunManifestVersion = 1;

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_atomic(path, as_bytes(text));
}

std::string read_text(const fs::path& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string fmt(double v, int precision = 6) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*e", precision, v);
  return buf;
}

std::string exact(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::size_t> even_sizes(std::size_t total, std::size_t k) {
  std::vector<std::size_t> sizes(k, total / k);
  for (std::size_t i = 0; i < total % k; ++i) ++sizes[i];
  return sizes;
}

fs::path shard_file_name(std::size_t client_id) {
  return "shard_" + std::to_string(client_id) + ".tsv";
}

json run_manifest(const std::string& command, const TrainOptions& options,
                  const fs::path& final_checkpoint, const fs::path& metrics,
                  const std::string& started) {
  json j;
  j["format"] = "medfed-run";
  j["version"] = kRunManifestVersion;
  j["command"] = command;
  j["options"] = to_json(options);
  j["seed"] = options.seed;
  j["dataset"] = {{"dir", fs::absolute(options.data).string()},
                  {"manifest_crc32", file_crc32(options.data / "manifest.json")}};
  j["artifacts"] = {
      {"final_checkpoint", final_checkpoint.filename().string()},
      {"final_crc32", file_crc32(final_checkpoint)},
      {"metrics", metrics.filename().string()},
      {"metrics_crc32", file_crc32(metrics)},
  };
  if (command == "train-federated") j["artifacts"]["checkpoints"] = "checkpoints";
  j["started_at"] = started;
  j["finished_at"] = timestamp();
  return j;
}

const ClientShard& find_shard(const Dataset& ds, int client_id) {
  for (const ClientShard& s : ds.shards) {
    if (s.client_id == client_id) return s;
  }
  throw UsageError("dataset has no client " + std::to_string(client_id) + " (clients 1.." +
                   std::to_string(ds.shards.size()) + ")");
}

void check_vocab(const ModelParams& params, const Vocab& vocab, const fs::path& source) {
  const ModelDims dims = dims_of(params);
  if (dims.vocab_in != vocab.input.size() || dims.vocab_out != vocab.output.size()) {
    throw FormatError(source.string() + ": model vocabularies (" +
                      std::to_string(dims.vocab_in) + ", " +
                      std::to_string(dims.vocab_out) + ") do not match the vocab (" +
                      std::to_string(vocab.input.size()) + ", " +
                      std::to_string(vocab.output.size()) + ")");
  }
}

}  // namespace

std::uint32_t file_crc32(const fs::path& path) { return crc32(read_file(path)); }

PrepareResult prepare_data(const PrepareOptions& options, std::ostream& log) {
  if (options.synthetic == options.input.has_value()) {
    throw UsageError("give exactly one of --input or --synthetic");
  }
  if (options.clients < 1) throw UsageError("--clients must be at least 1");
  if (options.out.empty()) throw UsageError("--out is required");

  std::vector<SymptomDiseasePair> pairs;
  std::vector<std::string> columns;
  PrepareResult result;
  json source;
  if (options.synthetic) {
    SyntheticSpec spec;
    spec.n_diseases = options.diseases;
    spec.n_symptoms = options.symptoms;
    spec.n_samples = options.samples;
    spec.seed = options.seed;
    SyntheticCorpus corpus = synthesize_corpus(spec);
    pairs = std::move(corpus.pairs);
    columns = std::move(corpus.symptom_columns);
    source = {{"kind", "synthetic"},
              {"diseases", options.diseases},
              {"symptoms", options.symptoms},
              {"samples", options.samples}};
  } else {
    if (!fs::exists(*options.input)) {
      throw IoError("input file " + options.input->string() + " does not exist");
    }
    ParsedCorpus corpus = parse_onehot_csv(*options.input);
    pairs = std::move(corpus.pairs);
    columns = std::move(corpus.symptom_columns);
    result.skipped_rows = corpus.skipped_rows;
    source = {{"kind", "csv"},
              {"path", fs::absolute(*options.input).string()},
              {"crc32", file_crc32(*options.input)}};
  }

  std::vector<std::size_t> sizes = options.sizes;
  if (sizes.empty()) {
    sizes = even_sizes(pairs.size(), options.clients);
  } else if (sizes.size() != options.clients) {
    throw ConfigError("--sizes lists " + std::to_string(sizes.size()) +
                      " sizes for " + std::to_string(options.clients) + " clients");
  }
  const auto parts = shard(pairs, sizes, options.seed);
  const Vocab vocab = build_vocab(columns, pairs);

  fs::create_directories(options.out);
  json manifest;
  manifest["format"] = "medfed-dataset";
  manifest["version"] = kDatasetFormatVersion;
  manifest["seed"] = options.seed;
  manifest["source"] = source;
  manifest["skipped_rows"] = result.skipped_rows;
  manifest["train_fraction"] = options.train_fraction;
  manifest["vocab"] = "vocab.json";
  manifest["shards"] = json::array();
  for (std::size_t k = 0; k < parts.size(); ++k) {
    std::ostringstream text;
    write_text_pairs(text, parts[k]);
    const fs::path name = shard_file_name(k + 1);
    write_text(options.out / name, text.str());
    manifest["shards"].push_back({{"client_id", k + 1},
                                  {"path", name.string()},
                                  {"samples", parts[k].size()},
                                  {"crc32", crc32(as_bytes(text.str()))}});
    result.shard_sizes.push_back(parts[k].size());
    log << "client " << (k + 1) << ": " << parts[k].size() << " samples -> "
        << (options.out / name).string() << '\n';
  }
  write_text(options.out / "vocab.json", vocab.to_json());
  write_text(options.out / "manifest.json", manifest.dump(2) + "\n");
  log << "vocab: " << vocab.input.size() << " input tokens, " << vocab.output.size()
      << " output tokens\n";
  if (result.skipped_rows > 0) {
    log << "skipped " << result.skipped_rows << " rows without symptoms\n";
  }
  return result;
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("dataset directory " + dir.string() + " does not exist");
  }
  Dataset ds;
  ds.dir = dir;
  ds.manifest = read_json(dir / "manifest.json");
  try {
    if (ds.manifest.at("format") != "medfed-dataset") {
      throw FormatError(dir.string() + ": not a dataset manifest");
    }
    ds.vocab = Vocab::from_json(read_text(dir / ds.manifest.at("vocab").get<std::string>()));
    const double fraction = ds.manifest.at("train_fraction").get<double>();
    const auto seed = ds.manifest.at("seed").get<std::uint64_t>();
    for (const json& entry : ds.manifest.at("shards")) {
      const fs::path path = dir / entry.at("path").get<std::string>();
      const Bytes bytes = read_file(path);
      if (crc32(bytes) != entry.at("crc32").get<std::uint32_t>()) {
        throw FormatError(path.string() + ": checksum does not match the manifest");
      }
      std::istringstream in(std::string(bytes.begin(), bytes.end()));
      const auto pairs = parse_text_pairs(in);
      const int id = entry.at("client_id").get<int>();
      ds.shards.push_back(make_client_shard(id, pairs, ds.vocab, fraction, seed));
    }
  } catch (const json::exception& e) {
    throw FormatError(dir.string() + "/manifest.json: " + e.what());
  }
  return ds;
}

ModelDims resolve_dims(const ModelOptions& options, const Vocab& vocab) {
  ModelDims dims;
  if (options.preset == "desk") {
    dims.embed_dim = 32;
    dims.hidden_dim = 128;
  } else if (options.preset == "paper") {
    dims.embed_dim = 256;
    dims.hidden_dim = 1024;
  } else {
    throw UsageError("unknown preset '" + options.preset + "' (desk or paper)");
  }
  if (options.embed) dims.embed_dim = *options.embed;
  if (options.hidden) dims.hidden_dim = *options.hidden;
  dims.attention_dim = options.attention.value_or(dims.hidden_dim);
  dims.vocab_in = vocab.input.size();
  dims.vocab_out = vocab.output.size();
  dims.validate();
  return dims;
}

json to_json(const TrainOptions& o) {
  json model = {{"preset", o.model.preset}};
  if (o.model.hidden) model["hidden"] = *o.model.hidden;
  if (o.model.embed) model["embed"] = *o.model.embed;
  if (o.model.attention) model["attention"] = *o.model.attention;
  json j = {
      {"data", fs::absolute(o.data).string()},
      {"model", model},
      {"seed", o.seed},
      {"batch_size", o.batch_size},
      {"learning_rate", exact(o.learning_rate)},
      {"optimizer", o.optimizer},
      {"clip", exact(o.clip)},
      {"local_epochs", o.local_epochs},
      {"client", o.client},
      {"epochs", o.epochs},
      {"checkpoint_every", o.checkpoint_every},
      {"rounds", o.rounds},
      {"mode", o.mode},
      {"transport", o.transport},
      {"parallel", o.parallel},
  };
  if (o.clients) j["clients"] = *o.clients;
  return j;
}

TrainOptions train_options_from_json(const json& j) {
  TrainOptions o;
  try {
    o.data = j.at("data").get<std::string>();
    const json& m = j.at("model");
    o.model.preset = m.at("preset").get<std::string>();
    if (m.contains("hidden")) o.model.hidden = m["hidden"].get<std::size_t>();
    if (m.contains("embed")) o.model.embed = m["embed"].get<std::size_t>();
    if (m.contains("attention")) o.model.attention = m["attention"].get<std::size_t>();
    o.seed = j.at("seed").get<std::uint64_t>();
    o.batch_size = j.at("batch_size").get<std::size_t>();
    o.learning_rate = std::stod(j.at("learning_rate").get<std::string>());
    o.optimizer = j.at("optimizer").get<std::string>();
    o.clip = std::stod(j.at("clip").get<std::string>());
    o.local_epochs = j.at("local_epochs").get<std::size_t>();
    o.client = j.at("client").get<int>();
    o.epochs = j.at("epochs").get<std::size_t>();
    o.checkpoint_every = j.at("checkpoint_every").get<std::size_t>();
    o.rounds = j.at("rounds").get<std::size_t>();
    if (j.contains("clients")) o.clients = j["clients"].get<std::size_t>();
    o.mode = j.at("mode").get<std::string>();
    o.transport = j.at("transport").get<std::string>();
    o.parallel = j.at("parallel").get<bool>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("run manifest options: ") + e.what());
  } catch (const std::logic_error& e) {
    throw FormatError(std::string("run manifest options: ") + e.what());
  }
  return o;
}

TrainConfig make_train_config(const TrainOptions& o) {
  TrainConfig c;
  c.local_epochs = o.local_epochs;
  c.batch_size = o.batch_size;
  c.learning_rate = o.learning_rate;
  if (o.optimizer == "adam") {
    c.optimizer = OptimizerKind::kAdam;
  } else if (o.optimizer == "sgd") {
    c.optimizer = OptimizerKind::kSgd;
  } else {
    throw UsageError("unknown optimizer '" + o.optimizer + "' (adam or sgd)");
  }
  if (o.clip < 0.0) throw UsageError("--clip must be non-negative");
  c.grad_clip_norm = o.clip > 0.0 ? std::optional<double>(o.clip) : std::nullopt;
  c.seed = o.seed;
  c.validate();
  return c;
}

CentralizedSummary train_centralized_cmd(const TrainOptions& options,
                                         std::ostream& log) {
  if (options.out.empty()) throw UsageError("--out is required");
  const std::string started = timestamp();
  const Dataset ds = load_dataset(options.data);
  const ClientShard& shard = find_shard(ds, options.client);
  const ModelDims dims = resolve_dims(options.model, ds.vocab);
  TrainConfig config = make_train_config(options);
  config.seed = derive_seed(options.seed, "centralized",
                            static_cast<std::uint64_t>(options.client));
  const std::vector<TokenizedPair> pooled = pooled_test(ds.shards);

  fs::create_directories(options.out);
  const fs::path metrics_path = options.out / "metrics.csv";
  const fs::path checkpoints = options.out / "checkpoints";
  std::string metrics = "epoch,train_loss,own_test_loss,pooled_test_loss\n";

  const ModelParams init = init_params(dims, derive_seed(options.seed, "init"));
  log << "client " << options.client << ": " << shard.train.size() << " train / "
      << shard.test.size() << " test samples, pooled test " << pooled.size()
      << ", " << parameter_count(init) << " parameters\n";

  CentralizedSummary summary;
  const CentralizedResult result = train_centralized(
      init, shard, pooled, options.epochs, config,
      [&](const EpochMetrics& m, const ModelParams& params) {
        metrics += std::to_string(m.epoch) + "," + exact(m.train_loss) + "," +
                   exact(m.own_test_loss) + "," + exact(m.pooled_test_loss) + "\n";
        write_text(metrics_path, metrics);
        if (options.checkpoint_every > 0 && m.epoch > 0 &&
            m.epoch % options.checkpoint_every == 0) {
          fs::create_directories(checkpoints);
          save_checkpoint(checkpoints / ("epoch_" + std::to_string(m.epoch) + ".fedw"),
                          params);
        }
        log << "epoch " << m.epoch << ": train " << fmt(m.train_loss) << "  own test "
            << fmt(m.own_test_loss) << "  pooled test " << fmt(m.pooled_test_loss)
            << '\n';
      });
  summary.history = result.history;
  summary.final_checkpoint = options.out / "final.fedw";
  save_checkpoint(summary.final_checkpoint, result.params);
  write_text(options.out / "run_manifest.json",
             run_manifest("train-centralized", options, summary.final_checkpoint,
                          metrics_path, started)
                     .dump(2) +
                 "\n");
  return summary;
}

FederatedSummary train_federated_cmd(const TrainOptions& options, std::ostream& log) {
  if (options.out.empty()) throw UsageError("--out is required");
  const std::string started = timestamp();
  Dataset ds = load_dataset(options.data);
  if (options.clients) {
    if (*options.clients < 1 || *options.clients > ds.shards.size()) {
      throw UsageError("--clients must lie in 1.." + std::to_string(ds.shards.size()));
    }
    ds.shards.resize(*options.clients);
  }

  FederatedConfig config;
  config.num_clients = ds.shards.size();
  config.num_rounds = options.rounds;
  config.dims = resolve_dims(options.model, ds.vocab);
  config.train = make_train_config(options);
  if (options.mode == "weighted") {
    config.aggregation = AggregationMode::kWeighted;
  } else if (options.mode == "uniform") {
    config.aggregation = AggregationMode::kUniform;
  } else {
    throw UsageError("unknown mode '" + options.mode + "' (weighted or uniform)");
  }
  if (options.transport == "in-process") {
    config.transport = TransportKind::kInProcess;
  } else if (options.transport == "socket") {
    config.transport = TransportKind::kSocket;
  } else {
    throw UsageError("unknown transport '" + options.transport +
                     "' (in-process or socket)");
  }
  config.seed = options.seed;
  config.parallel_clients = options.parallel;
  if (options.rounds < 1) throw UsageError("--rounds must be at least 1");

  fs::create_directories(options.out);
  config.checkpoint_dir = options.out / "checkpoints";
  config.metrics_path = options.out / "metrics.csv";

  log << config.num_clients << " clients, " << config.num_rounds << " rounds, "
      << options.local_epochs << " local epochs, " << to_string(config.aggregation)
      << " aggregation over " << to_string(config.transport) << " transport\n";

  const GlobalState final_state = run_federation(
      config, ds.shards, [&](const GlobalState& state) {
        const RoundMetrics& m = state.history.back();
        log << "round " << m.round << "/" << config.num_rounds << ": global train "
            << fmt(m.global_train_loss) << "  global test " << fmt(m.global_test_loss)
            << "  mean client train " << fmt(m.mean_client_train_loss) << '\n';
      });

  FederatedSummary summary;
  summary.history = final_state.history;
  summary.final_checkpoint = options.out / "final.fedw";
  save_checkpoint(summary.final_checkpoint, final_state.global_params);
  write_text(options.out / "run_manifest.json",
             run_manifest("train-federated", options, summary.final_checkpoint,
                          *config.metrics_path, started)
                     .dump(2) +
                 "\n");
  return summary;
}

std::vector<EvaluationRow> evaluate_cmd(const EvaluateOptions& options,
                                        std::ostream& out) {
  if (options.checkpoints.empty()) throw UsageError("give at least one --checkpoint");
  const Dataset ds = load_dataset(options.data);
  const std::vector<TokenizedPair> train = pooled_train(ds.shards);
  const std::vector<TokenizedPair> test = pooled_test(ds.shards);

  std::vector<EvaluationRow> rows;
  for (const fs::path& path : options.checkpoints) {
    const ModelParams params = load_checkpoint(path);
    check_vocab(params, ds.vocab, path);
    rows.push_back({path.string(), evaluate(params, train), evaluate(params, test)});
  }

  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.model.size());
  out << std::left << std::setw(static_cast<int>(width)) << "model" << "  "
      << std::setw(14) << "train_loss" << "  " << "pooled_test_loss" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.model << "  "
        << std::setw(14) << fmt(r.train_loss) << "  " << fmt(r.pooled_test_loss)
        << '\n';
  }
  if (options.csv) {
    std::string csv = "model,train_loss,pooled_test_loss\n";
    for (const auto& r : rows) {
      csv += r.model + "," + exact(r.train_loss) + "," + exact(r.pooled_test_loss) + "\n";
    }
    write_text(*options.csv, csv);
  }
  return rows;
}

json InferReport::attention_json() const {
  json rows = json::array();
  for (std::size_t i = 0; i < output_tokens.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < input_tokens.size(); ++j) {
      row.push_back(weights.at(i, j));
    }
    rows.push_back(std::move(row));
  }
  return {{"input_tokens", input_tokens},
          {"output_tokens", output_tokens},
          {"weights", rows}};
}

std::vector<std::string> parse_symptom_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string name = normalize_name(item);
    if (!name.empty()) out.push_back(std::move(name));
  }
  if (out.empty()) throw UsageError("--symptoms must name at least one symptom");
  return out;
}

InferReport infer(const ModelParams& params, const Vocab& vocab,
                  const std::vector<std::string>& symptoms, std::size_t max_len,
                  std::ostream* warnings) {
  if (symptoms.empty()) throw UsageError("no symptoms given");
  InferReport report;
  std::vector<TokenId> ids{kStartId};
  report.input_tokens.emplace_back(kStartToken);
  for (const std::string& s : symptoms) {
    const TokenId id = vocab.input.id(s);
    if (id == kUnkId) {
      ++report.unknown_symptoms;
      if (warnings) *warnings << "warning: unknown symptom '" << s << "' maps to <unk>\n";
    }
    ids.push_back(id);
    report.input_tokens.push_back(vocab.input.token(id));
  }
  ids.push_back(kEndId);
  report.input_tokens.emplace_back(kEndToken);

  const GreedyResult decoded = greedy_decode(params, ids, max_len);
  for (TokenId t : decoded.output_ids) {
    report.diseases.push_back(vocab.output.token(t));
    report.output_tokens.push_back(vocab.output.token(t));
  }
  if (decoded.attention.dim(0) > decoded.output_ids.size()) {
    report.output_tokens.emplace_back(kEndToken);
  }
  report.weights = decoded.attention;
  return report;
}

InferReport infer_cmd(const InferOptions& options, std::ostream& out,
                      std::ostream& err) {
  const std::vector<std::string> symptoms = parse_symptom_list(options.symptoms);
  if (options.max_len == 0) throw UsageError("--max-len must be at least 1");
  const ModelParams params = load_checkpoint(options.checkpoint);
  const Vocab vocab = Vocab::from_json(read_text(options.vocab));
  check_vocab(params, vocab, options.checkpoint);

  const InferReport report = infer(params, vocab, symptoms, options.max_len, &err);
  out << "prediction:";
  if (report.diseases.empty()) out << " (none)";
  for (const auto& d : report.diseases) out << ' ' << d;
  out << "\n\n" << render_heatmap(report, options.color);

  if (options.top_k > 0) {
    out << '\n';
    for (std::size_t i = 0; i < report.output_tokens.size(); ++i) {
      std::vector<std::size_t> cols;
      for (std::size_t j = 1; j + 1 < report.input_tokens.size(); ++j) cols.push_back(j);
      std::stable_sort(cols.begin(), cols.end(), [&](std::size_t a, std::size_t b) {
        return report.weights.at(i, a) > report.weights.at(i, b);
      });
      cols.resize(std::min(cols.size(), options.top_k));
      out << report.output_tokens[i] << ':';
      for (std::size_t j : cols) {
        out << "  " << report.input_tokens[j] << " (" << std::fixed
            << std::setprecision(3) << report.weights.at(i, j) << ')';
      }
      out << std::defaultfloat << '\n';
    }
  }
  if (options.json) write_text(*options.json, report.attention_json().dump(2) + "\n");
  return report;
}

std::string render_heatmap(const InferReport& report, bool color) {
  static constexpr char kRamp[] = " .:-=+*#%@";
  constexpr std::size_t kLevels = sizeof(kRamp) - 2;
  std::size_t label = 0;
  for (const auto& t : report.output_tokens) label = std::max(label, t.size());

  std::ostringstream out;
  out << std::string(label, ' ') << " ";
  for (std::size_t j = 0; j < report.input_tokens.size(); ++j) {
    out << std::setw(7) << j << ' ';
  }
  out << '\n';
  for (std::size_t i = 0; i < report.output_tokens.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < report.input_tokens.size(); ++j) {
      if (report.weights.at(i, j) > report.weights.at(i, best)) best = j;
    }
    out << std::left << std::setw(static_cast<int>(label)) << report.output_tokens[i]
        << std::right << ' ';
    for (std::size_t j = 0; j < report.input_tokens.size(); ++j) {
      const double w = report.weights.at(i, j);
      const auto level = static_cast<std::size_t>(
          std::clamp(w, 0.0, 1.0) * static_cast<double>(kLevels) + 0.5);
      char value[16];
      std::snprintf(value, sizeof(value), "%.3f", w);
      const bool hot = j == best;
      if (hot && color) out << "\x1b[1;30;43m";
      out << kRamp[level] << (hot ? '[' : ' ') << value << (hot ? ']' : ' ');
      if (hot && color) out << "\x1b[0m";
      out << ' ';
    }
    out << '\n';
  }
  out << '\n';
  for (std::size_t j = 0; j < report.input_tokens.size(); ++j) {
    out << std::setw(7) << j << "  " << report.input_tokens[j] << '\n';
  }
  return out.str();
}

ReproduceResult reproduce_cmd(const fs::path& manifest_path, const fs::path& out,
                              std::ostream& log) {
  const json manifest = read_json(manifest_path);
  if (manifest.value("format", "") != "medfed-run") {
    throw FormatError(manifest_path.string() + ": not a run manifest");
  }
  TrainOptions options = train_options_from_json(manifest.at("options"));
  options.out = out;
  const std::uint32_t dataset_crc =
      manifest.at("dataset").at("manifest_crc32").get<std::uint32_t>();
  if (file_crc32(options.data / "manifest.json") != dataset_crc) {
    throw FormatError("dataset manifest " + (options.data / "manifest.json").string() +
                      " changed since the run");
  }

  const std::string command = manifest.at("command").get<std::string>();
  fs::path final_checkpoint;
  if (command == "train-centralized") {
    final_checkpoint = train_centralized_cmd(options, log).final_checkpoint;
  } else if (command == "train-federated") {
    final_checkpoint = train_federated_cmd(options, log).final_checkpoint;
  } else {
    throw FormatError("cannot reproduce command '" + command + "'");
  }

  ReproduceResult r;
  r.expected_crc = manifest.at("artifacts").at("final_crc32").get<std::uint32_t>();
  r.actual_crc = file_crc32(final_checkpoint);
  const std::uint32_t metrics_crc =
      manifest.at("artifacts").at("metrics_crc32").get<std::uint32_t>();
  r.identical = r.expected_crc == r.actual_crc &&
                metrics_crc == file_crc32(out / "metrics.csv");
  return r;
}

}  // namespace medfed::cli
