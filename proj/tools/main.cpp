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

#include <filesystem>
#include <iostream>
#include <string>

#include <malloc.h>
#include <unistd.h>

#include "CLI11.hpp"
#include "commands.hpp"
#include "medfed/errors.hpp"

namespace {

using namespace medfed;
using namespace medfed::cli;

void add_model_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--preset", o.model.preset, "Model size preset: desk or paper")
      ->capture_default_str();
  cmd->add_option("--hidden", o.model.hidden, "Hidden units (overrides the preset)");
  cmd->add_option("--embed", o.model.embed, "Embedding size (overrides the preset)");
  cmd->add_option("--attention", o.model.attention,
                  "Attention units (default: hidden)");
}

void add_train_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--data", o.data, "Dataset directory from prepare-data")->required();
  cmd->add_option("--out", o.out, "Run directory for metrics and checkpoints")
      ->required();
  cmd->add_option("--seed", o.seed, "Root seed")->capture_default_str();
  cmd->add_option("--batch-size", o.batch_size)->capture_default_str();
  cmd->add_option("--lr", o.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--optimizer", o.optimizer, "adam or sgd")->capture_default_str();
  cmd->add_option("--clip", o.clip, "Global gradient-norm clip, 0 disables")
      ->capture_default_str();
  add_model_flags(cmd, o);
}

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "medfed: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  // Training allocates and frees many mid-sized tensors per step; keep them
  // on the heap instead of mmap/munmap round trips.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  CLI::App app{"Federated encoder-decoder disease prediction"};
  app.require_subcommand(1);

  PrepareOptions prepare;
  std::string sizes;
  auto* prep = app.add_subcommand("prepare-data", "Shard a corpus into client datasets");
  prep->add_option("--input", prepare.input, "One-hot symptom CSV");
  prep->add_flag("--synthetic", prepare.synthetic, "Generate the synthetic benchmark");
  prep->add_option("--clients", prepare.clients, "Number of clients")
      ->capture_default_str();
  prep->add_option("--sizes", sizes, "Comma-separated shard sizes");
  prep->add_option("--seed", prepare.seed)->capture_default_str();
  prep->add_option("--diseases", prepare.diseases, "Synthetic diseases")
      ->capture_default_str();
  prep->add_option("--symptoms", prepare.symptoms, "Synthetic symptoms")
      ->capture_default_str();
  prep->add_option("--samples", prepare.samples, "Synthetic samples")
      ->capture_default_str();
  prep->add_option("--train-fraction", prepare.train_fraction)->capture_default_str();
  prep->add_option("--out", prepare.out, "Output directory")->required();

  TrainOptions central;
  auto* cen = app.add_subcommand("train-centralized", "Train one client's model alone");
  add_train_flags(cen, central);
  cen->add_option("--client", central.client, "Client id (1-based)")
      ->capture_default_str();
  cen->add_option("--epochs", central.epochs)->capture_default_str();
  cen->add_option("--checkpoint-every", central.checkpoint_every,
                  "Also checkpoint every N epochs")
      ->capture_default_str();

  TrainOptions fed;
  auto* fedcmd = app.add_subcommand("train-federated", "Run federated averaging");
  add_train_flags(fedcmd, fed);
  fedcmd->add_option("--rounds", fed.rounds)->capture_default_str();
  fedcmd->add_option("--local-epochs", fed.local_epochs)->capture_default_str();
  fedcmd->add_option("--clients", fed.clients, "Use only the first K shards");
  fedcmd->add_option("--mode", fed.mode, "weighted or uniform")->capture_default_str();
  fedcmd->add_option("--transport", fed.transport, "in-process or socket")
      ->capture_default_str();
  fedcmd->add_flag("!--sequential", fed.parallel, "Train clients one at a time");

  EvaluateOptions eval;
  auto* evalcmd = app.add_subcommand("evaluate", "Compare checkpoints on pooled data");
  evalcmd->add_option("--data", eval.data, "Dataset directory")->required();
  evalcmd->add_option("--checkpoint", eval.checkpoints, "Checkpoint (repeatable)")
      ->required();
  evalcmd->add_option("--csv", eval.csv, "Also write the table as CSV");

  InferOptions infer;
  bool no_color = false;
  auto* infcmd = app.add_subcommand("infer", "Predict diseases with attention");
  infcmd->add_option("--checkpoint", infer.checkpoint)->required();
  infcmd->add_option("--vocab", infer.vocab)->required();
  infcmd->add_option("--symptoms", infer.symptoms, "Comma-separated symptoms")
      ->required();
  infcmd->add_option("--top-k", infer.top_k, "List the k most-weighted symptoms");
  infcmd->add_option("--max-len", infer.max_len)->capture_default_str();
  infcmd->add_option("--json", infer.json, "Write the attention matrix as JSON");
  infcmd->add_flag("--no-color", no_color, "Plain heatmap");

  std::filesystem::path manifest, repro_out;
  auto* repro = app.add_subcommand("reproduce", "Re-run a run manifest and compare");
  repro->add_option("--manifest", manifest, "run_manifest.json")->required();
  repro->add_option("--out", repro_out, "Run directory for the re-run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (prep->parsed()) {
      if (!sizes.empty()) {
        for (const auto& s : CLI::detail::split(sizes, ',')) {
          try {
            prepare.sizes.push_back(std::stoul(s));
          } catch (const std::logic_error&) {
            throw UsageError("--sizes: '" + s + "' is not a count");
          }
        }
      }
      prepare_data(prepare, std::cout);
    } else if (cen->parsed()) {
      train_centralized_cmd(central, std::cout);
    } else if (fedcmd->parsed()) {
      train_federated_cmd(fed, std::cout);
    } else if (evalcmd->parsed()) {
      evaluate_cmd(eval, std::cout);
    } else if (infcmd->parsed()) {
      infer.color = !no_color && isatty(1);
      infer_cmd(infer, std::cout, std::cerr);
    } else if (repro->parsed()) {
      const ReproduceResult r = reproduce_cmd(manifest, repro_out, std::cout);
      if (!r.identical) {
        std::cerr << "medfed: reproduction differs (final checkpoint crc "
                  << std::hex << r.actual_crc << ", expected " << r.expected_crc
                  << ")\n";
        return kExitFailure;
      }
      std::cout << "reproduced bit-for-bit\n";
    }
  } catch (const UsageError& e) {
    return report("usage error", e, kExitUsage);
  } catch (const ConfigError& e) {
    return report("usage error", e, kExitUsage);
  } catch (const DivergenceError& e) {
    std::cerr << "medfed: training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const NumericError& e) {
    return report("numeric error", e, kExitDivergence);
  } catch (const IoError& e) {
    return report("I/O error", e, kExitIo);
  } catch (const std::filesystem::filesystem_error& e) {
    return report("I/O error", e, kExitIo);
  } catch (const FormatError& e) {
    return report("data error", e, kExitData);
  } catch (const DecodeError& e) {
    return report("data error", e, kExitData);
  } catch (const DimensionError& e) {
    return report("data error", e, kExitData);
  } catch (const OutOfVocabularyError& e) {
    return report("data error", e, kExitData);
  } catch (const std::exception& e) {
    return report("error", e, kExitFailure);
  }
  return kExitOk;
}
