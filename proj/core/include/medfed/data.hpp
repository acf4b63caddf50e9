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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "medfed/errors.hpp"
#include "medfed/model.hpp"
#include "medfed/rng.hpp"

namespace medfed {

struct SymptomDiseasePair {
  std::vector<std::string> symptoms;
  std::string disease;

  /// Throws FormatError unless symptoms are non-empty, names are non-empty
  /// and no symptom repeats.
  void validate() const;
  friend bool operator==(const SymptomDiseasePair&,
                         const SymptomDiseasePair&) = default;
};

/// Trimmed name with runs of inner whitespace replaced by '_'.
std::string normalize_name(std::string_view raw);

struct ParsedCorpus {
  std::vector<SymptomDiseasePair> pairs;
  /// Symptom column names in header order.
  std::vector<std::string> symptom_columns;
  /// Rows without any symptom set to 1.
  std::size_t skipped_rows = 0;
};

/// One-hot CSV: header of symptom columns followed by the disease column,
/// cells 0/1. Header names are trimmed and inner spaces become '_'.
ParsedCorpus parse_onehot_csv(std::istream& in);
ParsedCorpus parse_onehot_csv(const std::filesystem::path& path);
void write_onehot_csv(std::ostream& out,
                      std::span<const SymptomDiseasePair> pairs,
                      std::span<const std::string> symptom_columns);

/// Text pairs: "symptom symptom ...<TAB>disease" per line. Blank lines and
/// lines starting with '#' are ignored.
std::vector<SymptomDiseasePair> parse_text_pairs(std::istream& in);
std::vector<SymptomDiseasePair> read_text_pairs(const std::filesystem::path& path);
void write_text_pairs(std::ostream& out,
                      std::span<const SymptomDiseasePair> pairs);

/// Dense token ↔ id map with the four reserved tokens at ids 0..3.
class TokenTable {
 public:
  TokenTable();
  /// Reserved tokens first, then `tokens` in lexicographic order.
  explicit TokenTable(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;
  /// Id of `token`, or kUnkId when absent.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Rebuilds from an id-ordered token list (as stored on disk).
  static TokenTable from_ordered(std::vector<std::string> tokens);

  friend bool operator==(const TokenTable& a, const TokenTable& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kStartToken = "<start>";
inline constexpr std::string_view kEndToken = "<end>";
inline constexpr std::string_view kUnkToken = "<unk>";

struct Vocab {
  TokenTable input;   // symptoms
  TokenTable output;  // diseases

  std::string to_json() const;
  static Vocab from_json(std::string_view text);
  friend bool operator==(const Vocab&, const Vocab&) = default;
};

Vocab build_vocab(std::span<const SymptomDiseasePair> pairs);
/// Vocabulary from a corpus header plus the diseases present, so every
/// column gets an id even if no row uses it.
Vocab build_vocab(std::span<const std::string> symptom_columns,
                  std::span<const SymptomDiseasePair> pairs);

struct TokenizedPair {
  std::vector<TokenId> input_ids;   // <start> symptoms... <end>
  std::vector<TokenId> target_ids;  // <start> disease <end>
  friend bool operator==(const TokenizedPair&, const TokenizedPair&) = default;
};

/// Unknown names map to <unk>; `unknown_count`, when given, is incremented
/// once per unknown token.
TokenizedPair tokenize(const SymptomDiseasePair& pair, const Vocab& vocab,
                       std::size_t* unknown_count = nullptr);
std::vector<TokenizedPair> tokenize_all(std::span<const SymptomDiseasePair> pairs,
                                        const Vocab& vocab);
/// Inverse of tokenize for in-vocabulary tokens (start/end stripped).
SymptomDiseasePair detokenize(const TokenizedPair& pair, const Vocab& vocab);

struct ClientShard {
  int client_id = 0;
  std::vector<TokenizedPair> train;
  std::vector<TokenizedPair> test;
};

/// Seeded shuffle followed by contiguous slicing into `sizes`.
template <class T>
std::vector<std::vector<T>> shard(const std::vector<T>& items,
                                  std::span<const std::size_t> sizes,
                                  std::uint64_t seed) {
  const std::size_t total =
      std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (sizes.empty() || total != items.size()) {
    throw ConfigError("shard sizes sum to " + std::to_string(total) +
                      " but there are " + std::to_string(items.size()) +
                      " items");
  }
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, "shard");
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<T>> out;
  out.reserve(sizes.size());
  std::size_t cursor = 0;
  for (std::size_t size : sizes) {
    std::vector<T> part;
    part.reserve(size);
    for (std::size_t i = 0; i < size; ++i) part.push_back(items[order[cursor++]]);
    out.push_back(std::move(part));
  }
  return out;
}

/// Number of training items for a split of n items: round(fraction·n),
/// clamped to [1, n−1] so neither side is empty.
std::size_t train_count(std::size_t n, double fraction);

template <class T>
std::pair<std::vector<T>, std::vector<T>> split_train_test(
    const std::vector<T>& items, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1), got " +
                      std::to_string(fraction));
  }
  if (items.size() < 2) {
    throw ConfigError("cannot split " + std::to_string(items.size()) +
                      " items into train and test: too small");
  }
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, "split");
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = train_count(items.size(), fraction);
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.first : out.second).push_back(items[order[i]]);
  }
  return out;
}

/// Splits one client's pairs and tokenizes both halves.
ClientShard make_client_shard(int client_id,
                              const std::vector<SymptomDiseasePair>& pairs,
                              const Vocab& vocab, double train_fraction,
                              std::uint64_t seed);

struct SyntheticSpec {
  std::size_t n_diseases = 41;
  std::size_t n_symptoms = 132;
  std::size_t n_samples = 4920;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<SymptomDiseasePair> pairs;
  std::vector<std::string> symptom_columns;
  /// Characteristic symptom set of each disease (core symptoms first).
  std::vector<std::vector<std::string>> disease_symptoms;
  std::vector<std::string> disease_names;
};

/// Learnable stand-in corpus. Every disease owns a disjoint core of symptoms
/// plus a few symptoms from a shared noise pool (3–17 in total); each sample
/// picks a disease uniformly and a random subset of at least three of its
/// symptoms that always contains a core symptom.
SyntheticCorpus synthesize_corpus(const SyntheticSpec& spec);
std::vector<SymptomDiseasePair> synthesize_dataset(std::size_t n_diseases,
                                                   std::size_t n_symptoms,
                                                   std::size_t n_samples,
                                                   std::uint64_t seed);

}  // namespace medfed
