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

#include "medfed/data.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace medfed {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> tokens{
      std::string(kPadToken), std::string(kStartToken), std::string(kEndToken),
      std::string(kUnkToken)};
  return tokens;
}

std::string zero_padded(std::string_view prefix, std::size_t value,
                        std::size_t count) {
  const std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
  std::string digits = std::to_string(value);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(prefix) + digits;
}

}  // namespace

std::string normalize_name(std::string_view raw) {
  const std::string t = trim(raw);
  std::string out;
  out.reserve(t.size());
  bool in_space = false;
  for (char c : t) {
    if (c == ' ' || c == '\t') {
      if (!in_space) out.push_back('_');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  return out;
}


void SymptomDiseasePair::validate() const {
  if (symptoms.empty()) throw FormatError("pair has no symptoms");
  if (disease.empty()) throw FormatError("pair has an empty disease name");
  std::set<std::string_view> seen;
  for (const auto& s : symptoms) {
    if (s.empty()) throw FormatError("pair has an empty symptom name");
    if (!seen.insert(s).second) {
      throw FormatError("symptom '" + s + "' repeated within a pair");
    }
  }
}

ParsedCorpus parse_onehot_csv(std::istream& in) {
  ParsedCorpus corpus;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("CSV is empty");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = normalize_name(h);
  // Some exports carry trailing empty columns.
  while (!header.empty() && header.back().empty()) header.pop_back();
  if (header.size() < 2) {
    throw FormatError("CSV header needs symptom columns and a disease column");
  }
  const std::size_t n_symptoms = header.size() - 1;
  corpus.symptom_columns.assign(header.begin(), header.end() - 1);
  for (std::size_t c = 0; c < n_symptoms; ++c) {
    if (corpus.symptom_columns[c].empty()) {
      throw FormatError("CSV header column " + std::to_string(c + 1) +
                        " is empty");
    }
  }

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() < header.size()) {
      throw FormatError("CSV row " + std::to_string(row) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(header.size()));
    }
    for (std::size_t c = header.size(); c < cells.size(); ++c) {
      if (!trim(cells[c]).empty()) {
        throw FormatError("CSV row " + std::to_string(row) +
                          " has extra non-empty cells");
      }
    }
    SymptomDiseasePair pair;
    for (std::size_t c = 0; c < n_symptoms; ++c) {
      const std::string v = trim(cells[c]);
      if (v == "1") {
        pair.symptoms.push_back(corpus.symptom_columns[c]);
      } else if (v != "0") {
        throw FormatError("CSV row " + std::to_string(row) + ", column '" +
                          corpus.symptom_columns[c] + "': non-binary cell '" +
                          v + "'");
      }
    }
    pair.disease = normalize_name(cells[n_symptoms]);
    if (pair.disease.empty()) {
      throw FormatError("CSV row " + std::to_string(row) +
                        " has an empty disease label");
    }
    if (pair.symptoms.empty()) {
      ++corpus.skipped_rows;
      continue;
    }
    pair.validate();
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

ParsedCorpus parse_onehot_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open CSV " + path.string());
  return parse_onehot_csv(in);
}

void write_onehot_csv(std::ostream& out,
                      std::span<const SymptomDiseasePair> pairs,
                      std::span<const std::string> symptom_columns) {
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < symptom_columns.size(); ++c) {
    out << symptom_columns[c] << ',';
    column.emplace(symptom_columns[c], c);
  }
  out << "prognosis\n";
  std::vector<char> cells(symptom_columns.size());
  for (const auto& pair : pairs) {
    std::fill(cells.begin(), cells.end(), '0');
    for (const auto& s : pair.symptoms) {
      const auto it = column.find(s);
      if (it == column.end()) {
        throw FormatError("symptom '" + s + "' is not a CSV column");
      }
      cells[it->second] = '1';
    }
    for (char c : cells) out << c << ',';
    out << pair.disease << '\n';
  }
}

std::vector<SymptomDiseasePair> parse_text_pairs(std::istream& in) {
  std::vector<SymptomDiseasePair> pairs;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("text pair line " + std::to_string(row) +
                        " has no TAB separator");
    }
    SymptomDiseasePair pair;
    std::istringstream symptoms(line.substr(0, tab));
    std::string s;
    while (symptoms >> s) pair.symptoms.push_back(s);
    pair.disease = normalize_name(line.substr(tab + 1));
    try {
      pair.validate();
    } catch (const FormatError& e) {
      throw FormatError("text pair line " + std::to_string(row) + ": " +
                        e.what());
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::vector<SymptomDiseasePair> read_text_pairs(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return parse_text_pairs(in);
}

void write_text_pairs(std::ostream& out,
                      std::span<const SymptomDiseasePair> pairs) {
  for (const auto& pair : pairs) {
    for (std::size_t i = 0; i < pair.symptoms.size(); ++i) {
      if (i) out << ' ';
      out << pair.symptoms[i];
    }
    out << '\t' << pair.disease << '\n';
  }
}

TokenTable::TokenTable() : TokenTable(std::vector<std::string>{}) {}

TokenTable::TokenTable(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  tokens_ = reserved_tokens();
  for (auto& t : tokens) {
    if (std::find(tokens_.begin(), tokens_.end(), t) != tokens_.end()) {
      throw FormatError("token '" + t + "' collides with a reserved token");
    }
    tokens_.push_back(std::move(t));
  }
  for (TokenId i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], i);
}

TokenTable TokenTable::from_ordered(std::vector<std::string> tokens) {
  const auto& reserved = reserved_tokens();
  if (tokens.size() < reserved.size() ||
      !std::equal(reserved.begin(), reserved.end(), tokens.begin())) {
    throw FormatError("token list must start with the reserved tokens");
  }
  TokenTable table;
  table.tokens_ = std::move(tokens);
  table.ids_.clear();
  for (TokenId i = 0; i < table.tokens_.size(); ++i) {
    if (!table.ids_.emplace(table.tokens_[i], i).second) {
      throw FormatError("duplicate token '" + table.tokens_[i] + "'");
    }
  }
  return table;
}

bool TokenTable::contains(std::string_view token) const {
  return ids_.contains(std::string(token));
}

TokenId TokenTable::id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& TokenTable::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw OutOfVocabularyError("token id " + std::to_string(id) +
                               " outside vocabulary of " +
                               std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::string Vocab::to_json() const {
  nlohmann::json j;
  j["input"] = input.tokens();
  j["output"] = output.tokens();
  return j.dump(2);
}

Vocab Vocab::from_json(std::string_view text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    Vocab v;
    v.input = TokenTable::from_ordered(j.at("input").get<std::vector<std::string>>());
    v.output =
        TokenTable::from_ordered(j.at("output").get<std::vector<std::string>>());
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("vocab JSON: ") + e.what());
  }
}

Vocab build_vocab(std::span<const SymptomDiseasePair> pairs) {
  return build_vocab(std::span<const std::string>{}, pairs);
}

Vocab build_vocab(std::span<const std::string> symptom_columns,
                  std::span<const SymptomDiseasePair> pairs) {
  if (pairs.empty() && symptom_columns.empty()) {
    throw ConfigError("cannot build a vocabulary from an empty corpus");
  }
  std::set<std::string> symptoms(symptom_columns.begin(), symptom_columns.end());
  std::set<std::string> diseases;
  for (const auto& p : pairs) {
    symptoms.insert(p.symptoms.begin(), p.symptoms.end());
    diseases.insert(p.disease);
  }
  return Vocab{TokenTable({symptoms.begin(), symptoms.end()}),
               TokenTable({diseases.begin(), diseases.end()})};
}

TokenizedPair tokenize(const SymptomDiseasePair& pair, const Vocab& vocab,
                       std::size_t* unknown_count) {
  TokenizedPair out;
  out.input_ids.reserve(pair.symptoms.size() + 2);
  out.input_ids.push_back(kStartId);
  for (const auto& s : pair.symptoms) {
    const TokenId id = vocab.input.id(s);
    if (id == kUnkId && unknown_count) ++*unknown_count;
    out.input_ids.push_back(id);
  }
  out.input_ids.push_back(kEndId);
  const TokenId disease = vocab.output.id(pair.disease);
  if (disease == kUnkId && unknown_count) ++*unknown_count;
  out.target_ids = {kStartId, disease, kEndId};
  return out;
}

std::vector<TokenizedPair> tokenize_all(std::span<const SymptomDiseasePair> pairs,
                                        const Vocab& vocab) {
  std::vector<TokenizedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(tokenize(p, vocab));
  return out;
}

SymptomDiseasePair detokenize(const TokenizedPair& pair, const Vocab& vocab) {
  auto strip = [](const std::vector<TokenId>& ids) {
    std::vector<TokenId> inner;
    for (TokenId id : ids) {
      if (id != kStartId && id != kEndId && id != kPadId) inner.push_back(id);
    }
    return inner;
  };
  SymptomDiseasePair out;
  for (TokenId id : strip(pair.input_ids)) {
    out.symptoms.push_back(vocab.input.token(id));
  }
  const auto target = strip(pair.target_ids);
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (i) out.disease += ' ';
    out.disease += vocab.output.token(target[i]);
  }
  return out;
}

std::size_t train_count(std::size_t n, double fraction) {
  const auto rounded =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(rounded, 1, n - 1);
}

ClientShard make_client_shard(int client_id,
                              const std::vector<SymptomDiseasePair>& pairs,
                              const Vocab& vocab, double train_fraction,
                              std::uint64_t seed) {
  auto [train, test] = split_train_test(
      pairs, train_fraction, derive_seed(seed, "client-split",
                                         static_cast<std::uint64_t>(client_id)));
  ClientShard shard;
  shard.client_id = client_id;
  shard.train = tokenize_all(train, vocab);
  shard.test = tokenize_all(test, vocab);
  return shard;
}

SyntheticCorpus synthesize_corpus(const SyntheticSpec& spec) {
  if (spec.n_diseases < 2) throw ConfigError("need at least 2 diseases");
  if (spec.n_symptoms < spec.n_diseases) {
    throw ConfigError("need at least as many symptoms as diseases");
  }
  if (spec.n_samples == 0) throw ConfigError("need at least one sample");

  constexpr std::size_t kMinSet = 3;
  constexpr std::size_t kMaxSet = 17;
  constexpr std::size_t kMaxCore = 3;

  Rng rng = make_rng(spec.seed, "synthesize");
  SyntheticCorpus corpus;
  for (std::size_t s = 0; s < spec.n_symptoms; ++s) {
    corpus.symptom_columns.push_back(zero_padded("symptom_", s, spec.n_symptoms));
  }
  for (std::size_t d = 0; d < spec.n_diseases; ++d) {
    corpus.disease_names.push_back(zero_padded("disease_", d, spec.n_diseases));
  }

  // Two thirds of the symptoms form disjoint per-disease cores; the rest is
  // a noise pool shared between diseases.
  const std::size_t core_size = std::clamp<std::size_t>(
      spec.n_symptoms * 2 / 3 / spec.n_diseases, 1, kMaxCore);
  std::vector<std::size_t> perm(spec.n_symptoms);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::vector<std::size_t> noise_pool(
      perm.begin() + static_cast<std::ptrdiff_t>(core_size * spec.n_diseases),
      perm.end());

  std::vector<std::vector<std::size_t>> sets(spec.n_diseases);
  for (std::size_t d = 0; d < spec.n_diseases; ++d) {
    auto& set = sets[d];
    set.assign(perm.begin() + static_cast<std::ptrdiff_t>(d * core_size),
               perm.begin() + static_cast<std::ptrdiff_t>((d + 1) * core_size));
    const std::size_t lo = kMinSet > core_size ? kMinSet - core_size : 0;
    const std::size_t hi = std::min(kMaxSet - core_size, noise_pool.size());
    const std::size_t extra =
        std::uniform_int_distribution<std::size_t>(std::min(lo, hi), hi)(rng);
    std::vector<std::size_t> pool = noise_pool;
    std::shuffle(pool.begin(), pool.end(), rng);
    set.insert(set.end(), pool.begin(),
               pool.begin() + static_cast<std::ptrdiff_t>(extra));
    std::vector<std::string> names;
    for (std::size_t s : set) names.push_back(corpus.symptom_columns[s]);
    corpus.disease_symptoms.push_back(std::move(names));
  }

  std::uniform_int_distribution<std::size_t> pick_disease(0, spec.n_diseases - 1);
  corpus.pairs.reserve(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const std::size_t d = pick_disease(rng);
    const auto& set = sets[d];
    const std::size_t count = std::uniform_int_distribution<std::size_t>(
        std::min(kMinSet, set.size()), set.size())(rng);
    // Always keep one core symptom so the disease stays recoverable.
    const std::size_t anchor =
        std::uniform_int_distribution<std::size_t>(0, core_size - 1)(rng);
    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < set.size(); ++k) {
      if (k != anchor) rest.push_back(set[k]);
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    std::vector<std::size_t> chosen{set[anchor]};
    chosen.insert(chosen.end(), rest.begin(),
                  rest.begin() + static_cast<std::ptrdiff_t>(count - 1));
    std::sort(chosen.begin(), chosen.end());  // column order
    SymptomDiseasePair pair;
    for (std::size_t s : chosen) pair.symptoms.push_back(corpus.symptom_columns[s]);
    pair.disease = corpus.disease_names[d];
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

std::vector<SymptomDiseasePair> synthesize_dataset(std::size_t n_diseases,
                                                   std::size_t n_symptoms,
                                                   std::size_t n_samples,
                                                   std::uint64_t seed) {
  return synthesize_corpus({n_diseases, n_symptoms, n_samples, seed}).pairs;
}

}  // namespace medfed
