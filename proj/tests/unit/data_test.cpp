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
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "medfed/data.hpp"
#include "medfed/errors.hpp"
#include "test_support.hpp"

namespace medfed {
namespace {

ParsedCorpus parse(const std::string& text) {
  std::istringstream in(text);
  return parse_onehot_csv(in);
}

TEST(ParseCsvTest, OneHotRowBecomesPair) {
  const ParsedCorpus c = parse("s1,s2,s3,disease\n1,0,1,flu\n");
  ASSERT_EQ(c.pairs.size(), 1u);
  EXPECT_EQ(c.pairs[0].symptoms, (std::vector<std::string>{"s1", "s3"}));
  EXPECT_EQ(c.pairs[0].disease, "flu");
  EXPECT_EQ(c.symptom_columns, (std::vector<std::string>{"s1", "s2", "s3"}));
  EXPECT_EQ(c.skipped_rows, 0u);
}

TEST(ParseCsvTest, RowWithoutSymptomsIsSkipped) {
  const ParsedCorpus c = parse("s1,s2,s3,disease\n0,0,0,flu\n0,1,0,cold\n");
  ASSERT_EQ(c.pairs.size(), 1u);
  EXPECT_EQ(c.pairs[0].disease, "cold");
  EXPECT_EQ(c.skipped_rows, 1u);
}

TEST(ParseCsvTest, HeaderNamesNormalized) {
  const ParsedCorpus c = parse(" skin rash ,itching,prognosis\n1,1,Fungal infection\n");
  EXPECT_EQ(c.symptom_columns, (std::vector<std::string>{"skin_rash", "itching"}));
  EXPECT_EQ(c.pairs[0].symptoms, (std::vector<std::string>{"skin_rash", "itching"}));
}

TEST(ParseCsvTest, NonBinaryCellNamesRowAndColumn) {
  try {
    parse("s1,s2,disease\n1,0,flu\n1,2,flu\n");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("s2"), std::string::npos) << msg;
  }
}

TEST(ParseCsvTest, MalformedInputsRejected) {
  EXPECT_THROW(parse(""), FormatError);
  EXPECT_THROW(parse("disease\n"), FormatError);
  EXPECT_THROW(parse("s1,s2,disease\n1,flu\n"), FormatError);
}

TEST(ParseCsvTest, WriteThenParseRoundTrips) {
  const std::vector<std::string> columns{"a", "b", "c"};
  const std::vector<SymptomDiseasePair> pairs{{{"a", "c"}, "x"}, {{"b"}, "y"}};
  std::ostringstream out;
  write_onehot_csv(out, pairs, columns);
  const ParsedCorpus c = parse(out.str());
  EXPECT_EQ(c.pairs, pairs);
  EXPECT_EQ(c.symptom_columns, columns);
}

TEST(NormalizeNameTest, TrimsAndJoinsWords) {
  EXPECT_EQ(normalize_name("  high   fever "), "high_fever");
  EXPECT_EQ(normalize_name("cough"), "cough");
  EXPECT_EQ(normalize_name("   "), "");
}

TEST(PairTest, ValidateRejectsBrokenPairs) {
  EXPECT_NO_THROW((SymptomDiseasePair{{"a"}, "x"}.validate()));
  EXPECT_THROW((SymptomDiseasePair{{}, "x"}.validate()), FormatError);
  EXPECT_THROW((SymptomDiseasePair{{"a"}, ""}.validate()), FormatError);
  EXPECT_THROW((SymptomDiseasePair{{"a", "a"}, "x"}.validate()), FormatError);
}

TEST(TextPairsTest, ParsesAndSkipsComments) {
  std::istringstream in("# fixture\ncough fever\tflu\n\nrash\tpox\n");
  const auto pairs = parse_text_pairs(in);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0], (SymptomDiseasePair{{"cough", "fever"}, "flu"}));
  EXPECT_EQ(pairs[1], (SymptomDiseasePair{{"rash"}, "pox"}));
  std::ostringstream out;
  write_text_pairs(out, pairs);
  std::istringstream again(out.str());
  EXPECT_EQ(parse_text_pairs(again), pairs);
}

TEST(TextPairsTest, MissingTabRejected) {
  std::istringstream in("cough fever flu\n");
  EXPECT_THROW(parse_text_pairs(in), FormatError);
}

TEST(VocabTest, ReservedThenLexicographic) {
  const std::vector<SymptomDiseasePair> pairs{{{"b", "a"}, "y"}, {{"a"}, "x"}};
  const Vocab v = build_vocab(pairs);
  EXPECT_EQ(v.input.id("<pad>"), kPadId);
  EXPECT_EQ(v.input.id("<start>"), kStartId);
  EXPECT_EQ(v.input.id("<end>"), kEndId);
  EXPECT_EQ(v.input.id("<unk>"), kUnkId);
  EXPECT_EQ(v.input.id("a"), 4u);
  EXPECT_EQ(v.input.id("b"), 5u);
  EXPECT_EQ(v.output.id("x"), 4u);
  EXPECT_EQ(v.output.id("y"), 5u);
  EXPECT_EQ(v.input.size(), 6u);
}

TEST(VocabTest, IdTokenRoundTripIsIdentity) {
  const auto corpus = synthesize_corpus({41, 132, 4920, 3});
  const Vocab v = build_vocab(corpus.symptom_columns, corpus.pairs);
  for (const TokenTable* t : {&v.input, &v.output}) {
    for (TokenId id = 0; id < t->size(); ++id) EXPECT_EQ(t->id(t->token(id)), id);
    for (const std::string& tok : t->tokens()) EXPECT_EQ(t->token(t->id(tok)), tok);
  }
  EXPECT_EQ(v.input.size(), 132u + 4);
  EXPECT_EQ(v.output.size(), 41u + 4);
}

TEST(VocabTest, JsonRoundTrip) {
  const std::vector<SymptomDiseasePair> pairs{{{"cough", "fever"}, "flu"}};
  const Vocab v = build_vocab(pairs);
  EXPECT_EQ(Vocab::from_json(v.to_json()), v);
  EXPECT_THROW(Vocab::from_json("{"), FormatError);
}

TEST(VocabTest, UnknownTokenAndBadId) {
  const Vocab v = build_vocab(std::vector<SymptomDiseasePair>{{{"a"}, "x"}});
  EXPECT_FALSE(v.input.contains("zzz"));
  EXPECT_EQ(v.input.id("zzz"), kUnkId);
  EXPECT_THROW(v.input.token(99), OutOfVocabularyError);
}

TEST(VocabTest, FromOrderedValidates) {
  EXPECT_THROW(TokenTable::from_ordered({"a", "b"}), FormatError);
  EXPECT_THROW(TokenTable::from_ordered({"<pad>", "<start>", "<end>", "<unk>", "a", "a"}),
               FormatError);
  EXPECT_EQ(TokenTable::from_ordered({"<pad>", "<start>", "<end>", "<unk>", "b", "a"}).id("b"),
            4u);
}

TEST(TokenizeTest, WrapsWithStartAndEnd) {
  const std::vector<SymptomDiseasePair> pairs{{{"cough", "fever"}, "flu"}};
  const Vocab v = build_vocab(pairs);
  const TokenizedPair t = tokenize(pairs[0], v);
  EXPECT_EQ(t.input_ids, (std::vector<TokenId>{kStartId, v.input.id("cough"),
                                               v.input.id("fever"), kEndId}));
  EXPECT_EQ(t.target_ids, (std::vector<TokenId>{kStartId, v.output.id("flu"), kEndId}));
  EXPECT_EQ(detokenize(t, v), pairs[0]);
}

TEST(TokenizeTest, UnseenSymptomBecomesUnk) {
  const Vocab v = build_vocab(std::vector<SymptomDiseasePair>{{{"cough"}, "flu"}});
  std::size_t unknown = 0;
  const TokenizedPair t = tokenize({{"cough", "sneeze"}, "flu"}, v, &unknown);
  EXPECT_EQ(t.input_ids[2], kUnkId);
  EXPECT_EQ(unknown, 1u);
}

TEST(TokenizeTest, CorpusRoundTripIsLossless) {
  const auto corpus = synthesize_corpus({6, 20, 200, 9});
  const Vocab v = build_vocab(corpus.symptom_columns, corpus.pairs);
  const auto tokens = tokenize_all(corpus.pairs, v);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const TokenizedPair& t = tokens[i];
    EXPECT_EQ(t.input_ids.front(), kStartId);
    EXPECT_EQ(t.input_ids.back(), kEndId);
    EXPECT_EQ(t.target_ids.front(), kStartId);
    EXPECT_EQ(t.target_ids.back(), kEndId);
    EXPECT_EQ(std::count(t.input_ids.begin(), t.input_ids.end(), kPadId), 0);
    EXPECT_EQ(detokenize(t, v), corpus.pairs[i]);
  }
}

std::vector<int> iota_items(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

TEST(ShardTest, TableSizesFormAPartition) {
  const std::vector<int> items = iota_items(4920);
  const std::vector<std::size_t> sizes{1000, 1000, 1000, 1000, 920};
  const auto shards = shard(items, sizes, 42);
  ASSERT_EQ(shards.size(), 5u);
  std::vector<int> all;
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(shards[k].size(), sizes[k]);
    all.insert(all.end(), shards[k].begin(), shards[k].end());
  }
  EXPECT_NE(all, items);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, items);
}

TEST(ShardTest, DeterministicBySeed) {
  const std::vector<int> items = iota_items(100);
  const std::vector<std::size_t> sizes{60, 40};
  EXPECT_EQ(shard(items, sizes, 5), shard(items, sizes, 5));
  EXPECT_NE(shard(items, sizes, 5), shard(items, sizes, 6));
}

TEST(ShardTest, SingleShardIsAPermutation) {
  const std::vector<int> items = iota_items(30);
  const std::vector<std::size_t> sizes{30};
  auto only = shard(items, sizes, 1).at(0);
  std::sort(only.begin(), only.end());
  EXPECT_EQ(only, items);
}

TEST(ShardTest, SizeMismatchIsConfigError) {
  const std::vector<std::size_t> sizes{5, 4};
  EXPECT_THROW(shard(iota_items(10), sizes, 0), ConfigError);
  EXPECT_THROW(shard(iota_items(10), std::span<const std::size_t>{}, 0), ConfigError);
}

TEST(SplitTest, EightyTwenty) {
  const auto [train, test] = split_train_test(iota_items(1000), 0.8, 3);
  EXPECT_EQ(train.size(), 800u);
  EXPECT_EQ(test.size(), 200u);
  const auto [small_train, small_test] = split_train_test(iota_items(10), 0.8, 3);
  EXPECT_EQ(small_train.size(), 8u);
  EXPECT_EQ(small_test.size(), 2u);
  EXPECT_EQ(train_count(920, 0.8), 736u);
}

TEST(SplitTest, PartitionAndDeterminism) {
  const std::vector<int> items = iota_items(57);
  const auto [train, test] = split_train_test(items, 0.8, 11);
  std::set<int> seen(train.begin(), train.end());
  for (int x : test) EXPECT_TRUE(seen.insert(x).second) << x;
  EXPECT_EQ(seen.size(), items.size());
  EXPECT_EQ(split_train_test(items, 0.8, 11), split_train_test(items, 0.8, 11));
}

TEST(SplitTest, TooSmallOrBadFraction) {
  EXPECT_THROW(split_train_test(iota_items(1), 0.8, 0), ConfigError);
  EXPECT_THROW(split_train_test(iota_items(10), 0.0, 0), ConfigError);
  EXPECT_THROW(split_train_test(iota_items(10), 1.0, 0), ConfigError);
  EXPECT_EQ(train_count(2, 0.8), 1u);
  EXPECT_EQ(train_count(3, 0.1), 1u);
}

TEST(ClientShardTest, SplitsAndTokenizes) {
  const auto corpus = synthesize_corpus({4, 12, 50, 1});
  const Vocab v = build_vocab(corpus.symptom_columns, corpus.pairs);
  const ClientShard s = make_client_shard(3, corpus.pairs, v, 0.8, 7);
  EXPECT_EQ(s.client_id, 3);
  EXPECT_EQ(s.train.size(), 40u);
  EXPECT_EQ(s.test.size(), 10u);
}

TEST(SynthesizeTest, PaperShape) {
  const auto corpus = synthesize_corpus({41, 132, 4920, 0});
  EXPECT_EQ(corpus.pairs.size(), 4920u);
  std::set<std::string> diseases, symptoms;
  for (const auto& p : corpus.pairs) {
    EXPECT_NO_THROW(p.validate());
    EXPECT_GE(p.symptoms.size(), 3u);
    diseases.insert(p.disease);
    symptoms.insert(p.symptoms.begin(), p.symptoms.end());
  }
  EXPECT_EQ(diseases.size(), 41u);
  EXPECT_LE(symptoms.size(), 132u);
  for (const auto& set : corpus.disease_symptoms) {
    EXPECT_GE(set.size(), 3u);
    EXPECT_LE(set.size(), 17u);
  }
}

TEST(SynthesizeTest, SmallRangeAndDeterminism) {
  const auto a = synthesize_dataset(2, 4, 10, 8);
  ASSERT_EQ(a.size(), 10u);
  const auto corpus = synthesize_corpus({2, 4, 10, 8});
  for (const auto& p : a) {
    EXPECT_TRUE(p.disease == corpus.disease_names[0] || p.disease == corpus.disease_names[1]);
  }
  EXPECT_EQ(a, synthesize_dataset(2, 4, 10, 8));
  EXPECT_NE(a, synthesize_dataset(2, 4, 10, 9));
}

TEST(SynthesizeTest, InvalidCountsRejected) {
  EXPECT_THROW(synthesize_dataset(1, 4, 10, 0), ConfigError);
  EXPECT_THROW(synthesize_dataset(5, 4, 10, 0), ConfigError);
}

// For each disease remember its most frequent symptom set; classify held-out
// samples by the disease whose sets overlap them most.
TEST(SynthesizeTest, FrequencyClassifierSeparatesDiseases) {
  const auto corpus = synthesize_corpus({41, 132, 4920, 17});
  const auto [train, test] = split_train_test(corpus.pairs, 0.8, 17);
  std::map<std::string, std::map<std::string, int>> counts;
  std::map<std::string, int> disease_count;
  for (const auto& p : train) {
    ++disease_count[p.disease];
    for (const auto& s : p.symptoms) ++counts[p.disease][s];
  }
  std::map<std::string, std::set<std::string>> frequent;
  for (const auto& [d, c] : counts) {
    for (const auto& [s, n] : c) {
      if (2 * n >= disease_count[d] / 4) frequent[d].insert(s);
    }
  }
  std::size_t correct = 0;
  for (const auto& p : test) {
    std::string best;
    double best_score = -1;
    for (const auto& [d, set] : frequent) {
      double score = 0;
      for (const auto& s : p.symptoms) score += set.count(s) ? 1.0 : -1.0;
      score -= 0.01 * static_cast<double>(set.size());
      if (score > best_score) {
        best_score = score;
        best = d;
      }
    }
    correct += best == p.disease;
  }
  EXPECT_GT(static_cast<double>(correct) / static_cast<double>(test.size()), 0.9);
}

}  // namespace
}  // namespace medfed
