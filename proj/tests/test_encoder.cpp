// Copyright 2026 The Tabsal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>

#include <doctest.h>

#include "tabsal/encoder.hpp"
#include "tabsal/error.hpp"
#include "tabsal/rng.hpp"
#include "tabsal/synthgen.hpp"
#include "testutil.hpp"

namespace {

using namespace tabsal;

TEST_SUITE("encoder") {

TEST_CASE("vocab: reserved ids are fixed, two tokens give size 7") {
  Dataset d;
  d.tables.emplace("t", Table{"t", "", {}, {}, {}});
  d.instances = {testutil::fixture_instance("i1", "t", {"a", "b", "a"}, 1,
                                            Difficulty::kSimple, Split::kTrain)};
  Vocab v = Vocab::build(d);
  CHECK(v.size() == 7);
  CHECK(v.id("[PAD]") == 0);
  CHECK(v.id("[CLS]") == 1);
  CHECK(v.id("[SEP]") == 2);
  CHECK(v.id("[MASK]") == 3);
  CHECK(v.id("[UNK]") == 4);
  CHECK(v.id("a") == 5);  // higher frequency first
  CHECK(v.id("b") == 6);
}

TEST_CASE("vocab: identical dataset twice gives identical ids") {
  Dataset d = testutil::fixture_dataset();
  Vocab a = Vocab::build(d);
  Vocab b = Vocab::build(d);
  CHECK(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) CHECK(a.token(i) == b.token(i));
}

TEST_CASE("vocab: val-only token encodes as [UNK]") {
  Dataset d = testutil::fixture_dataset();
  d.instances[3].statement = {"zzzunseen", "token", "."};  // val split
  Vocab v = Vocab::build(d);
  CHECK(v.id("zzzunseen") == Vocab::kUnk);
  EncodedInput enc = encode({"zzzunseen"}, d.tables.at("t2"), v, 32);
  CHECK(enc.token_ids[1] == Vocab::kUnk);
}

TEST_CASE("vocab: save/load round trip preserves ids") {
  Dataset d = testutil::fixture_dataset();
  Vocab v = Vocab::build(d);
  testutil::TempDir dir("vocab");
  v.save(dir.path() / "vocab.txt");
  Vocab loaded = Vocab::load(dir.path() / "vocab.txt");
  CHECK(loaded.size() == v.size());
  for (int i = 0; i < v.size(); ++i) CHECK(loaded.token(i) == v.token(i));
}

TEST_CASE("numeric_ranks: dense ascending ranks") {
  CHECK(numeric_ranks({"10", "3", "7"}) == std::vector<int>{3, 1, 2});
  CHECK(numeric_ranks({"5", "5", "2"}) == std::vector<int>{2, 2, 1});
  CHECK(numeric_ranks({}) == std::vector<int>{});
  CHECK_THROWS_AS(numeric_ranks({"5", "x"}), ParseError);
}

TEST_CASE("numeric_ranks agrees with a sort-based oracle on random columns") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_u64(12));
    std::vector<std::string> cells(n);
    std::vector<double> values(n);
    for (int i = 0; i < n; ++i) {
      values[i] = static_cast<double>(rng.uniform_int(-20, 20));
      cells[i] = std::to_string(static_cast<int>(values[i]));
    }
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> expect(n);
    for (int i = 0; i < n; ++i)
      expect[i] = 1 + static_cast<int>(std::lower_bound(sorted.begin(),
                                                        sorted.end(),
                                                        values[i]) -
                                       sorted.begin());
    CHECK(numeric_ranks(cells) == expect);
  }
}

TEST_CASE("encode: hand layout of the minimal fixture") {
  // statement [a, b], 1x1 table with header "h" and cell "c"
  Dataset d;
  Table t;
  t.table_id = "t";
  t.header = {"h"};
  t.column_types = {ColumnType::kText};
  t.rows = {{"c"}};
  d.tables.emplace("t", t);
  d.instances = {testutil::fixture_instance("i", "t", {"a", "b"}, 1,
                                            Difficulty::kSimple, Split::kTrain)};
  Vocab v = Vocab::build(d);
  EncodedInput enc = encode({"a", "b"}, t, v, 8);

  CHECK(enc.attention_len == 6);  // [CLS] a b [SEP] h c
  CHECK(enc.token_ids[0] == Vocab::kCls);
  CHECK(enc.token_ids[1] == v.id("a"));
  CHECK(enc.token_ids[2] == v.id("b"));
  CHECK(enc.token_ids[3] == Vocab::kSep);
  CHECK(enc.token_ids[4] == v.id("h"));
  CHECK(enc.token_ids[5] == v.id("c"));
  CHECK(enc.segment_ids == std::vector<int32_t>{0, 0, 0, 0, 1, 1, 0, 0});
  CHECK(enc.col_ids == std::vector<int32_t>{0, 0, 0, 0, 1, 1, 0, 0});
  CHECK(enc.row_ids[4] == 0);  // header sentinel row
  CHECK(enc.row_ids[5] == 1);  // first data row
  CHECK(enc.rank_ids == std::vector<int32_t>(8, 0));  // text column: no ranks
  CHECK(enc.position_ids == std::vector<int32_t>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(enc.token_ids[6] == Vocab::kPad);
  CHECK(enc.token_ids[7] == Vocab::kPad);
}

TEST_CASE("encode: statement positions always carry segment 0") {
  Table t = testutil::fixture_table("t");
  Dataset d;
  d.tables.emplace("t", t);
  d.instances = {testutil::fixture_instance("i", "t", {"alice", "wins"}, 1,
                                            Difficulty::kSimple, Split::kTrain)};
  Vocab v = Vocab::build(d);
  EncodedInput enc = encode({"alice", "wins"}, t, v, 32);
  for (int i = 0; i < 4; ++i) CHECK(enc.segment_ids[i] == 0);
}

TEST_CASE("encode: numeric ranks appear only in numeric columns") {
  Table t = testutil::fixture_table("t");  // scores 12, 9, 31
  Dataset d;
  d.tables.emplace("t", t);
  d.instances = {testutil::fixture_instance("i", "t", {"alice"}, 1,
                                            Difficulty::kSimple, Split::kTrain)};
  Vocab v = Vocab::build(d);
  EncodedInput enc = encode({"alice"}, t, v, 32);
  // layout: [CLS] alice [SEP] | player score city | alice 12 salem | ...
  const int header_start = 3;
  CHECK(enc.rank_ids[header_start + 1] == 0);  // header cell of numeric column
  const int row1 = header_start + 3;
  CHECK(enc.rank_ids[row1 + 1] == 2);  // 12 ranks 2nd of {9, 12, 31}
  CHECK(enc.rank_ids[row1 + 4] == 1);  // 9 ranks 1st
  CHECK(enc.rank_ids[row1 + 7] == 3);  // 31 ranks 3rd
  CHECK(enc.rank_ids[row1 + 2] == 0);  // text column cell
}

TEST_CASE("encode: truncation drops whole trailing rows only") {
  Table t = testutil::fixture_table("t");
  Dataset d;
  d.tables.emplace("t", t);
  d.instances = {testutil::fixture_instance("i", "t", {"alice"}, 1,
                                            Difficulty::kSimple, Split::kTrain)};
  Vocab v = Vocab::build(d);
  // [CLS] alice [SEP] = 3; header = 3; each data row = 3.
  // max_len 10 fits header + 2 rows but the trailing row only partially.
  EncodedInput enc = encode({"alice"}, t, v, 10);
  CHECK(enc.attention_len == 9);  // 3 + header + one whole data row
  CHECK(enc.row_ids[enc.attention_len - 1] == 1);

  // A longer budget admits the second row completely.
  EncodedInput enc2 = encode({"alice"}, t, v, 12);
  CHECK(enc2.attention_len == 12);
  CHECK(enc2.row_ids[11] == 2);
}

TEST_CASE("encode: oversized statement raises StatementTooLong") {
  Table t = testutil::fixture_table("t");
  Dataset d;
  d.tables.emplace("t", t);
  d.instances = {testutil::fixture_instance("i", "t", {"alice"}, 1,
                                            Difficulty::kSimple, Split::kTrain)};
  Vocab v = Vocab::build(d);
  std::vector<std::string> stmt(31, "alice");
  CHECK_THROWS_AS(encode(stmt, t, v, 32), StatementTooLong);
}

TEST_CASE("decode property: statement and a table prefix reconstruct") {
  GenConfig c;
  c.tables_train = 3;
  c.tables_val = 1;
  c.tables_test = 1;
  c.statements_per_table = 4;
  c.seed = 31;
  GeneratedData data = generate_dataset(c);
  Vocab v = Vocab::build(data.dataset);
  for (const auto& inst : data.dataset.instances) {
    if (inst.split != Split::kTrain) continue;  // train tokens are all known
    const Table& t = data.dataset.table_for(inst);
    EncodedInput enc = encode(inst.statement, t, v, 128);
    // statement reconstructs exactly between [CLS] and [SEP]
    for (size_t i = 0; i < inst.statement.size(); ++i)
      CHECK(v.token(enc.token_ids[1 + i]) == inst.statement[i]);
    // table part is a prefix of the row-major linearization
    std::vector<std::string> linear;
    for (const auto& h : t.header)
      for (const auto& tok : tokenize_cell(h)) linear.push_back(tok);
    for (const auto& row : t.rows)
      for (const auto& cell : row)
        for (const auto& tok : tokenize_cell(cell)) linear.push_back(tok);
    const int table_start = static_cast<int>(inst.statement.size()) + 2;
    for (int i = table_start; i < enc.attention_len; ++i)
      CHECK(v.token(enc.token_ids[i]) == linear[i - table_start]);
  }
}

TEST_CASE("punctuation-token classifier") {
  CHECK(is_punctuation_token("."));
  CHECK(is_punctuation_token("?!"));
  CHECK_FALSE(is_punctuation_token("a."));
  CHECK_FALSE(is_punctuation_token("'s"));
  CHECK_FALSE(is_punctuation_token(""));
}

}  // TEST_SUITE

}  // namespace
