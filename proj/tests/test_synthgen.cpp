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

#include <set>

#include <doctest.h>

#include "tabsal/error.hpp"
#include "tabsal/synthgen.hpp"
#include "testutil.hpp"

namespace {

using namespace tabsal;

GenConfig small_config() {
  GenConfig c;
  c.tables_train = 4;
  c.tables_val = 2;
  c.tables_test = 2;
  c.statements_per_table = 5;
  c.seed = 123;
  return c;
}

TEST_SUITE("synthgen") {

TEST_CASE("minimal table: one row, key plus numeric column") {
  GenConfig c = small_config();
  c.rows_min = c.rows_max = 1;
  c.numeric_cols = 1;
  c.text_cols = 0;
  Rng rng(9);
  Table t = generate_table(c, rng, "t0");
  CHECK(t.n_rows() == 1);
  CHECK(t.n_cols() == 2);
  CHECK(t.column_types[0] == ColumnType::kText);
  CHECK(t.column_types[1] == ColumnType::kNumeric);
  CHECK(parse_numeric_cell(t.rows[0][1]).has_value());
}

TEST_CASE("same seed yields identical tables") {
  GenConfig c = small_config();
  Rng a(77), b(77);
  CHECK(generate_table(c, a, "t") == generate_table(c, b, "t"));
}

TEST_CASE("row count stays within the configured range over many draws") {
  GenConfig c = small_config();
  c.rows_min = 3;
  c.rows_max = 6;
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    Table t = generate_table(c, rng, "t");
    CHECK(t.n_rows() >= 3);
    CHECK(t.n_rows() <= 6);
  }
}

TEST_CASE("numeric columns have distinct values") {
  GenConfig c = small_config();
  Rng rng(5);
  Table t = generate_table(c, rng, "t");
  for (int col = 0; col < t.n_cols(); ++col) {
    if (t.column_types[col] != ColumnType::kNumeric) continue;
    std::set<std::string> seen;
    for (const auto& row : t.rows) CHECK(seen.insert(row[col]).second);
  }
}

TEST_CASE("execute: count over an empty filter is 0") {
  Table t = testutil::fixture_table("t");  // scores 12, 9, 31
  LogicalForm form;
  form.kind = FormKind::kCount;
  form.column = "score";
  form.op = CmpOp::kGt;
  form.literal = "31";  // above the maximum
  CHECK(std::get<double>(execute(form, t)) == 0.0);
}

TEST_CASE("execute: sum oracle and claim labels") {
  Table t = testutil::fixture_table("t");
  t.rows[0][1] = "3";
  t.rows[1][1] = "5";
  t.rows[2][1] = "7";
  LogicalForm form;
  form.kind = FormKind::kSum;
  form.column = "score";
  CHECK(std::get<double>(execute(form, t)) == 15.0);
  form.claimed = "15";
  CHECK(claim_label(form, t) == 1);
  form.claimed = "14";
  CHECK(claim_label(form, t) == 0);
}

TEST_CASE("execute: max over tie-free values") {
  Table t = testutil::fixture_table("t");
  t.rows[0][1] = "2";
  t.rows[1][1] = "9";
  t.rows[2][1] = "4";
  LogicalForm form;
  form.kind = FormKind::kMax;
  form.column = "score";
  CHECK(std::get<double>(execute(form, t)) == 9.0);
}

TEST_CASE("execute: aggregation over a text column raises a type error") {
  Table t = testutil::fixture_table("t");
  LogicalForm form;
  form.kind = FormKind::kSum;
  form.column = "city";
  CHECK_THROWS_AS(execute(form, t), AggregationTypeError);
}

TEST_CASE("execute: lookup is cell equality, compare applies the operator") {
  Table t = testutil::fixture_table("t");
  LogicalForm lookup;
  lookup.kind = FormKind::kLookup;
  lookup.column = "score";
  lookup.row_key = "alice";
  lookup.claimed = "12";
  CHECK(std::get<bool>(execute(lookup, t)));
  lookup.claimed = "9";
  CHECK_FALSE(std::get<bool>(execute(lookup, t)));

  LogicalForm cmp;
  cmp.kind = FormKind::kCompare;
  cmp.column = "score";
  cmp.row_key = "cara";
  cmp.row_key2 = "bob";
  cmp.op = CmpOp::kGt;
  CHECK(std::get<bool>(execute(cmp, t)));
  cmp.op = CmpOp::kLt;
  CHECK_FALSE(std::get<bool>(execute(cmp, t)));
}

TEST_CASE("realize: entailed lookup verbalizes the true cell") {
  Table t = testutil::fixture_table("t");
  LogicalForm form;
  form.kind = FormKind::kLookup;
  form.column = "score";
  form.row_key = "alice";
  form.claimed = "12";
  Rng rng(3);
  Realization real = realize(form, t, false, rng);
  CHECK(real.label == 1);
  CHECK(real.difficulty == Difficulty::kSimple);
  CHECK(real.statement ==
        std::vector<std::string>{"alice", "has", "a", "score", "of", "12", "."});
  CHECK(claim_label(real.form, t) == 1);
}

TEST_CASE("realize: corruption flips exactly one token and the label") {
  Table t = testutil::fixture_table("t");
  LogicalForm form;
  form.kind = FormKind::kLookup;
  form.column = "score";
  form.row_key = "alice";
  form.claimed = "12";
  Rng rng(4);
  Realization entailed = realize(form, t, false, rng);
  Realization refuted = realize(form, t, true, rng);
  CHECK(refuted.label == 0);
  CHECK(claim_label(refuted.form, t) == 0);
  // The corrupted value is another score from the column.
  CHECK((refuted.statement[5] == "9" || refuted.statement[5] == "31"));
  int diffs = 0;
  for (size_t i = 0; i < entailed.statement.size(); ++i)
    diffs += entailed.statement[i] != refuted.statement[i] ? 1 : 0;
  CHECK(diffs == 1);
  CHECK(refuted.corrupt_index == 5);
}

TEST_CASE("realize: sum is complex by rule") {
  Table t = testutil::fixture_table("t");
  LogicalForm form;
  form.kind = FormKind::kSum;
  form.column = "score";
  form.claimed = "52";
  Rng rng(5);
  CHECK(realize(form, t, false, rng).difficulty == Difficulty::kComplex);
}

TEST_CASE("realize: corruption impossible on a single-valued domain") {
  Table t;
  t.table_id = "t";
  t.caption = "team statistics";
  t.header = {"team", "city"};
  t.column_types = {ColumnType::kText, ColumnType::kText};
  t.rows = {{"adams", "salem"}};
  LogicalForm form;
  form.kind = FormKind::kLookup;
  form.column = "city";
  form.row_key = "adams";
  form.claimed = "salem";
  Rng rng(6);
  CHECK_THROWS_AS(realize(form, t, true, rng), CorruptionImpossible);
}

TEST_CASE("generate_dataset: counts, disjoint tables, determinism") {
  GenConfig c = small_config();
  c.tables_train = c.tables_val = c.tables_test = 1;
  c.statements_per_table = 2;
  GeneratedData data = generate_dataset(c);
  CHECK(data.dataset.instances.size() == 6);
  CHECK(data.dataset.tables.size() == 3);

  GeneratedData again = generate_dataset(c);
  CHECK(again.dataset == data.dataset);

  testutil::TempDir dir("sg-det");
  save_dataset(data.dataset, dir.path() / "a");
  save_dataset(again.dataset, dir.path() / "b");
  CHECK(testutil::read_file(dir.path() / "a" / "instances.jsonl") ==
        testutil::read_file(dir.path() / "b" / "instances.jsonl"));
  CHECK(testutil::read_file(dir.path() / "a" / "tables.json") ==
        testutil::read_file(dir.path() / "b" / "tables.json"));
}

TEST_CASE("generate_dataset: refuted fraction within the binomial window") {
  GenConfig c = small_config();
  c.tables_train = 200;  // 2000 train statements
  c.statements_per_table = 10;
  c.refute_fraction = 0.5;
  GeneratedData data = generate_dataset(c);
  int refuted = 0, total = 0;
  for (const auto& inst : data.dataset.instances) {
    if (inst.split != Split::kTrain) continue;
    ++total;
    refuted += inst.label == 0 ? 1 : 0;
  }
  CHECK(total == 2000);
  CHECK(refuted >= 900);
  CHECK(refuted <= 1100);
}

TEST_CASE("label soundness: stored claims re-execute to the stored label") {
  GeneratedData data = generate_dataset(small_config());
  CHECK(data.audit.size() == data.dataset.instances.size());
  for (size_t i = 0; i < data.audit.size(); ++i) {
    const AuditRecord& rec = data.audit[i];
    const LabeledInstance& inst = data.dataset.instances[i];
    CHECK(rec.id == inst.id);
    CHECK(rec.label == inst.label);
    CHECK(claim_label(rec.form, data.dataset.tables.at(inst.table_id)) ==
          inst.label);
    if (inst.label == 0) CHECK(rec.corrupt_index >= 0);
  }
}

TEST_CASE("audit file round trips") {
  GeneratedData data = generate_dataset(small_config());
  testutil::TempDir dir("sg-audit");
  save_audit_file(data.audit, dir.path() / "audit.jsonl");
  auto loaded = load_audit_file(dir.path() / "audit.jsonl");
  REQUIRE(loaded.size() == data.audit.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == data.audit[i].id);
    CHECK(loaded[i].form == data.audit[i].form);
    CHECK(loaded[i].label == data.audit[i].label);
    CHECK(loaded[i].corrupt_index == data.audit[i].corrupt_index);
  }
}

TEST_CASE("invalid configs are rejected") {
  GenConfig c = small_config();
  c.refute_fraction = 0.0;
  CHECK_THROWS_AS(c.validate(), IntegrityError);
  c = small_config();
  c.statements_per_table = 1;
  CHECK_THROWS_AS(c.validate(), IntegrityError);
  c = small_config();
  c.rows_min = 5;
  c.rows_max = 3;
  CHECK_THROWS_AS(c.validate(), IntegrityError);
}

}  // TEST_SUITE

}  // namespace
