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

#include <fstream>

#include <doctest.h>

#include "tabsal/datamodel.hpp"
#include "tabsal/error.hpp"
#include "testutil.hpp"

namespace {

using namespace tabsal;
using testutil::TempDir;

TEST_SUITE("datamodel") {

TEST_CASE("empty files load as an empty dataset") {
  TempDir dir("dm-empty");
  std::ofstream(dir.path() / "tables.json") << "";
  std::ofstream(dir.path() / "instances.jsonl") << "";
  Dataset d = load_dataset(dir.path() / "tables.json",
                           dir.path() / "instances.jsonl");
  CHECK(d.tables.empty());
  CHECK(d.instances.empty());
  SplitStats stats = split_stats(d);
  CHECK(stats.total_instances() == 0);
  CHECK(stats.train.tables == 0);
}

TEST_CASE("fixture counts and split stats") {
  Dataset d = testutil::fixture_dataset();
  validate_dataset(d);
  SplitStats stats = split_stats(d);
  CHECK(stats.train.instances == 3);
  CHECK(stats.val.instances == 1);
  CHECK(stats.test.instances == 1);
  CHECK(stats.train.tables == 1);
  CHECK(stats.train.simple == 1);
  CHECK(stats.train.complex_ == 2);
  // 2 simple + 3 complex overall
  CHECK(stats.train.simple + stats.val.simple + stats.test.simple == 2);
  CHECK(stats.train.complex_ + stats.val.complex_ + stats.test.complex_ == 3);
}

TEST_CASE("save then load is the identity") {
  Dataset d = testutil::fixture_dataset();
  TempDir dir("dm-roundtrip");
  save_dataset(d, dir.path());
  Dataset loaded =
      load_dataset(dir.path() / "tables.json", dir.path() / "instances.jsonl");
  CHECK(loaded == d);

  // Saving is byte-stable.
  std::string first = testutil::read_file(dir.path() / "instances.jsonl");
  save_dataset(loaded, dir.path());
  CHECK(testutil::read_file(dir.path() / "instances.jsonl") == first);
}

TEST_CASE("empty dataset round trips") {
  Dataset d;
  TempDir dir("dm-empty-rt");
  save_dataset(d, dir.path());
  Dataset loaded =
      load_dataset(dir.path() / "tables.json", dir.path() / "instances.jsonl");
  CHECK(loaded == d);
}

TEST_CASE("table shared across splits is rejected") {
  Dataset d = testutil::fixture_dataset();
  d.instances[3].table_id = "t1";  // val instance now uses a train table
  CHECK_THROWS_AS(validate_dataset(d), IntegrityError);
  TempDir dir("dm-overlap");
  CHECK_THROWS_AS(save_dataset(d, dir.path()), IntegrityError);
}

TEST_CASE("non-numeric cell in a numeric column refuses to save") {
  Dataset d = testutil::fixture_dataset();
  d.tables.at("t1").rows[1][1] = "nine";
  TempDir dir("dm-badcell");
  CHECK_THROWS_AS(save_dataset(d, dir.path()), IntegrityError);
}

TEST_CASE("dangling table id is rejected with IntegrityError") {
  Dataset d = testutil::fixture_dataset();
  d.instances[0].table_id = "missing";
  CHECK_THROWS_AS(validate_dataset(d), IntegrityError);
}

TEST_CASE("malformed record reports its line number") {
  TempDir dir("dm-parse");
  std::ofstream(dir.path() / "tables.json") << "{}";
  std::ofstream(dir.path() / "instances.jsonl")
      << R"({"id":"a","table_id":"t","statement":["x"],"label":1,"difficulty":"simple","split":"train"})"
      << "\n{not json\n";
  try {
    load_dataset(dir.path() / "tables.json", dir.path() / "instances.jsonl");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("bad label and empty statement are integrity errors") {
  Dataset d = testutil::fixture_dataset();
  d.instances[0].label = 2;
  CHECK_THROWS_AS(validate_dataset(d), IntegrityError);
  d = testutil::fixture_dataset();
  d.instances[0].statement.clear();
  CHECK_THROWS_AS(validate_dataset(d), IntegrityError);
}

TEST_CASE("numeric cells keep their exact decimal text through a round trip") {
  Dataset d;
  Table t = testutil::fixture_table("t1");
  t.rows[0][1] = "12.50";  // trailing zero must survive
  t.rows[1][1] = "-3.125";
  d.tables.emplace("t1", t);
  d.instances = {testutil::fixture_instance(
      "i1", "t1", {"x"}, 1, Difficulty::kSimple, Split::kTrain)};
  TempDir dir("dm-decimal");
  save_dataset(d, dir.path());
  Dataset loaded =
      load_dataset(dir.path() / "tables.json", dir.path() / "instances.jsonl");
  CHECK(loaded.tables.at("t1").rows[0][1] == "12.50");
  CHECK(loaded.tables.at("t1").rows[1][1] == "-3.125");
  CHECK(parse_numeric_cell("12.50") == doctest::Approx(12.5));
}

TEST_CASE("salience and augmented files round trip") {
  TempDir dir("dm-sidecars");
  std::vector<SalienceProfile> profiles = {
      {"i1", {0.25, 0.0, 1.0}, 0.75},
      {"i2", {0.5}, 0.125},
  };
  save_salience_file(profiles, dir.path() / "sal.jsonl");
  CHECK(load_salience_file(dir.path() / "sal.jsonl") == profiles);

  std::vector<AugmentedInstance> augs = {
      {"i1", {"a", "b"}, 1, -1, "", 1.0},
      {"i1", {"a", "c"}, 1, 1, "c", 0.25},
  };
  save_augmented_file(augs, dir.path() / "aug.jsonl");
  CHECK(load_augmented_file(dir.path() / "aug.jsonl") == augs);
}

TEST_CASE("out-of-range salience scores are rejected at load") {
  TempDir dir("dm-badsal");
  std::ofstream(dir.path() / "sal.jsonl")
      << R"({"instance_id":"i1","scores":[1.5],"probe_prob_unmasked":0.5})" << "\n";
  CHECK_THROWS_AS(load_salience_file(dir.path() / "sal.jsonl"), ParseError);
}

}  // TEST_SUITE

}  // namespace
