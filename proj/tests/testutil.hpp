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

#ifndef TABSAL_TESTS_TESTUTIL_HPP_
#define TABSAL_TESTS_TESTUTIL_HPP_

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tabsal/datamodel.hpp"
#include "tabsal/encoder.hpp"
#include "tabsal/network.hpp"

namespace tabsal::testutil {

// Unique per-process scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("tabsal-test-" + tag + "-" + std::to_string(counter()++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline Table fixture_table(const std::string& id) {
  Table t;
  t.table_id = id;
  t.caption = "player statistics";
  t.header = {"player", "score", "city"};
  t.column_types = {ColumnType::kText, ColumnType::kNumeric, ColumnType::kText};
  t.rows = {{"alice", "12", "salem"},
            {"bob", "9", "dover"},
            {"cara", "31", "salem"}};
  return t;
}

inline LabeledInstance fixture_instance(const std::string& id,
                                        const std::string& table_id,
                                        std::vector<std::string> statement,
                                        int label, Difficulty difficulty,
                                        Split split) {
  LabeledInstance inst;
  inst.id = id;
  inst.table_id = table_id;
  inst.statement = std::move(statement);
  inst.label = label;
  inst.difficulty = difficulty;
  inst.split = split;
  return inst;
}

// Two tables, five instances: 3 train / 1 val / 1 test, 2 simple + 3 complex.
inline Dataset fixture_dataset() {
  Dataset d;
  d.tables.emplace("t1", fixture_table("t1"));
  Table t2 = fixture_table("t2");
  t2.table_id = "t2";
  d.tables.emplace("t2", t2);
  d.instances = {
      fixture_instance("i1", "t1", {"alice", "has", "a", "score", "of", "12", "."},
                       1, Difficulty::kSimple, Split::kTrain),
      fixture_instance("i2", "t1", {"the", "total", "score", "is", "52", "."}, 1,
                       Difficulty::kComplex, Split::kTrain),
      fixture_instance("i3", "t1", {"bob", "has", "the", "highest", "score", "."},
                       0, Difficulty::kComplex, Split::kTrain),
      fixture_instance("i4", "t2", {"the", "lowest", "score", "is", "9", "."}, 1,
                       Difficulty::kComplex, Split::kVal),
      fixture_instance("i5", "t2", {"cara", "has", "a", "city", "of", "salem", "."},
                       1, Difficulty::kSimple, Split::kTest)};
  return d;
}

// Small enough for finite differences over every parameter.
inline ModelConfig tiny_model_config(int vocab_size) {
  ModelConfig mc;
  mc.d_model = 8;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.d_ffn = 16;
  mc.max_len = 32;
  mc.vocab_size = vocab_size;
  mc.max_rows = 6;
  mc.max_cols = 6;
  mc.max_rank = 6;
  mc.dropout = 0.1;
  return mc;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::string out;
  std::ifstream in(p, std::ios::binary);
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    out.append(buf, static_cast<size_t>(in.gcount()));
  return out;
}

}  // namespace tabsal::testutil

#endif  // TABSAL_TESTS_TESTUTIL_HPP_
