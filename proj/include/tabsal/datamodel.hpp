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

#ifndef TABSAL_DATAMODEL_HPP_
#define TABSAL_DATAMODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tabsal {

enum class ColumnType { kText, kNumeric };
enum class Split { kTrain, kVal, kTest };
enum class Difficulty { kSimple, kComplex };

const char* to_string(ColumnType t);
const char* to_string(Split s);
const char* to_string(Difficulty d);
ColumnType column_type_from_string(const std::string& s);
Split split_from_string(const std::string& s);
Difficulty difficulty_from_string(const std::string& s);

// Returns the parsed value when `cell` is a finite decimal number.
std::optional<double> parse_numeric_cell(const std::string& cell);

// Semi-structured evidence: header, typed columns, rows, caption. Cells are
// stored as strings so persisted numeric text round-trips exactly; numeric
// parsing is a view on top.
struct Table {
  std::string table_id;
  std::string caption;
  std::vector<std::string> header;
  std::vector<ColumnType> column_types;
  std::vector<std::vector<std::string>> rows;

  int n_cols() const { return static_cast<int>(header.size()); }
  int n_rows() const { return static_cast<int>(rows.size()); }

  bool operator==(const Table&) const = default;
};

// A statement paired with its evidence table and gold label
// (1 entailed, 0 refuted). Statements are stored pre-tokenized as
// lowercase word lists so token indices are stable across modules.
struct LabeledInstance {
  std::string id;
  std::string table_id;
  std::vector<std::string> statement;
  int label = 0;
  Difficulty difficulty = Difficulty::kSimple;
  Split split = Split::kTrain;

  bool operator==(const LabeledInstance&) const = default;
};

// Per-token counterfactual salience scores for one statement, plus the
// probe's entailment probability on the unmasked statement.
struct SalienceProfile {
  std::string instance_id;
  std::vector<double> scores;
  double probe_prob_unmasked = 0.0;

  bool operator==(const SalienceProfile&) const = default;
};

// A derived training record. `replaced_index` is -1 and `replacement`
// empty for the pass-through original, whose weight is exactly 1.
struct AugmentedInstance {
  std::string source_id;
  std::vector<std::string> statement;
  int label = 0;
  int replaced_index = -1;
  std::string replacement;
  double weight = 1.0;

  bool operator==(const AugmentedInstance&) const = default;
};

struct Dataset {
  std::map<std::string, Table> tables;
  std::vector<LabeledInstance> instances;

  bool operator==(const Dataset&) const = default;

  const Table& table_for(const LabeledInstance& inst) const;
  std::vector<const LabeledInstance*> split_instances(Split s) const;
};

struct SplitStats {
  struct PerSplit {
    int instances = 0;
    int tables = 0;
    int simple = 0;
    int complex_ = 0;
  };
  PerSplit train, val, test;
  PerSplit& for_split(Split s);
  int total_instances() const {
    return train.instances + val.instances + test.instances;
  }
};

// Throws IntegrityError when any dataset invariant fails: row-length or
// column-type mismatches, non-numeric cells in numeric columns, bad labels,
// empty statements, dangling table ids, or tables shared across splits.
void validate_dataset(const Dataset& dataset);

// Loading rejects malformed records (ParseError, with line number) and
// anything violating dataset invariants (IntegrityError).
Dataset load_dataset(const std::filesystem::path& tables_path,
                     const std::filesystem::path& instances_path);

// Writes tables.json and instances.jsonl under `dir`. Validates first so an
// invalid dataset is refused rather than persisted. Byte-stable: the same
// dataset always serializes to the same bytes.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

SplitStats split_stats(const Dataset& dataset);

std::vector<SalienceProfile> load_salience_file(const std::filesystem::path& p);
void save_salience_file(const std::vector<SalienceProfile>& profiles,
                        const std::filesystem::path& p);

std::vector<AugmentedInstance> load_augmented_file(const std::filesystem::path& p);
void save_augmented_file(const std::vector<AugmentedInstance>& instances,
                         const std::filesystem::path& p);

}  // namespace tabsal

#endif  // TABSAL_DATAMODEL_HPP_
