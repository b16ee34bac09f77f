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

#ifndef TABSAL_SYNTHGEN_HPP_
#define TABSAL_SYNTHGEN_HPP_

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "tabsal/datamodel.hpp"
#include "tabsal/rng.hpp"

namespace tabsal {

// Statements are realized from executable claims, so every label is ground
// truth by construction and can be re-derived by executing the claim.
enum class FormKind { kLookup, kCount, kSum, kMax, kMin, kSuperlative, kCompare };
enum class CmpOp { kGt, kLt };

const char* to_string(FormKind k);
FormKind form_kind_from_string(const std::string& s);

// An executable claim over a table. Field use by kind:
//   Lookup       column, row_key, claimed (the asserted cell value)
//   Count        column, op, literal (filter), claimed (asserted count)
//   Sum/Max/Min  column, claimed (asserted aggregate)
//   Superlative  column, op (kGt=highest), claimed (asserted key cell)
//   Compare      column, op, row_key, row_key2 (asserts key1 <op> key2)
struct LogicalForm {
  FormKind kind = FormKind::kLookup;
  std::string column;
  std::string row_key;
  std::string row_key2;
  CmpOp op = CmpOp::kGt;
  std::string literal;
  std::string claimed;

  bool operator==(const LogicalForm&) const = default;
};

// Lookup and Compare evaluate to a truth value; Count/Sum/Max/Min to a
// number; Superlative to the argmax/argmin row's key cell.
using ExecValue = std::variant<bool, double, std::string>;

// Deterministic evaluation against the table. Throws AggregationTypeError
// for numeric operations over text columns and IntegrityError for dangling
// column/row references.
ExecValue execute(const LogicalForm& form, const Table& table);

// Entailed (1) iff the claim holds: truth value for Lookup/Compare,
// claimed-equals-result for the value-returning kinds.
int claim_label(const LogicalForm& form, const Table& table);

struct GenConfig {
  int tables_train = 200;
  int tables_val = 40;
  int tables_test = 40;
  int rows_min = 3;
  int rows_max = 6;
  int numeric_cols = 2;
  int text_cols = 1;
  int statements_per_table = 10;  // each table carries 2 to 20 statements
  double refute_fraction = 0.5;
  int value_min = 1;
  int value_max = 40;
  uint64_t seed = 42;

  void validate() const;
};

// Key column (column 0) gets distinct entities; numeric columns get
// distinct values so argmax/argmin and comparisons are tie-free.
Table generate_table(const GenConfig& config, Rng& rng,
                     const std::string& table_id);

// Samples a claim of the given kind whose claimed value is the true
// execution result (label 1 by construction).
LogicalForm sample_entailed_form(const Table& table, FormKind kind, Rng& rng);

struct Realization {
  std::vector<std::string> statement;
  int label = 1;
  Difficulty difficulty = Difficulty::kSimple;
  LogicalForm form;       // the claim as stated, post-corruption
  int corrupt_index = -1; // statement position perturbed, -1 when entailed
};

// Verbalizes an entailed claim; with corrupt=true, perturbs exactly one
// value/entity slot to a different in-domain value so the claim becomes
// refuted. Throws CorruptionImpossible when no alternative value exists.
Realization realize(const LogicalForm& entailed_form, const Table& table,
                    bool corrupt, Rng& rng);

// Sidecar audit record: enough to re-execute the claim behind an instance.
struct AuditRecord {
  std::string id;
  LogicalForm form;
  int label = 0;
  int corrupt_index = -1;
};

struct GeneratedData {
  Dataset dataset;
  std::vector<AuditRecord> audit;
};

// Deterministic in the seed; each table draws from an independently seeded
// substream so parallel and serial generation agree. Retries corruption up
// to a bound before failing.
GeneratedData generate_dataset(const GenConfig& config);

void save_audit_file(const std::vector<AuditRecord>& audit,
                     const std::filesystem::path& p);
std::vector<AuditRecord> load_audit_file(const std::filesystem::path& p);

}  // namespace tabsal

#endif  // TABSAL_SYNTHGEN_HPP_
