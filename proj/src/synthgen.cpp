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

#include "tabsal/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tabsal/error.hpp"

namespace tabsal {

using nlohmann::json;

namespace {

// Closed word lists keep the encoder vocabulary small and stable.
const std::vector<std::string> kEntityPool = {
    "adams",   "baker",   "carter",  "dalton",  "ellis",   "foster",
    "garner",  "hayes",   "ingram",  "jarvis",  "keller",  "lawson",
    "mercer",  "norris",  "osborne", "parker",  "quinn",   "reeves",
    "sawyer",  "tanner",  "usher",   "vance",   "walker",  "xander",
    "yates",   "zimmer",  "archer",  "bishop",  "cooper",  "draper",
    "fletcher","gardner", "harper",  "mason",   "porter",  "ryder",
    "shepard", "turner",  "weaver",  "wright"};

const std::vector<std::string> kKeyHeaderPool = {"player", "team", "driver",
                                                 "athlete"};

const std::vector<std::string> kNumericHeaderPool = {
    "score", "points", "wins",    "losses",  "laps",
    "goals", "assists", "medals", "starts",  "finishes"};

const std::vector<std::string> kTextHeaderPool = {"city", "club", "coach",
                                                  "sponsor"};

const std::vector<std::string> kTextValuePool = {
    "arlington", "bristol",  "calgary",  "dover",    "everett", "fresno",
    "greeley",   "hampton",  "irvine",   "juneau",   "kenosha", "laredo",
    "medford",   "norwalk",  "olympia",  "pasadena", "quincy",  "racine",
    "salem",     "tacoma",   "utica",    "ventura",  "waltham", "yonkers"};

std::string format_int(long long v) { return std::to_string(v); }

int find_column(const Table& table, const std::string& name) {
  for (int c = 0; c < table.n_cols(); ++c)
    if (table.header[c] == name) return c;
  throw IntegrityError("form references missing column '" + name +
                       "' in table " + table.table_id);
}

int find_row_by_key(const Table& table, const std::string& key) {
  for (int r = 0; r < table.n_rows(); ++r)
    if (table.rows[r][0] == key) return r;
  throw IntegrityError("form references missing row key '" + key +
                       "' in table " + table.table_id);
}

int require_numeric(const Table& table, const std::string& name) {
  int c = find_column(table, name);
  if (table.column_types[c] != ColumnType::kNumeric)
    throw AggregationTypeError("numeric operation over text column '" + name +
                               "' in table " + table.table_id);
  return c;
}

double cell_number(const Table& table, int r, int c) {
  auto v = parse_numeric_cell(table.rows[r][c]);
  if (!v)
    throw IntegrityError("non-numeric cell in numeric column of table " +
                         table.table_id);
  return *v;
}

// Samples `count` distinct items from `pool`.
std::vector<std::string> sample_distinct(const std::vector<std::string>& pool,
                                         int count, Rng& rng) {
  std::vector<int> idx(pool.size());
  for (size_t i = 0; i < pool.size(); ++i) idx[i] = static_cast<int>(i);
  rng.shuffle(idx);
  std::vector<std::string> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(pool[idx[i]]);
  return out;
}

}  // namespace

const char* to_string(FormKind k) {
  switch (k) {
    case FormKind::kLookup: return "lookup";
    case FormKind::kCount: return "count";
    case FormKind::kSum: return "sum";
    case FormKind::kMax: return "max";
    case FormKind::kMin: return "min";
    case FormKind::kSuperlative: return "superlative";
    default: return "compare";
  }
}

FormKind form_kind_from_string(const std::string& s) {
  for (FormKind k : {FormKind::kLookup, FormKind::kCount, FormKind::kSum,
                     FormKind::kMax, FormKind::kMin, FormKind::kSuperlative,
                     FormKind::kCompare}) {
    if (s == to_string(k)) return k;
  }
  throw ParseError("unknown form kind '" + s + "'");
}

ExecValue execute(const LogicalForm& form, const Table& table) {
  switch (form.kind) {
    case FormKind::kLookup: {
      int c = find_column(table, form.column);
      int r = find_row_by_key(table, form.row_key);
      if (table.column_types[c] == ColumnType::kNumeric) {
        auto claimed = parse_numeric_cell(form.claimed);
        return claimed && *claimed == cell_number(table, r, c);
      }
      return table.rows[r][c] == form.claimed;
    }
    case FormKind::kCount: {
      int c = require_numeric(table, form.column);
      auto lit = parse_numeric_cell(form.literal);
      if (!lit) throw IntegrityError("count filter literal is not numeric");
      long long n = 0;
      for (int r = 0; r < table.n_rows(); ++r) {
        double v = cell_number(table, r, c);
        if (form.op == CmpOp::kGt ? v > *lit : v < *lit) ++n;
      }
      return static_cast<double>(n);
    }
    case FormKind::kSum: {
      int c = require_numeric(table, form.column);
      double s = 0.0;
      for (int r = 0; r < table.n_rows(); ++r) s += cell_number(table, r, c);
      return s;
    }
    case FormKind::kMax:
    case FormKind::kMin: {
      int c = require_numeric(table, form.column);
      if (table.n_rows() == 0)
        throw IntegrityError("max/min over an empty table");
      double best = cell_number(table, 0, c);
      for (int r = 1; r < table.n_rows(); ++r) {
        double v = cell_number(table, r, c);
        if (form.kind == FormKind::kMax ? v > best : v < best) best = v;
      }
      return best;
    }
    case FormKind::kSuperlative: {
      int c = require_numeric(table, form.column);
      if (table.n_rows() == 0)
        throw IntegrityError("superlative over an empty table");
      int best = 0;
      for (int r = 1; r < table.n_rows(); ++r) {
        double v = cell_number(table, r, c);
        double b = cell_number(table, best, c);
        if (form.op == CmpOp::kGt ? v > b : v < b) best = r;
      }
      return table.rows[best][0];
    }
    case FormKind::kCompare: {
      int c = require_numeric(table, form.column);
      int r1 = find_row_by_key(table, form.row_key);
      int r2 = find_row_by_key(table, form.row_key2);
      if (r1 == r2)
        throw IntegrityError("compare references a row against itself");
      double v1 = cell_number(table, r1, c);
      double v2 = cell_number(table, r2, c);
      return form.op == CmpOp::kGt ? v1 > v2 : v1 < v2;
    }
  }
  throw IntegrityError("unreachable form kind");
}

int claim_label(const LogicalForm& form, const Table& table) {
  ExecValue v = execute(form, table);
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? 1 : 0;
  if (std::holds_alternative<double>(v)) {
    auto claimed = parse_numeric_cell(form.claimed);
    return (claimed && *claimed == std::get<double>(v)) ? 1 : 0;
  }
  return std::get<std::string>(v) == form.claimed ? 1 : 0;
}

void GenConfig::validate() const {
  if (tables_train <= 0 || tables_val <= 0 || tables_test <= 0)
    throw IntegrityError("table counts must be positive");
  if (rows_min <= 0 || rows_min > rows_max)
    throw IntegrityError("invalid rows range");
  if (numeric_cols <= 0 || numeric_cols > static_cast<int>(kNumericHeaderPool.size()))
    throw IntegrityError("numeric_cols out of range");
  if (text_cols < 0 || text_cols > static_cast<int>(kTextHeaderPool.size()))
    throw IntegrityError("text_cols out of range");
  if (statements_per_table < 2 || statements_per_table > 20)
    throw IntegrityError("statements_per_table must be in [2, 20]");
  if (!(refute_fraction > 0.0 && refute_fraction < 1.0))
    throw IntegrityError("refute_fraction must be in (0, 1)");
  if (value_max - value_min + 1 < rows_max)
    throw IntegrityError("value range too small for distinct column values");
  if (rows_max > static_cast<int>(kEntityPool.size()))
    throw IntegrityError("rows_max exceeds the entity pool");
}

Table generate_table(const GenConfig& config, Rng& rng,
                     const std::string& table_id) {
  config.validate();
  Table t;
  t.table_id = table_id;
  const int rows = rng.uniform_int(config.rows_min, config.rows_max);

  const std::string key_header =
      kKeyHeaderPool[rng.uniform_u64(kKeyHeaderPool.size())];
  t.header.push_back(key_header);
  t.column_types.push_back(ColumnType::kText);
  for (const auto& h : sample_distinct(kNumericHeaderPool, config.numeric_cols, rng)) {
    t.header.push_back(h);
    t.column_types.push_back(ColumnType::kNumeric);
  }
  for (const auto& h : sample_distinct(kTextHeaderPool, config.text_cols, rng)) {
    t.header.push_back(h);
    t.column_types.push_back(ColumnType::kText);
  }
  t.caption = key_header + " statistics";

  const std::vector<std::string> keys = sample_distinct(kEntityPool, rows, rng);
  t.rows.assign(rows, std::vector<std::string>(t.n_cols()));
  for (int r = 0; r < rows; ++r) t.rows[r][0] = keys[r];

  for (int c = 1; c < t.n_cols(); ++c) {
    if (t.column_types[c] == ColumnType::kNumeric) {
      // Distinct values per column: superlatives and comparisons stay
      // tie-free.
      std::set<int> used;
      for (int r = 0; r < rows; ++r) {
        int v;
        do {
          v = rng.uniform_int(config.value_min, config.value_max);
        } while (!used.insert(v).second);
        t.rows[r][c] = format_int(v);
      }
    } else {
      for (int r = 0; r < rows; ++r)
        t.rows[r][c] = kTextValuePool[rng.uniform_u64(kTextValuePool.size())];
    }
  }
  return t;
}

namespace {

std::vector<int> numeric_columns(const Table& t) {
  std::vector<int> out;
  for (int c = 0; c < t.n_cols(); ++c)
    if (t.column_types[c] == ColumnType::kNumeric) out.push_back(c);
  return out;
}

std::string exec_value_as_claim(const ExecValue& v) {
  if (std::holds_alternative<double>(v))
    return format_int(std::llround(std::get<double>(v)));
  return std::get<std::string>(v);
}

}  // namespace

LogicalForm sample_entailed_form(const Table& table, FormKind kind, Rng& rng) {
  LogicalForm form;
  form.kind = kind;
  const auto num_cols = numeric_columns(table);
  switch (kind) {
    case FormKind::kLookup: {
      // Any non-key column; the claim asserts the cell value.
      int c = rng.uniform_int(1, table.n_cols() - 1);
      int r = static_cast<int>(rng.uniform_u64(table.n_rows()));
      form.column = table.header[c];
      form.row_key = table.rows[r][0];
      form.claimed = table.rows[r][c];
      return form;
    }
    case FormKind::kCount: {
      int c = num_cols[rng.uniform_u64(num_cols.size())];
      int r = static_cast<int>(rng.uniform_u64(table.n_rows()));
      form.column = table.header[c];
      form.op = rng.bernoulli(0.5) ? CmpOp::kGt : CmpOp::kLt;
      form.literal = table.rows[r][c];
      form.claimed = exec_value_as_claim(execute(form, table));
      return form;
    }
    case FormKind::kSum:
    case FormKind::kMax:
    case FormKind::kMin: {
      int c = num_cols[rng.uniform_u64(num_cols.size())];
      form.column = table.header[c];
      form.claimed = exec_value_as_claim(execute(form, table));
      return form;
    }
    case FormKind::kSuperlative: {
      int c = num_cols[rng.uniform_u64(num_cols.size())];
      form.column = table.header[c];
      form.op = rng.bernoulli(0.5) ? CmpOp::kGt : CmpOp::kLt;
      form.claimed = exec_value_as_claim(execute(form, table));
      return form;
    }
    case FormKind::kCompare: {
      int c = num_cols[rng.uniform_u64(num_cols.size())];
      int r1 = static_cast<int>(rng.uniform_u64(table.n_rows()));
      int r2;
      do {
        r2 = static_cast<int>(rng.uniform_u64(table.n_rows()));
      } while (r2 == r1);
      form.column = table.header[c];
      form.op = rng.bernoulli(0.5) ? CmpOp::kGt : CmpOp::kLt;
      double v1 = cell_number(table, r1, c);
      double v2 = cell_number(table, r2, c);
      // Order the keys so the stated relation holds.
      bool holds = form.op == CmpOp::kGt ? v1 > v2 : v1 < v2;
      form.row_key = table.rows[holds ? r1 : r2][0];
      form.row_key2 = table.rows[holds ? r2 : r1][0];
      return form;
    }
  }
  throw IntegrityError("unreachable form kind");
}

namespace {

struct Template {
  std::vector<std::string> tokens;
  int claim_slot;  // statement index carrying the perturbable value/entity
};

Template verbalize(const LogicalForm& form) {
  switch (form.kind) {
    case FormKind::kLookup:
      return {{form.row_key, "has", "a", form.column, "of", form.claimed, "."}, 5};
    case FormKind::kCount:
      return {{form.claimed, "rows", "have", form.column,
               form.op == CmpOp::kGt ? "above" : "below", form.literal, "."}, 0};
    case FormKind::kSum:
      return {{"the", "total", form.column, "is", form.claimed, "."}, 4};
    case FormKind::kMax:
      return {{"the", "highest", form.column, "is", form.claimed, "."}, 4};
    case FormKind::kMin:
      return {{"the", "lowest", form.column, "is", form.claimed, "."}, 4};
    case FormKind::kSuperlative:
      return {{form.claimed, "has", "the",
               form.op == CmpOp::kGt ? "highest" : "lowest", form.column, "."}, 0};
    case FormKind::kCompare:
      return {{form.row_key, "has", "a",
               form.op == CmpOp::kGt ? "higher" : "lower", form.column, "than",
               form.row_key2, "."}, 6};
  }
  throw IntegrityError("unreachable form kind");
}

std::string pick(const std::vector<std::string>& candidates, Rng& rng) {
  return candidates[rng.uniform_u64(candidates.size())];
}

// Alternative claimed values for corruption, all distinct from `truth` and
// drawn from the same domain as the statement slot they replace.
std::vector<std::string> corruption_candidates(const LogicalForm& form,
                                               const Table& table,
                                               const std::string& truth) {
  std::set<std::string> cands;
  switch (form.kind) {
    case FormKind::kLookup: {
      int c = find_column(table, form.column);
      for (int r = 0; r < table.n_rows(); ++r)
        if (table.rows[r][c] != truth) cands.insert(table.rows[r][c]);
      break;
    }
    case FormKind::kCount: {
      for (int n = 0; n <= table.n_rows(); ++n) {
        std::string s = format_int(n);
        if (s != truth) cands.insert(s);
      }
      break;
    }
    case FormKind::kSum:
    case FormKind::kMax:
    case FormKind::kMin: {
      int c = find_column(table, form.column);
      for (int r = 0; r < table.n_rows(); ++r)
        if (table.rows[r][c] != truth) cands.insert(table.rows[r][c]);
      long long t = std::llround(*parse_numeric_cell(truth));
      for (long long d : {-3, -2, -1, 1, 2, 3}) {
        std::string s = format_int(t + d);
        if (s != truth) cands.insert(s);
      }
      break;
    }
    case FormKind::kSuperlative: {
      for (int r = 0; r < table.n_rows(); ++r)
        if (table.rows[r][0] != truth) cands.insert(table.rows[r][0]);
      break;
    }
    case FormKind::kCompare:
      break;  // handled separately, the claim lives in the key slots
  }
  return {cands.begin(), cands.end()};
}

}  // namespace

Realization realize(const LogicalForm& entailed_form, const Table& table,
                    bool corrupt, Rng& rng) {
  if (claim_label(entailed_form, table) != 1)
    throw IntegrityError("realize requires an entailed claim");

  Realization out;
  out.form = entailed_form;
  out.difficulty = entailed_form.kind == FormKind::kLookup
                       ? Difficulty::kSimple
                       : Difficulty::kComplex;

  if (corrupt) {
    if (entailed_form.kind == FormKind::kCompare) {
      // Make the stated relation false by swapping in a key whose value
      // falls on the wrong side. Either end of the comparison may move.
      int c = find_column(table, entailed_form.column);
      int r1 = find_row_by_key(table, entailed_form.row_key);
      int r2 = find_row_by_key(table, entailed_form.row_key2);
      double v1 = cell_number(table, r1, c);
      double v2 = cell_number(table, r2, c);
      std::vector<std::pair<bool, std::string>> options;  // {replace_rhs, key}
      for (int r = 0; r < table.n_rows(); ++r) {
        double v = cell_number(table, r, c);
        bool wrong_side_rhs =
            entailed_form.op == CmpOp::kGt ? v > v1 : v < v1;
        bool wrong_side_lhs =
            entailed_form.op == CmpOp::kGt ? v < v2 : v > v2;
        if (r != r1 && wrong_side_rhs) options.emplace_back(true, table.rows[r][0]);
        if (r != r2 && wrong_side_lhs) options.emplace_back(false, table.rows[r][0]);
      }
      if (options.empty())
        throw CorruptionImpossible("no key flips the comparison in table " +
                                   table.table_id);
      auto [replace_rhs, key] = options[rng.uniform_u64(options.size())];
      if (replace_rhs)
        out.form.row_key2 = key;
      else
        out.form.row_key = key;
      Template tmpl = verbalize(out.form);
      out.statement = tmpl.tokens;
      out.corrupt_index = replace_rhs ? 6 : 0;
    } else {
      auto cands =
          corruption_candidates(entailed_form, table, entailed_form.claimed);
      if (cands.empty())
        throw CorruptionImpossible("no alternative value for " +
                                   std::string(to_string(entailed_form.kind)) +
                                   " claim in table " + table.table_id);
      out.form.claimed = pick(cands, rng);
      Template tmpl = verbalize(out.form);
      out.statement = tmpl.tokens;
      out.corrupt_index = tmpl.claim_slot;
    }
    out.label = 0;
    if (claim_label(out.form, table) != 0)
      throw IntegrityError("corrupted claim still executes as entailed");
  } else {
    out.statement = verbalize(entailed_form).tokens;
    out.label = 1;
    out.corrupt_index = -1;
  }
  return out;
}

namespace {

FormKind sample_kind(Rng& rng) {
  // Lookup-weighted mix: 40% simple lookups, the rest spread over the
  // aggregation/comparison kinds.
  static const FormKind kWheel[] = {
      FormKind::kLookup, FormKind::kLookup, FormKind::kLookup, FormKind::kLookup,
      FormKind::kCount,  FormKind::kSum,    FormKind::kMax,    FormKind::kMin,
      FormKind::kSuperlative, FormKind::kCompare};
  return kWheel[rng.uniform_u64(10)];
}

constexpr int kCorruptionRetries = 50;

void generate_split(const GenConfig& config, Split split, int n_tables,
                    uint64_t split_tag, GeneratedData& out) {
  for (int ti = 0; ti < n_tables; ++ti) {
    // Independent substream per table; generation order does not matter.
    Rng rng(Rng::mix(config.seed, split_tag * 1000003ULL + ti));
    std::ostringstream tid;
    tid << "t-" << to_string(split) << "-" << ti;
    Table table = generate_table(config, rng, tid.str());

    const int n_stmts = config.statements_per_table;
    double want = n_stmts * config.refute_fraction;
    int n_refuted = static_cast<int>(want) +
                    (rng.uniform() < want - static_cast<int>(want) ? 1 : 0);
    std::vector<char> corrupt_flags(n_stmts, 0);
    for (int i = 0; i < n_refuted; ++i) corrupt_flags[i] = 1;
    rng.shuffle(corrupt_flags);

    for (int si = 0; si < n_stmts; ++si) {
      Realization real;
      bool done = false;
      for (int attempt = 0; attempt < kCorruptionRetries && !done; ++attempt) {
        LogicalForm form = sample_entailed_form(table, sample_kind(rng), rng);
        try {
          real = realize(form, table, corrupt_flags[si] != 0, rng);
          done = true;
        } catch (const CorruptionImpossible&) {
          // resample a different claim
        }
      }
      if (!done)
        throw CorruptionImpossible("could not corrupt any claim for table " +
                                   table.table_id);

      LabeledInstance inst;
      std::ostringstream iid;
      iid << "i-" << to_string(split) << "-" << ti << "-" << si;
      inst.id = iid.str();
      inst.table_id = table.table_id;
      inst.statement = real.statement;
      inst.label = real.label;
      inst.difficulty = real.difficulty;
      inst.split = split;
      out.dataset.instances.push_back(std::move(inst));
      out.audit.push_back({iid.str(), real.form, real.label, real.corrupt_index});
    }
    out.dataset.tables.emplace(table.table_id, std::move(table));
  }
}

}  // namespace

GeneratedData generate_dataset(const GenConfig& config) {
  config.validate();
  GeneratedData out;
  generate_split(config, Split::kTrain, config.tables_train, 1, out);
  generate_split(config, Split::kVal, config.tables_val, 2, out);
  generate_split(config, Split::kTest, config.tables_test, 3, out);
  validate_dataset(out.dataset);

  int refuted = 0, train_total = 0;
  for (const auto& inst : out.dataset.instances) {
    if (inst.split != Split::kTrain) continue;
    ++train_total;
    refuted += inst.label == 0 ? 1 : 0;
  }
  double frac = train_total > 0 ? static_cast<double>(refuted) / train_total : 0;
  if (std::abs(frac - config.refute_fraction) > 0.05)
    throw IntegrityError("train label balance " + std::to_string(frac) +
                         " outside refute_fraction tolerance");
  return out;
}

void save_audit_file(const std::vector<AuditRecord>& audit,
                     const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  for (const auto& rec : audit) {
    json j{{"id", rec.id},
           {"kind", to_string(rec.form.kind)},
           {"column", rec.form.column},
           {"row_key", rec.form.row_key},
           {"row_key2", rec.form.row_key2},
           {"op", rec.form.op == CmpOp::kGt ? "gt" : "lt"},
           {"literal", rec.form.literal},
           {"claimed", rec.form.claimed},
           {"label", rec.label},
           {"corrupt_index", rec.corrupt_index}};
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("failed writing " + p.string());
}

std::vector<AuditRecord> load_audit_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string() + " for reading");
  std::vector<AuditRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      AuditRecord rec;
      rec.id = j.at("id").get<std::string>();
      rec.form.kind = form_kind_from_string(j.at("kind").get<std::string>());
      rec.form.column = j.at("column").get<std::string>();
      rec.form.row_key = j.at("row_key").get<std::string>();
      rec.form.row_key2 = j.at("row_key2").get<std::string>();
      rec.form.op = j.at("op").get<std::string>() == "gt" ? CmpOp::kGt : CmpOp::kLt;
      rec.form.literal = j.at("literal").get<std::string>();
      rec.form.claimed = j.at("claimed").get<std::string>();
      rec.label = j.at("label").get<int>();
      rec.corrupt_index = j.at("corrupt_index").get<int>();
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw ParseError(p.string() + ":" + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
  return out;
}

}  // namespace tabsal
