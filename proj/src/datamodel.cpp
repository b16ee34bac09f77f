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

#include "tabsal/datamodel.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tabsal/error.hpp"

namespace tabsal {

using nlohmann::json;

const char* to_string(ColumnType t) {
  return t == ColumnType::kText ? "text" : "numeric";
}
const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    default: return "test";
  }
}
const char* to_string(Difficulty d) {
  return d == Difficulty::kSimple ? "simple" : "complex";
}

ColumnType column_type_from_string(const std::string& s) {
  if (s == "text") return ColumnType::kText;
  if (s == "numeric") return ColumnType::kNumeric;
  throw ParseError("unknown column type '" + s + "'");
}
Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ParseError("unknown split '" + s + "'");
}
Difficulty difficulty_from_string(const std::string& s) {
  if (s == "simple") return Difficulty::kSimple;
  if (s == "complex") return Difficulty::kComplex;
  throw ParseError("unknown difficulty '" + s + "'");
}

std::optional<double> parse_numeric_cell(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  const char* begin = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + cell.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

const Table& Dataset::table_for(const LabeledInstance& inst) const {
  auto it = tables.find(inst.table_id);
  if (it == tables.end())
    throw IntegrityError("instance " + inst.id + " references missing table " +
                         inst.table_id);
  return it->second;
}

std::vector<const LabeledInstance*> Dataset::split_instances(Split s) const {
  std::vector<const LabeledInstance*> out;
  for (const auto& inst : instances)
    if (inst.split == s) out.push_back(&inst);
  return out;
}

SplitStats::PerSplit& SplitStats::for_split(Split s) {
  switch (s) {
    case Split::kTrain: return train;
    case Split::kVal: return val;
    default: return test;
  }
}

void validate_dataset(const Dataset& dataset) {
  for (const auto& [id, table] : dataset.tables) {
    if (table.table_id != id)
      throw IntegrityError("table key '" + id + "' does not match table_id '" +
                           table.table_id + "'");
    const size_t ncols = table.header.size();
    if (table.column_types.size() != ncols)
      throw IntegrityError("table " + id + ": column_types length " +
                           std::to_string(table.column_types.size()) +
                           " != header length " + std::to_string(ncols));
    for (size_t r = 0; r < table.rows.size(); ++r) {
      if (table.rows[r].size() != ncols)
        throw IntegrityError("table " + id + ": row " + std::to_string(r) +
                             " has " + std::to_string(table.rows[r].size()) +
                             " cells, expected " + std::to_string(ncols));
      for (size_t c = 0; c < ncols; ++c) {
        if (table.column_types[c] == ColumnType::kNumeric &&
            !parse_numeric_cell(table.rows[r][c])) {
          throw IntegrityError("table " + id + ": cell (" + std::to_string(r) +
                               "," + std::to_string(c) + ") value '" +
                               table.rows[r][c] +
                               "' is not numeric in a numeric column");
        }
      }
    }
  }

  std::set<std::string> ids;
  std::map<std::string, Split> table_split;
  for (const auto& inst : dataset.instances) {
    if (!ids.insert(inst.id).second)
      throw IntegrityError("duplicate instance id " + inst.id);
    if (inst.statement.empty())
      throw IntegrityError("instance " + inst.id + " has an empty statement");
    if (inst.label != 0 && inst.label != 1)
      throw IntegrityError("instance " + inst.id + " has label " +
                           std::to_string(inst.label) + ", expected 0 or 1");
    if (dataset.tables.find(inst.table_id) == dataset.tables.end())
      throw IntegrityError("instance " + inst.id +
                           " references missing table " + inst.table_id);
    auto [it, inserted] = table_split.emplace(inst.table_id, inst.split);
    if (!inserted && it->second != inst.split)
      throw IntegrityError("table " + inst.table_id +
                           " is shared across splits (" +
                           to_string(it->second) + " and " +
                           to_string(inst.split) + ")");
  }
}

namespace {

json table_to_json(const Table& t) {
  json types = json::array();
  for (ColumnType c : t.column_types) types.push_back(to_string(c));
  return json{{"caption", t.caption},
              {"header", t.header},
              {"column_types", types},
              {"rows", t.rows}};
}

Table table_from_json(const std::string& id, const json& j) {
  Table t;
  t.table_id = id;
  t.caption = j.at("caption").get<std::string>();
  t.header = j.at("header").get<std::vector<std::string>>();
  for (const auto& s : j.at("column_types"))
    t.column_types.push_back(column_type_from_string(s.get<std::string>()));
  t.rows = j.at("rows").get<std::vector<std::vector<std::string>>>();
  return t;
}

json instance_to_json(const LabeledInstance& inst) {
  return json{{"id", inst.id},
              {"table_id", inst.table_id},
              {"statement", inst.statement},
              {"label", inst.label},
              {"difficulty", to_string(inst.difficulty)},
              {"split", to_string(inst.split)}};
}

LabeledInstance instance_from_json(const json& j) {
  LabeledInstance inst;
  inst.id = j.at("id").get<std::string>();
  inst.table_id = j.at("table_id").get<std::string>();
  inst.statement = j.at("statement").get<std::vector<std::string>>();
  inst.label = j.at("label").get<int>();
  inst.difficulty = difficulty_from_string(j.at("difficulty").get<std::string>());
  inst.split = split_from_string(j.at("split").get<std::string>());
  return inst;
}

std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string() + " for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  return out;
}

// Applies `fn` to each non-empty line, reporting the 1-based line number in
// parse failures.
template <typename Fn>
void for_each_record(const std::filesystem::path& p, Fn fn) {
  std::ifstream in = open_input(p);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(p.string() + ":" + std::to_string(line_no) + ": " +
                       e.what());
    }
    try {
      fn(j);
    } catch (const json::exception& e) {
      throw ParseError(p.string() + ":" + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& tables_path,
                     const std::filesystem::path& instances_path) {
  Dataset dataset;

  {
    std::ifstream in = open_input(tables_path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    json j;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
      j = json::object();  // an empty tables file means zero tables
    } else {
      try {
        j = json::parse(text);
      } catch (const json::exception& e) {
        throw ParseError(tables_path.string() + ": " + e.what());
      }
    }
    if (!j.is_object())
      throw ParseError(tables_path.string() + ": expected a top-level object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      try {
        dataset.tables.emplace(it.key(), table_from_json(it.key(), it.value()));
      } catch (const json::exception& e) {
        throw ParseError(tables_path.string() + ": table " + it.key() + ": " +
                         e.what());
      }
    }
  }

  for_each_record(instances_path, [&](const json& j) {
    dataset.instances.push_back(instance_from_json(j));
  });

  validate_dataset(dataset);
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  validate_dataset(dataset);
  std::filesystem::create_directories(dir);

  {
    json j = json::object();
    for (const auto& [id, table] : dataset.tables) j[id] = table_to_json(table);
    std::ofstream out = open_output(dir / "tables.json");
    out << j.dump() << "\n";
    if (!out) throw IoError("failed writing " + (dir / "tables.json").string());
  }
  {
    std::ofstream out = open_output(dir / "instances.jsonl");
    for (const auto& inst : dataset.instances)
      out << instance_to_json(inst).dump() << "\n";
    if (!out)
      throw IoError("failed writing " + (dir / "instances.jsonl").string());
  }
}

SplitStats split_stats(const Dataset& dataset) {
  SplitStats stats;
  std::map<Split, std::set<std::string>> tables_by_split;
  for (const auto& inst : dataset.instances) {
    auto& per = stats.for_split(inst.split);
    per.instances += 1;
    if (inst.difficulty == Difficulty::kSimple)
      per.simple += 1;
    else
      per.complex_ += 1;
    tables_by_split[inst.split].insert(inst.table_id);
  }
  stats.train.tables = static_cast<int>(tables_by_split[Split::kTrain].size());
  stats.val.tables = static_cast<int>(tables_by_split[Split::kVal].size());
  stats.test.tables = static_cast<int>(tables_by_split[Split::kTest].size());
  return stats;
}

std::vector<SalienceProfile> load_salience_file(const std::filesystem::path& p) {
  std::vector<SalienceProfile> out;
  for_each_record(p, [&](const json& j) {
    SalienceProfile prof;
    prof.instance_id = j.at("instance_id").get<std::string>();
    prof.scores = j.at("scores").get<std::vector<double>>();
    prof.probe_prob_unmasked = j.at("probe_prob_unmasked").get<double>();
    for (double s : prof.scores)
      if (!(s >= 0.0 && s <= 1.0))
        throw ParseError("salience score out of [0,1] for instance " +
                         prof.instance_id);
    out.push_back(std::move(prof));
  });
  return out;
}

void save_salience_file(const std::vector<SalienceProfile>& profiles,
                        const std::filesystem::path& p) {
  std::ofstream out = open_output(p);
  for (const auto& prof : profiles) {
    json j{{"instance_id", prof.instance_id},
           {"scores", prof.scores},
           {"probe_prob_unmasked", prof.probe_prob_unmasked}};
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("failed writing " + p.string());
}

std::vector<AugmentedInstance> load_augmented_file(
    const std::filesystem::path& p) {
  std::vector<AugmentedInstance> out;
  for_each_record(p, [&](const json& j) {
    AugmentedInstance a;
    a.source_id = j.at("source_id").get<std::string>();
    a.statement = j.at("statement").get<std::vector<std::string>>();
    a.label = j.at("label").get<int>();
    a.replaced_index = j.at("replaced_index").get<int>();
    a.replacement = j.at("replacement").get<std::string>();
    a.weight = j.at("weight").get<double>();
    if (!(a.weight > 0.0 && a.weight <= 1.0))
      throw ParseError("augment weight out of (0,1] for source " + a.source_id);
    out.push_back(std::move(a));
  });
  return out;
}

void save_augmented_file(const std::vector<AugmentedInstance>& instances,
                         const std::filesystem::path& p) {
  std::ofstream out = open_output(p);
  for (const auto& a : instances) {
    json j{{"source_id", a.source_id},
           {"statement", a.statement},
           {"label", a.label},
           {"replaced_index", a.replaced_index},
           {"replacement", a.replacement},
           {"weight", a.weight}};
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("failed writing " + p.string());
}

}  // namespace tabsal
