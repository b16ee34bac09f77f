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

#include "tabsal/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "tabsal/error.hpp"

namespace tabsal {

namespace {
const char* kReservedNames[Vocab::kNumReserved] = {"[PAD]", "[CLS]", "[SEP]",
                                                   "[MASK]", "[UNK]"};
}

Vocab::Vocab() {
  for (const char* name : kReservedNames) add(name);
}

void Vocab::add(const std::string& token) {
  to_id_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

bool is_punctuation_token(const std::string& token) {
  if (token.empty()) return false;
  for (unsigned char c : token)
    if (!std::ispunct(c)) return false;
  return true;
}

std::vector<std::string> tokenize_cell(const std::string& cell) {
  std::vector<std::string> out;
  std::string cur;
  for (char raw : cell) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocab Vocab::build(const Dataset& dataset) {
  std::map<std::string, uint64_t> freq;
  std::set<std::string> train_tables;
  for (const auto& inst : dataset.instances) {
    if (inst.split != Split::kTrain) continue;
    for (const auto& tok : inst.statement) ++freq[tok];
    train_tables.insert(inst.table_id);
  }
  for (const auto& tid : train_tables) {
    const Table& t = dataset.tables.at(tid);
    for (const auto& h : t.header)
      for (const auto& tok : tokenize_cell(h)) ++freq[tok];
    for (const auto& row : t.rows)
      for (const auto& cell : row)
        for (const auto& tok : tokenize_cell(cell)) ++freq[tok];
    for (const auto& tok : tokenize_cell(t.caption)) ++freq[tok];
  }

  std::vector<std::pair<std::string, uint64_t>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  for (const auto& [tok, count] : items) {
    if (v.to_id_.count(tok)) continue;  // a literal reserved marker in data
    v.add(tok);
  }
  return v;
}

void Vocab::save(const std::filesystem::path& p) const {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  for (size_t i = kNumReserved; i < tokens_.size(); ++i) out << tokens_[i] << "\n";
  if (!out) throw IoError("failed writing " + p.string());
}

Vocab Vocab::load(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string() + " for reading");
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (v.to_id_.count(line))
      throw ParseError("duplicate vocab token '" + line + "' in " + p.string());
    v.add(line);
  }
  return v;
}

std::vector<int> numeric_ranks(const std::vector<std::string>& cells) {
  std::vector<double> values;
  values.reserve(cells.size());
  for (const auto& cell : cells) {
    auto v = parse_numeric_cell(cell);
    if (!v) throw ParseError("non-numeric cell '" + cell + "' in numeric_ranks");
    values.push_back(*v);
  }
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<int> ranks(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    ranks[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(),
                                                 values[i]) -
                                sorted.begin()) +
               1;
  }
  return ranks;
}

EncodedInput encode(const std::vector<std::string>& statement,
                    const Table& table, const Vocab& vocab, int max_len) {
  const int stmt_len = static_cast<int>(statement.size());
  if (stmt_len + 2 > max_len)
    throw StatementTooLong("statement of " + std::to_string(stmt_len) +
                           " tokens does not fit in max_len " +
                           std::to_string(max_len));

  EncodedInput enc;
  auto push = [&](int tok, int seg, int row, int col, int rank) {
    enc.token_ids.push_back(tok);
    enc.segment_ids.push_back(seg);
    enc.row_ids.push_back(row);
    enc.col_ids.push_back(col);
    enc.rank_ids.push_back(rank);
  };

  push(Vocab::kCls, 0, 0, 0, 0);
  for (const auto& tok : statement) push(vocab.id(tok), 0, 0, 0, 0);
  push(Vocab::kSep, 0, 0, 0, 0);

  // Per-column dense ranks over the data rows of numeric columns.
  std::vector<std::vector<int>> col_ranks(table.n_cols());
  for (int c = 0; c < table.n_cols(); ++c) {
    if (table.column_types[c] != ColumnType::kNumeric) continue;
    std::vector<std::string> cells;
    cells.reserve(table.n_rows());
    for (const auto& row : table.rows) cells.push_back(row[c]);
    col_ranks[c] = numeric_ranks(cells);
  }

  // Row-major linearization, header first. A row that does not fit whole is
  // dropped along with everything after it.
  struct CellRef {
    int row_id;  // 0 header, 1..R data
    int col_id;  // 1..C
    int rank_id;
    const std::string* text;
  };
  for (int r = -1; r < table.n_rows(); ++r) {
    std::vector<CellRef> row_cells;
    for (int c = 0; c < table.n_cols(); ++c) {
      if (r < 0) {
        row_cells.push_back({0, c + 1, 0, &table.header[c]});
      } else {
        int rank = col_ranks[c].empty() ? 0 : col_ranks[c][r];
        row_cells.push_back({r + 1, c + 1, rank, &table.rows[r][c]});
      }
    }
    std::vector<std::pair<std::string, const CellRef*>> row_tokens;
    for (const auto& cell : row_cells)
      for (auto& tok : tokenize_cell(*cell.text))
        row_tokens.emplace_back(std::move(tok), &cell);
    if (enc.token_ids.size() + row_tokens.size() >
        static_cast<size_t>(max_len))
      break;
    for (const auto& [tok, cell] : row_tokens)
      push(vocab.id(tok), 1, cell->row_id, cell->col_id, cell->rank_id);
  }

  enc.attention_len = static_cast<int>(enc.token_ids.size());
  while (static_cast<int>(enc.token_ids.size()) < max_len)
    push(Vocab::kPad, 0, 0, 0, 0);
  enc.position_ids.resize(max_len);
  for (int i = 0; i < max_len; ++i) enc.position_ids[i] = i;
  return enc;
}

}  // namespace tabsal
