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

#ifndef TABSAL_ENCODER_HPP_
#define TABSAL_ENCODER_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "tabsal/datamodel.hpp"

namespace tabsal {

// Word-level vocabulary with fixed reserved ids. Non-reserved tokens are
// ordered by train-split frequency (descending), ties broken
// lexicographically, so id assignment is deterministic.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;
  static constexpr int kMask = 3;
  static constexpr int kUnk = 4;
  static constexpr int kNumReserved = 5;

  Vocab();

  // Tokens from train-split statements and their tables (header, cells,
  // caption).
  static Vocab build(const Dataset& dataset);

  int id(const std::string& token) const {
    auto it = to_id_.find(token);
    return it == to_id_.end() ? kUnk : it->second;
  }
  const std::string& token(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }
  bool is_reserved(int id) const { return id < kNumReserved; }

  // Line-delimited non-reserved tokens; line i holds the token with
  // id i + kNumReserved.
  void save(const std::filesystem::path& p) const;
  static Vocab load(const std::filesystem::path& p);

 private:
  void add(const std::string& token);
  std::unordered_map<std::string, int> to_id_;
  std::vector<std::string> tokens_;
};

// True when every character of the token is punctuation.
bool is_punctuation_token(const std::string& token);

// Lowercased whitespace-split words of a table cell (cells in this corpus
// are single words; multi-word cells share the cell's coordinates).
std::vector<std::string> tokenize_cell(const std::string& cell);

// One encoded (statement, table) pair. All streams have length max_len;
// the first attention_len positions are real, the rest [PAD]. Coordinates
// are zero outside the table segment; header cells carry row_id 0 and data
// rows 1..R; rank_ids are nonzero only for cells of numeric columns.
struct EncodedInput {
  std::vector<int32_t> token_ids;
  std::vector<int32_t> segment_ids;
  std::vector<int32_t> row_ids;
  std::vector<int32_t> col_ids;
  std::vector<int32_t> rank_ids;
  std::vector<int32_t> position_ids;
  int attention_len = 0;
};

// 1-based ascending dense ranks; equal values share a rank. Throws
// ParseError on a non-numeric cell.
std::vector<int> numeric_ranks(const std::vector<std::string>& cells);

// Layout: [CLS] statement [SEP] header-row data-rows..., truncated by
// dropping trailing whole rows. The statement itself is never truncated;
// a statement that cannot fit with its [CLS]/[SEP] raises StatementTooLong.
EncodedInput encode(const std::vector<std::string>& statement,
                    const Table& table, const Vocab& vocab, int max_len);

}  // namespace tabsal

#endif  // TABSAL_ENCODER_HPP_
