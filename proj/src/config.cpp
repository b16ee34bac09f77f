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

#include "tabsal/config.hpp"

#include <charconv>
#include <fstream>

#include <json.hpp>

#include "tabsal/error.hpp"

namespace tabsal {

using nlohmann::json;

void AppConfig::validate() const {
  gen.validate();
  train.validate();
  // model.validate() needs vocab_size, which only exists once a vocabulary
  // is built; the trainer validates the fully assembled ModelConfig.
}

AppConfig desk_preset() {
  AppConfig c;
  c.preset = "desk";
  return c;  // struct defaults are the desk preset
}

AppConfig paper_preset() {
  AppConfig c;
  c.preset = "paper";
  c.model.max_len = 512;
  c.train.learning_rate = 5e-5;
  c.train.batch_size = 32;
  c.train.total_steps = 10000;
  return c;
}

AppConfig preset_by_name(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper") return paper_preset();
  throw UsageError("unknown preset '" + name + "' (expected desk or paper)");
}

namespace {

int parse_int(const std::string& key, const std::string& s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw UsageError("config key " + key + ": bad integer '" + s + "'");
  return v;
}

uint64_t parse_u64(const std::string& key, const std::string& s) {
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw UsageError("config key " + key + ": bad integer '" + s + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& s) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key " + key + ": bad number '" + s + "'");
  }
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_override(AppConfig& c, const std::string& key,
                    const std::string& value) {
  if (key == "gen.tables_train") c.gen.tables_train = parse_int(key, value);
  else if (key == "gen.tables_val") c.gen.tables_val = parse_int(key, value);
  else if (key == "gen.tables_test") c.gen.tables_test = parse_int(key, value);
  else if (key == "gen.rows_min") c.gen.rows_min = parse_int(key, value);
  else if (key == "gen.rows_max") c.gen.rows_max = parse_int(key, value);
  else if (key == "gen.numeric_cols") c.gen.numeric_cols = parse_int(key, value);
  else if (key == "gen.text_cols") c.gen.text_cols = parse_int(key, value);
  else if (key == "gen.statements_per_table")
    c.gen.statements_per_table = parse_int(key, value);
  else if (key == "gen.refute_fraction")
    c.gen.refute_fraction = parse_double(key, value);
  else if (key == "gen.value_min") c.gen.value_min = parse_int(key, value);
  else if (key == "gen.value_max") c.gen.value_max = parse_int(key, value);
  else if (key == "model.d_model") c.model.d_model = parse_int(key, value);
  else if (key == "model.n_layers") c.model.n_layers = parse_int(key, value);
  else if (key == "model.n_heads") c.model.n_heads = parse_int(key, value);
  else if (key == "model.d_ffn") c.model.d_ffn = parse_int(key, value);
  else if (key == "model.max_len") c.model.max_len = parse_int(key, value);
  else if (key == "model.max_rows") c.model.max_rows = parse_int(key, value);
  else if (key == "model.max_cols") c.model.max_cols = parse_int(key, value);
  else if (key == "model.max_rank") c.model.max_rank = parse_int(key, value);
  else if (key == "model.dropout") c.model.dropout = parse_double(key, value);
  else if (key == "model.init_std") c.model.init_std = parse_double(key, value);
  else if (key == "train.alpha") c.train.alpha = parse_double(key, value);
  else if (key == "train.k") c.train.k = parse_int(key, value);
  else if (key == "train.learning_rate")
    c.train.learning_rate = parse_double(key, value);
  else if (key == "train.batch_size") c.train.batch_size = parse_int(key, value);
  else if (key == "train.warmup_ratio")
    c.train.warmup_ratio = parse_double(key, value);
  else if (key == "train.total_steps")
    c.train.total_steps = parse_int(key, value);
  else if (key == "train.weight_decay")
    c.train.weight_decay = parse_double(key, value);
  else if (key == "train.masking_strategy")
    c.train.masking_strategy = masking_strategy_from_string(value);
  else if (key == "train.aug_mode")
    c.train.aug_mode = aug_mode_from_string(value);
  else if (key == "train.lv_denominator")
    c.train.lv_denominator = lv_denominator_from_string(value);
  else if (key == "train.eval_every")
    c.train.eval_every = parse_int(key, value);
  else if (key == "train.grad_clip")
    c.train.grad_clip = parse_double(key, value);
  else if (key == "salience.threads")
    c.salience_threads = parse_int(key, value);
  else if (key == "seed") {
    uint64_t s = parse_u64(key, value);
    c.gen.seed = s;
    c.train.seed = s;
  } else {
    throw UsageError("unknown config key '" + key + "'");
  }
}

void apply_config_file(AppConfig& config, const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open config file " + p.string());
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw UsageError(p.string() + ":" + std::to_string(line_no) +
                       ": expected key=value");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    apply_override(config, key, value);
  }
}

AppConfig resolve_config(const std::string& preset,
                         const std::optional<std::filesystem::path>& file,
                         const std::vector<std::string>& overrides,
                         std::optional<uint64_t> seed) {
  AppConfig c = preset_by_name(preset);
  if (file) apply_config_file(c, *file);
  for (const auto& ov : overrides) {
    size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw UsageError("--set expects key=value, got '" + ov + "'");
    apply_override(c, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }
  if (seed) apply_override(c, "seed", std::to_string(*seed));
  c.validate();
  return c;
}

std::string config_echo_json(const AppConfig& c) {
  json j{
      {"preset", c.preset},
      {"gen",
       {{"tables_train", c.gen.tables_train},
        {"tables_val", c.gen.tables_val},
        {"tables_test", c.gen.tables_test},
        {"rows_min", c.gen.rows_min},
        {"rows_max", c.gen.rows_max},
        {"numeric_cols", c.gen.numeric_cols},
        {"text_cols", c.gen.text_cols},
        {"statements_per_table", c.gen.statements_per_table},
        {"refute_fraction", c.gen.refute_fraction},
        {"value_min", c.gen.value_min},
        {"value_max", c.gen.value_max},
        {"seed", c.gen.seed}}},
      {"model",
       {{"d_model", c.model.d_model},
        {"n_layers", c.model.n_layers},
        {"n_heads", c.model.n_heads},
        {"d_ffn", c.model.d_ffn},
        {"max_len", c.model.max_len},
        {"max_rows", c.model.max_rows},
        {"max_cols", c.model.max_cols},
        {"max_rank", c.model.max_rank},
        {"dropout", c.model.dropout},
        {"init_std", c.model.init_std}}},
      {"train",
       {{"alpha", c.train.alpha},
        {"k", c.train.k},
        {"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"warmup_ratio", c.train.warmup_ratio},
        {"total_steps", c.train.total_steps},
        {"weight_decay", c.train.weight_decay},
        {"seed", c.train.seed},
        {"masking_strategy", to_string(c.train.masking_strategy)},
        {"aug_mode", to_string(c.train.aug_mode)},
        {"lv_denominator", to_string(c.train.lv_denominator)},
        {"eval_every", c.train.eval_every},
        {"grad_clip", c.train.grad_clip}}},
      {"salience", {{"threads", c.salience_threads}}}};
  return j.dump();
}

void write_config_file(const AppConfig& c, const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  out << "# tabsal configuration (preset: " << c.preset << ")\n"
      << "seed=" << c.gen.seed << "\n\n"
      << "# synthetic data\n"
      << "gen.tables_train=" << c.gen.tables_train << "\n"
      << "gen.tables_val=" << c.gen.tables_val << "\n"
      << "gen.tables_test=" << c.gen.tables_test << "\n"
      << "gen.rows_min=" << c.gen.rows_min << "\n"
      << "gen.rows_max=" << c.gen.rows_max << "\n"
      << "gen.numeric_cols=" << c.gen.numeric_cols << "\n"
      << "gen.text_cols=" << c.gen.text_cols << "\n"
      << "gen.statements_per_table=" << c.gen.statements_per_table << "\n"
      << "gen.refute_fraction=" << c.gen.refute_fraction << "\n"
      << "gen.value_min=" << c.gen.value_min << "\n"
      << "gen.value_max=" << c.gen.value_max << "\n\n"
      << "# model\n"
      << "model.d_model=" << c.model.d_model << "\n"
      << "model.n_layers=" << c.model.n_layers << "\n"
      << "model.n_heads=" << c.model.n_heads << "\n"
      << "model.d_ffn=" << c.model.d_ffn << "\n"
      << "model.max_len=" << c.model.max_len << "\n"
      << "model.max_rows=" << c.model.max_rows << "\n"
      << "model.max_cols=" << c.model.max_cols << "\n"
      << "model.max_rank=" << c.model.max_rank << "\n"
      << "model.dropout=" << c.model.dropout << "\n"
      << "model.init_std=" << c.model.init_std << "\n\n"
      << "# training\n"
      << "train.alpha=" << c.train.alpha << "\n"
      << "train.k=" << c.train.k << "\n"
      << "train.learning_rate=" << c.train.learning_rate << "\n"
      << "train.batch_size=" << c.train.batch_size << "\n"
      << "train.warmup_ratio=" << c.train.warmup_ratio << "\n"
      << "train.total_steps=" << c.train.total_steps << "\n"
      << "train.weight_decay=" << c.train.weight_decay << "\n"
      << "train.masking_strategy=" << to_string(c.train.masking_strategy) << "\n"
      << "train.aug_mode=" << to_string(c.train.aug_mode) << "\n"
      << "train.lv_denominator=" << to_string(c.train.lv_denominator) << "\n"
      << "train.eval_every=" << c.train.eval_every << "\n"
      << "train.grad_clip=" << c.train.grad_clip << "\n\n"
      << "# salience probing\n"
      << "salience.threads=" << c.salience_threads << "\n";
  if (!out) throw IoError("failed writing " + p.string());
}

}  // namespace tabsal
