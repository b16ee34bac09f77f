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

#ifndef TABSAL_CONFIG_HPP_
#define TABSAL_CONFIG_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tabsal/network.hpp"
#include "tabsal/synthgen.hpp"
#include "tabsal/trainer.hpp"

namespace tabsal {

// Everything the pipeline reads from one place. `desk` trains on a laptop
// in minutes; `paper` carries the published-scale training hyperparameters
// (lr 5e-5, batch 32, 10k steps, max_len 512) for anyone scaling up.
struct AppConfig {
  std::string preset = "desk";
  GenConfig gen;
  ModelConfig model;  // vocab_size stays 0 until a vocabulary exists
  TrainConfig train;
  int salience_threads = 0;  // 0 = hardware default

  void validate() const;
};

AppConfig desk_preset();
AppConfig paper_preset();
AppConfig preset_by_name(const std::string& name);

// key=value lines, '#' comments. Unknown keys are rejected.
void apply_config_file(AppConfig& config, const std::filesystem::path& p);
void apply_override(AppConfig& config, const std::string& key,
                    const std::string& value);

// Resolution order: preset, then config file, then --set overrides, then
// --seed (which re-seeds both generation and training).
AppConfig resolve_config(const std::string& preset,
                         const std::optional<std::filesystem::path>& file,
                         const std::vector<std::string>& overrides,
                         std::optional<uint64_t> seed);

std::string config_echo_json(const AppConfig& config);

// A commented config file with every key at its current value.
void write_config_file(const AppConfig& config,
                       const std::filesystem::path& p);

}  // namespace tabsal

#endif  // TABSAL_CONFIG_HPP_
