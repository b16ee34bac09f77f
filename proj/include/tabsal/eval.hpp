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

#ifndef TABSAL_EVAL_HPP_
#define TABSAL_EVAL_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "tabsal/datamodel.hpp"
#include "tabsal/network.hpp"
#include "tabsal/salience.hpp"

namespace tabsal {

struct EvalReport {
  std::string split;
  int n_instances = 0;
  int n_correct = 0;
  int n_simple = 0;
  int n_simple_correct = 0;
  int n_complex = 0;
  int n_complex_correct = 0;
  double accuracy = 0.0;
  double simple_accuracy = 0.0;
  double complex_accuracy = 0.0;
  std::string checkpoint_id;  // content hash of the evaluated parameters
  std::string config_echo;    // model configuration, JSON
};

// Prediction is entailed iff p > 0.5; evaluation never augments data and
// uses only the verification head. Deterministic and side-effect free.
EvalReport evaluate(const Params& params, const Vocab& vocab,
                    const Dataset& dataset, Split split);

std::string eval_report_json(const EvalReport& report);
std::string render_eval_report(const EvalReport& report);
void save_eval_report(const EvalReport& report, const std::filesystem::path& p);

// FNV-1a over the raw parameter bytes; stable id for traceability.
std::string params_fingerprint(const Params& params);

// ---- Salience heatmaps -----------------------------------------------------

struct HeatmapProposal {
  std::string token;
  double weight = 0.0;
  bool operator==(const HeatmapProposal&) const = default;
};

struct HeatmapRecord {
  std::string instance_id;
  std::vector<std::string> tokens;
  std::vector<double> scores;
  int most_salient = 0;
  int least_salient = kNoEligibleToken;
  std::vector<HeatmapProposal> proposals;
  bool operator==(const HeatmapRecord&) const = default;
};

HeatmapRecord make_heatmap_record(const SalienceProfile& profile,
                                  const std::vector<std::string>& tokens,
                                  std::vector<HeatmapProposal> proposals);

// Monochrome-safe rendering: each token is underlined by its score decile
// (digit 0-9), with the most/least salient positions flagged and the
// replacement proposals listed with their weights.
std::string render_heatmap(const HeatmapRecord& record);

void save_heatmap_file(const std::vector<HeatmapRecord>& records,
                       const std::filesystem::path& p);
std::vector<HeatmapRecord> load_heatmap_file(const std::filesystem::path& p);

}  // namespace tabsal

#endif  // TABSAL_EVAL_HPP_
