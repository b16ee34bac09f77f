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

#ifndef TABSAL_ABLATE_HPP_
#define TABSAL_ABLATE_HPP_

#include <string>
#include <vector>

#include "tabsal/trainer.hpp"

namespace tabsal {

struct AblationArm {
  std::string group;  // "masking" or "augmentation"
  std::string name;
  bool ok = false;
  std::string error;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  int best_step = 0;
};

struct AblationReferenceRow {
  std::string group;
  std::string name;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct AblationReport {
  std::vector<AblationArm> arms;
  // Published full-scale TabFact figures, shipped for context only; nothing
  // compares against them programmatically.
  std::vector<AblationReferenceRow> reference_rows;
  uint64_t seed = 0;
};

// Four isolated arms from one shared warm start and seed:
//   masking x {salient, random}        with augmentation off
//   augmentation x {prob., uniform}    with the auxiliary task off (alpha=1)
// A failing arm records its error and the others still run.
AblationReport ablate(const Dataset& dataset,
                      const std::map<std::string, SalienceProfile>& profiles,
                      const std::vector<AugmentedInstance>& augmented_prob,
                      const std::vector<AugmentedInstance>& augmented_uniform,
                      const Params& stage_a_params, const Vocab& vocab,
                      const TrainConfig& base_config);

std::string ablation_report_json(const AblationReport& report);
std::string render_ablation_report(const AblationReport& report);

}  // namespace tabsal

#endif  // TABSAL_ABLATE_HPP_
