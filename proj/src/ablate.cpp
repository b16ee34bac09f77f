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

#include "tabsal/ablate.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "tabsal/error.hpp"
#include "tabsal/eval.hpp"

namespace tabsal {

using nlohmann::json;

namespace {

// Accuracy (%) reported for the full-scale TabFact system these arms
// miniaturize. Context rows only; desk-scale numbers are not comparable.
const AblationReferenceRow kReferenceRows[] = {
    {"masking", "random", 82.1, 81.9},
    {"masking", "salient", 82.4, 82.1},
    {"augmentation", "uniform", 81.5, 81.3},
    {"augmentation", "probabilistic", 81.8, 81.9},
};

struct ArmSpec {
  std::string group;
  std::string name;
  TrainConfig config;
  const std::vector<AugmentedInstance>* augmented;
};

}  // namespace

AblationReport ablate(const Dataset& dataset,
                      const std::map<std::string, SalienceProfile>& profiles,
                      const std::vector<AugmentedInstance>& augmented_prob,
                      const std::vector<AugmentedInstance>& augmented_uniform,
                      const Params& stage_a_params, const Vocab& vocab,
                      const TrainConfig& base_config) {
  base_config.validate();
  static const std::vector<AugmentedInstance> kNoAug;

  std::vector<ArmSpec> specs;
  {
    // Masking arms isolate the auxiliary task: augmentation off.
    TrainConfig c = base_config;
    c.aug_mode = AugMode::kOff;
    c.masking_strategy = MaskingStrategy::kSalient;
    specs.push_back({"masking", "salient", c, &kNoAug});
    c.masking_strategy = MaskingStrategy::kRandom;
    specs.push_back({"masking", "random", c, &kNoAug});
  }
  {
    // Augmentation arms isolate the weighting: auxiliary task off.
    TrainConfig c = base_config;
    c.alpha = 1.0;
    c.masking_strategy = base_config.masking_strategy;
    c.aug_mode = AugMode::kProbabilistic;
    specs.push_back({"augmentation", "probabilistic", c, &augmented_prob});
    c.aug_mode = AugMode::kUniform;
    specs.push_back({"augmentation", "uniform", c, &augmented_uniform});
  }

  AblationReport report;
  report.seed = base_config.seed;
  for (const auto& row : kReferenceRows) report.reference_rows.push_back(row);

  for (const auto& spec : specs) {
    AblationArm arm;
    arm.group = spec.group;
    arm.name = spec.name;
    try {
      TrainResult result = train_joint(dataset, profiles, *spec.augmented,
                                       stage_a_params, vocab, spec.config);
      arm.val_accuracy =
          evaluate(result.best_params, vocab, dataset, Split::kVal).accuracy;
      arm.test_accuracy =
          evaluate(result.best_params, vocab, dataset, Split::kTest).accuracy;
      arm.best_step = result.best_step;
      arm.ok = true;
    } catch (const std::exception& e) {
      arm.ok = false;
      arm.error = e.what();
    }
    report.arms.push_back(std::move(arm));
  }
  return report;
}

std::string ablation_report_json(const AblationReport& report) {
  json arms = json::array();
  for (const auto& a : report.arms) {
    arms.push_back(json{{"group", a.group},
                        {"name", a.name},
                        {"ok", a.ok},
                        {"error", a.error},
                        {"val_accuracy", a.val_accuracy},
                        {"test_accuracy", a.test_accuracy},
                        {"best_step", a.best_step}});
  }
  json refs = json::array();
  for (const auto& r : report.reference_rows) {
    refs.push_back(json{{"group", r.group},
                        {"name", r.name},
                        {"val_accuracy_pct", r.val_accuracy},
                        {"test_accuracy_pct", r.test_accuracy},
                        {"gating", false}});
  }
  return json{{"seed", report.seed},
              {"arms", arms},
              {"full_scale_reference_rows", refs}}
      .dump();
}

std::string render_ablation_report(const AblationReport& report) {
  std::ostringstream out;
  char line[200];
  out << "ablation (seed " << report.seed << ")\n";
  out << "group         arm             val      test\n";
  for (const auto& a : report.arms) {
    if (a.ok) {
      std::snprintf(line, sizeof(line), "%-13s %-15s %6.4f   %6.4f\n",
                    a.group.c_str(), a.name.c_str(), a.val_accuracy,
                    a.test_accuracy);
    } else {
      std::snprintf(line, sizeof(line), "%-13s %-15s FAILED: %s\n",
                    a.group.c_str(), a.name.c_str(), a.error.c_str());
    }
    out << line;
  }
  out << "full-scale reference (%), context only, never gated:\n";
  for (const auto& r : report.reference_rows) {
    std::snprintf(line, sizeof(line), "%-13s %-15s %6.1f   %6.1f\n",
                  r.group.c_str(), r.name.c_str(), r.val_accuracy,
                  r.test_accuracy);
    out << line;
  }
  return out.str();
}

}  // namespace tabsal
