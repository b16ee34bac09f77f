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

#include "tabsal/augmentor.hpp"

#include <algorithm>

#include "tabsal/error.hpp"

namespace tabsal {

const char* to_string(AugMode m) {
  switch (m) {
    case AugMode::kProbabilistic: return "probabilistic";
    case AugMode::kUniform: return "uniform";
    default: return "off";
  }
}

AugMode aug_mode_from_string(const std::string& s) {
  if (s == "probabilistic") return AugMode::kProbabilistic;
  if (s == "uniform") return AugMode::kUniform;
  if (s == "off") return AugMode::kOff;
  throw UsageError("unknown augmentation mode '" + s + "'");
}

std::vector<std::pair<std::string, double>> propose(
    const std::vector<std::string>& statement, int mask_index,
    const MlmModel& mlm, int k) {
  if (mask_index < 0 || mask_index >= static_cast<int>(statement.size()))
    throw IndexError("mask index " + std::to_string(mask_index) +
                     " outside statement of length " +
                     std::to_string(statement.size()));
  if (k <= 0) return {};

  std::vector<std::string> masked = statement;
  const std::string original = statement[mask_index];
  masked[mask_index] = "[MASK]";

  // Masked sentence completion never sees the table.
  Table empty;
  EncodedInput enc =
      encode(masked, empty, mlm.vocab, mlm.params.config.max_len);
  std::vector<double> dist =
      masked_token_distribution(mlm.params, enc, 1 + mask_index);

  std::vector<int> ids;
  ids.reserve(dist.size());
  for (int id = Vocab::kNumReserved; id < mlm.vocab.size(); ++id) {
    const std::string& tok = mlm.vocab.token(id);
    if (tok == original || is_punctuation_token(tok)) continue;
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] > dist[b];
    return a < b;
  });
  if (static_cast<int>(ids.size()) > k) ids.resize(k);

  std::vector<std::pair<std::string, double>> out;
  out.reserve(ids.size());
  for (int id : ids) out.emplace_back(mlm.vocab.token(id), dist[id]);
  return out;
}

std::vector<AugmentedInstance> augment(const LabeledInstance& instance,
                                       const SalienceProfile& profile,
                                       const MlmModel& mlm, int k) {
  if (profile.instance_id != instance.id ||
      profile.scores.size() != instance.statement.size())
    throw MissingProfile("profile does not match instance " + instance.id);

  std::vector<AugmentedInstance> out;
  AugmentedInstance original;
  original.source_id = instance.id;
  original.statement = instance.statement;
  original.label = instance.label;
  original.replaced_index = -1;
  original.weight = 1.0;
  out.push_back(std::move(original));

  int idx = least_salient(profile, instance.statement);
  if (idx == kNoEligibleToken) return out;

  for (const auto& [token, prob] : propose(instance.statement, idx, mlm, k)) {
    AugmentedInstance aug;
    aug.source_id = instance.id;
    aug.statement = instance.statement;
    aug.statement[idx] = token;
    aug.label = instance.label;
    aug.replaced_index = idx;
    aug.replacement = token;
    aug.weight = prob;
    out.push_back(std::move(aug));
  }
  return out;
}

std::vector<AugmentedInstance> augment_dataset(
    const Dataset& dataset,
    const std::map<std::string, SalienceProfile>& profiles,
    const MlmModel& mlm, int k, AugMode mode) {
  if (mode == AugMode::kOff)
    throw UsageError("augment_dataset requires probabilistic or uniform mode");

  std::vector<AugmentedInstance> out;
  for (const auto& inst : dataset.instances) {
    if (inst.split != Split::kTrain) continue;
    auto it = profiles.find(inst.id);
    if (it == profiles.end())
      throw MissingProfile("no salience profile for train instance " + inst.id);
    std::vector<AugmentedInstance> augs = augment(inst, it->second, mlm, k);
    if (mode == AugMode::kUniform)
      for (auto& a : augs) a.weight = 1.0;
    out.insert(out.end(), std::make_move_iterator(augs.begin()),
               std::make_move_iterator(augs.end()));
  }
  return out;
}

}  // namespace tabsal
