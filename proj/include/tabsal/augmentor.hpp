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

#ifndef TABSAL_AUGMENTOR_HPP_
#define TABSAL_AUGMENTOR_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tabsal/datamodel.hpp"
#include "tabsal/encoder.hpp"
#include "tabsal/network.hpp"
#include "tabsal/salience.hpp"

namespace tabsal {

enum class AugMode { kProbabilistic, kUniform, kOff };
const char* to_string(AugMode m);
AugMode aug_mode_from_string(const std::string& s);

// Statement-only masked-token model; its encode path always supplies an
// empty table.
struct MlmModel {
  Params params;
  Vocab vocab;
};

// Top-k fill-in candidates for the masked position, sorted by probability
// descending. Candidates exclude the original token, every reserved token,
// and punctuation-only tokens; probabilities are the raw softmax values
// with no renormalization after the exclusions.
std::vector<std::pair<std::string, double>> propose(
    const std::vector<std::string>& statement, int mask_index,
    const MlmModel& mlm, int k);

// The original statement (weight exactly 1) followed by one instance per
// surviving proposal for the least salient eligible token, weighted by
// proposal probability. The original alone when no token is eligible.
// Labels are copied from the source.
std::vector<AugmentedInstance> augment(const LabeledInstance& instance,
                                       const SalienceProfile& profile,
                                       const MlmModel& mlm, int k);

// Augments the train split only; val and test are never touched. Uniform
// mode keeps the same proposals but assigns weight 1.0 to every record.
std::vector<AugmentedInstance> augment_dataset(
    const Dataset& dataset,
    const std::map<std::string, SalienceProfile>& profiles,
    const MlmModel& mlm, int k, AugMode mode);

}  // namespace tabsal

#endif  // TABSAL_AUGMENTOR_HPP_
