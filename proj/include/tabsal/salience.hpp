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

#ifndef TABSAL_SALIENCE_HPP_
#define TABSAL_SALIENCE_HPP_

#include <functional>
#include <vector>

#include "tabsal/datamodel.hpp"
#include "tabsal/encoder.hpp"
#include "tabsal/network.hpp"

namespace tabsal {

// A frozen verification-trained model used for counterfactual probing.
struct ProbeModel {
  Params params;
  Vocab vocab;
};

// Counterfactual token salience: for each statement position t, the
// absolute change of the probe's confidence in the gold label when token t
// is replaced by [MASK]. Because the gold-label probability is p for
// entailed and 1-p for refuted instances, the absolute difference is the
// same number either way, and the implementation computes |p - p_t|
// directly; scores are exactly label-complement invariant.
SalienceProfile estimate(const LabeledInstance& instance, const Table& table,
                         const ProbeModel& probe);

// Reference estimator over an arbitrary entailment scorer; runs one scorer
// call per masked variant, with no batching. Tests use it both with
// hand-built stubs and as the oracle for the batched `estimate`.
SalienceProfile estimate_scored(
    const LabeledInstance& instance,
    const std::function<double(const std::vector<std::string>&)>& entail_prob);

// Argmax of the scores; ties resolve to the lowest index.
int most_salient(const SalienceProfile& profile);

inline constexpr int kNoEligibleToken = -1;

// Argmin over non-punctuation tokens, ties to the lowest index;
// kNoEligibleToken when every token is punctuation (the instance is then
// skipped for augmentation).
int least_salient(const SalienceProfile& profile,
                  const std::vector<std::string>& tokens);

// Profiles for every instance of a split, in dataset order. Instances are
// probed in parallel; each one's arithmetic is independent, so the result
// matches the serial computation exactly. `limit` >= 0 bounds the probing
// to the first N instances.
std::vector<SalienceProfile> estimate_profiles(const Dataset& dataset,
                                               Split split,
                                               const ProbeModel& probe,
                                               int limit = -1,
                                               int n_threads = 0);

}  // namespace tabsal

#endif  // TABSAL_SALIENCE_HPP_
