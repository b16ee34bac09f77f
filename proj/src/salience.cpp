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

#include "tabsal/salience.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "tabsal/error.hpp"

namespace tabsal {

namespace {
constexpr int kProbeChunk = 32;  // masked variants per forward call
}

SalienceProfile estimate(const LabeledInstance& instance, const Table& table,
                         const ProbeModel& probe) {
  const int max_len = probe.params.config.max_len;
  const int n = static_cast<int>(instance.statement.size());

  std::vector<EncodedInput> batch;
  batch.reserve(n + 1);
  batch.push_back(encode(instance.statement, table, probe.vocab, max_len));
  for (int t = 0; t < n; ++t) {
    std::vector<std::string> masked = instance.statement;
    masked[t] = "[MASK]";
    batch.push_back(encode(masked, table, probe.vocab, max_len));
  }

  ForwardOptions opts;
  opts.want_token_logits = false;
  std::vector<double> probs;
  probs.reserve(batch.size());
  for (size_t begin = 0; begin < batch.size(); begin += kProbeChunk) {
    size_t end = std::min(batch.size(), begin + kProbeChunk);
    std::vector<EncodedInput> chunk(batch.begin() + begin, batch.begin() + end);
    BatchOutput out = forward(probe.params, chunk, opts);
    probs.insert(probs.end(), out.entail_prob.begin(), out.entail_prob.end());
  }

  SalienceProfile prof;
  prof.instance_id = instance.id;
  prof.probe_prob_unmasked = probs[0];
  prof.scores.resize(n);
  // |P(y|S,T) - P(y|S'_t,T)| reduces to |p - p_t| for either gold label.
  for (int t = 0; t < n; ++t) prof.scores[t] = std::fabs(probs[0] - probs[t + 1]);
  return prof;
}

SalienceProfile estimate_scored(
    const LabeledInstance& instance,
    const std::function<double(const std::vector<std::string>&)>& entail_prob) {
  const int n = static_cast<int>(instance.statement.size());
  SalienceProfile prof;
  prof.instance_id = instance.id;
  prof.probe_prob_unmasked = entail_prob(instance.statement);
  prof.scores.resize(n);
  for (int t = 0; t < n; ++t) {
    std::vector<std::string> masked = instance.statement;
    masked[t] = "[MASK]";
    prof.scores[t] = std::fabs(prof.probe_prob_unmasked - entail_prob(masked));
  }
  return prof;
}

int most_salient(const SalienceProfile& profile) {
  if (profile.scores.empty())
    throw EmptyProfile("most_salient over an empty profile");
  int best = 0;
  for (int i = 1; i < static_cast<int>(profile.scores.size()); ++i)
    if (profile.scores[i] > profile.scores[best]) best = i;
  return best;
}

int least_salient(const SalienceProfile& profile,
                  const std::vector<std::string>& tokens) {
  if (profile.scores.empty())
    throw EmptyProfile("least_salient over an empty profile");
  if (profile.scores.size() != tokens.size())
    throw MissingProfile("profile length does not match the statement");
  int best = kNoEligibleToken;
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    if (is_punctuation_token(tokens[i])) continue;
    if (best == kNoEligibleToken || profile.scores[i] < profile.scores[best])
      best = i;
  }
  return best;
}

std::vector<SalienceProfile> estimate_profiles(const Dataset& dataset,
                                               Split split,
                                               const ProbeModel& probe,
                                               int limit, int n_threads) {
  std::vector<const LabeledInstance*> insts = dataset.split_instances(split);
  if (limit >= 0 && static_cast<size_t>(limit) < insts.size())
    insts.resize(limit);

  std::vector<SalienceProfile> out(insts.size());
  if (n_threads <= 0) {
    unsigned hw = std::thread::hardware_concurrency();
    n_threads = static_cast<int>(std::clamp(hw, 1u, 8u));
  }
  n_threads = std::min<int>(n_threads, std::max<size_t>(insts.size(), 1));

  // Each worker owns a disjoint slice of output slots; results are
  // identical to the serial order no matter how threads interleave.
  auto work = [&](int worker) {
    for (size_t i = worker; i < insts.size(); i += n_threads)
      out[i] = estimate(*insts[i], dataset.table_for(*insts[i]), probe);
  };
  if (n_threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  return out;
}

}  // namespace tabsal
