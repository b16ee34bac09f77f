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

#ifndef TABSAL_TRAINER_HPP_
#define TABSAL_TRAINER_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tabsal/augmentor.hpp"
#include "tabsal/datamodel.hpp"
#include "tabsal/network.hpp"
#include "tabsal/salience.hpp"

namespace tabsal {

enum class MaskingStrategy { kSalient, kRandom };
enum class LvDenominator { kTimesK, kTimesKPlus1 };

const char* to_string(MaskingStrategy m);
MaskingStrategy masking_strategy_from_string(const std::string& s);
const char* to_string(LvDenominator d);
LvDenominator lv_denominator_from_string(const std::string& s);

struct TrainConfig {
  double alpha = 0.5;  // balance between verification and auxiliary losses
  int k = 3;           // augmentation proposals per statement
  double learning_rate = 3e-4;
  int batch_size = 16;
  double warmup_ratio = 0.1;
  int total_steps = 3000;
  double weight_decay = 0.01;
  uint64_t seed = 42;
  MaskingStrategy masking_strategy = MaskingStrategy::kSalient;
  AugMode aug_mode = AugMode::kProbabilistic;
  // The verification normalizer is printed with N_v * k even though each
  // original expands to k+1 records; both readings are selectable.
  LvDenominator lv_denominator = LvDenominator::kTimesK;
  int eval_every = 250;
  double grad_clip = 1.0;  // global gradient-norm bound, 0 disables

  void validate() const;
};

// Scales gradients so their global L2 norm is at most `max_norm`; returns
// the pre-clip norm.
double clip_gradients(Params& grads, double max_norm);

// ---- Objective terms -------------------------------------------------------

struct VerificationRecord {
  double target = 0.0;  // y_i
  double prob = 0.5;    // p_ij
  double weight = 1.0;  // w_ij
};

// Weighted binary cross-entropy, summed over records:
//   -sum w * (y log p + (1-y) log(1-p)),  probabilities clamped to
// [kProbEps, 1-kProbEps] first.
double verification_loss(const std::vector<VerificationRecord>& records);

struct AuxiliaryRecord {
  std::vector<double> probs;  // distribution over the vocabulary
  int target = 0;             // index of the gold token
};

// Cross-entropy against one-hot targets, summed over records.
double auxiliary_loss(const std::vector<AuxiliaryRecord>& records);

// alpha/(n_v*k) * l_v + (1-alpha)/n_m * l_m, exactly as printed.
double joint_loss(double l_v, double l_m, double alpha, int n_v, int k,
                  int n_m);

// ---- Optimizer and schedule ------------------------------------------------

// Linear warmup to the configured peak over warmup_ratio*total_steps, then
// linear decay to exactly 0 at total_steps. Steps are 1-based.
double lr_at_step(int step, const TrainConfig& config);

// Decoupled weight decay; decay applies to weight matrices only, never to
// biases or layer-norm parameters.
class AdamW {
 public:
  explicit AdamW(const Params& shape, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8);
  void step(Params& params, const Params& grads, double lr,
            double weight_decay);

 private:
  Params m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// ---- Batch assembly --------------------------------------------------------

struct AuxMaskedExample {
  EncodedInput input;
  int position = 0;  // sequence position of the [MASK]
  int target_id = 0;
};

// Masks exactly one statement token of an entailed instance: the most
// salient one, or a uniformly random one under the random strategy.
// Throws RefutedInstanceError for label-0 instances.
AuxMaskedExample build_aux_example(const LabeledInstance& instance,
                                   const SalienceProfile* profile,
                                   const Table& table, const Vocab& vocab,
                                   int max_len, MaskingStrategy strategy,
                                   Rng& rng);

// ---- Training stages -------------------------------------------------------

struct StepRecord {
  int step = 0;
  double loss = 0.0;
  double verification_part = 0.0;
  double auxiliary_part = 0.0;
  double lr = 0.0;
};

void save_metrics_log(const std::vector<StepRecord>& log,
                      const std::filesystem::path& p);
std::vector<StepRecord> load_metrics_log(const std::filesystem::path& p);

struct TrainResult {
  Params final_params;
  Params best_params;
  double best_val_accuracy = -1.0;  // metric depends on the stage
  int best_step = 0;
  std::vector<StepRecord> log;
};

// Stage A: verification-only training on original train instances
// (unweighted binary cross-entropy, mean over the batch). The best-val
// checkpoint becomes the salience probe and the joint warm start.
TrainResult train_stage_a(const Dataset& dataset, const Vocab& vocab,
                          const ModelConfig& model_config,
                          const TrainConfig& train_config);

// Stage A': statement-only masked-token training (no table in the input
// stream); provides the augmentation proposal model.
TrainResult train_stage_a_prime(const Dataset& dataset, const Vocab& vocab,
                                const ModelConfig& model_config,
                                const TrainConfig& train_config);

// Stage C: joint training warm-started from stage A. Each step combines one
// verification batch (weighted originals + augments unless aug_mode=off)
// and one auxiliary batch (masked entailed originals); per-record scales
// make the step loss an unbiased estimate of the printed joint objective.
TrainResult train_joint(const Dataset& dataset,
                        const std::map<std::string, SalienceProfile>& profiles,
                        const std::vector<AugmentedInstance>& augmented,
                        const Params& stage_a_params, const Vocab& vocab,
                        const TrainConfig& train_config);

// Fraction of held-out statements whose masked token is the top-1
// prediction; chance level is 1/vocab_size.
double mlm_recovery_accuracy(const Params& params, const Vocab& vocab,
                             const Dataset& dataset, Split split,
                             uint64_t seed, int limit = -1);

}  // namespace tabsal

#endif  // TABSAL_TRAINER_HPP_
