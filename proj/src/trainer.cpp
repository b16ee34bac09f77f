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

#include "tabsal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tabsal/error.hpp"
#include "tabsal/eval.hpp"

namespace tabsal {

using nlohmann::json;

const char* to_string(MaskingStrategy m) {
  return m == MaskingStrategy::kSalient ? "salient" : "random";
}
MaskingStrategy masking_strategy_from_string(const std::string& s) {
  if (s == "salient") return MaskingStrategy::kSalient;
  if (s == "random") return MaskingStrategy::kRandom;
  throw UsageError("unknown masking strategy '" + s + "'");
}
const char* to_string(LvDenominator d) {
  return d == LvDenominator::kTimesK ? "k" : "k_plus_1";
}
LvDenominator lv_denominator_from_string(const std::string& s) {
  if (s == "k") return LvDenominator::kTimesK;
  if (s == "k_plus_1") return LvDenominator::kTimesKPlus1;
  throw UsageError("unknown lv_denominator '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw UsageError("alpha must be in [0, 1]");
  if (k <= 0) throw UsageError("k must be positive");
  if (learning_rate <= 0.0) throw UsageError("learning_rate must be positive");
  if (batch_size <= 0) throw UsageError("batch_size must be positive");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0))
    throw UsageError("warmup_ratio must be in [0, 1)");
  if (total_steps <= 0) throw UsageError("total_steps must be positive");
  if (weight_decay < 0.0) throw UsageError("weight_decay must be >= 0");
  if (eval_every <= 0) throw UsageError("eval_every must be positive");
  if (grad_clip < 0.0) throw UsageError("grad_clip must be >= 0");
}

namespace {
double clamp_prob(double p) {
  return std::min(std::max(p, kProbEps), 1.0 - kProbEps);
}
}  // namespace

double verification_loss(const std::vector<VerificationRecord>& records) {
  double loss = 0.0;
  for (const auto& r : records) {
    const double p = clamp_prob(r.prob);
    loss -= r.weight * (r.target * std::log(p) +
                        (1.0 - r.target) * std::log(1.0 - p));
  }
  if (!std::isfinite(loss))
    throw NonFiniteError("verification loss is non-finite");
  return loss;
}

double auxiliary_loss(const std::vector<AuxiliaryRecord>& records) {
  double loss = 0.0;
  for (const auto& r : records) {
    if (r.target < 0 || r.target >= static_cast<int>(r.probs.size()))
      throw DimensionError("auxiliary target outside the vocabulary");
    loss -= std::log(clamp_prob(r.probs[r.target]));
  }
  if (!std::isfinite(loss))
    throw NonFiniteError("auxiliary loss is non-finite");
  return loss;
}

double joint_loss(double l_v, double l_m, double alpha, int n_v, int k,
                  int n_m) {
  return alpha / (static_cast<double>(n_v) * k) * l_v +
         (1.0 - alpha) / static_cast<double>(n_m) * l_m;
}

double lr_at_step(int step, const TrainConfig& config) {
  const double peak = config.learning_rate;
  const long warmup = std::llround(config.warmup_ratio * config.total_steps);
  if (warmup > 0 && step <= warmup)
    return peak * (static_cast<double>(step) / static_cast<double>(warmup));
  if (step >= config.total_steps) return 0.0;
  return peak * (static_cast<double>(config.total_steps - step) /
                 static_cast<double>(config.total_steps - warmup));
}

AdamW::AdamW(const Params& shape, double beta1, double beta2, double eps)
    : m_(zeros_like(shape)), v_(zeros_like(shape)), beta1_(beta1),
      beta2_(beta2), eps_(eps) {}

namespace {

template <typename P>
std::vector<std::pair<Mat*, ParamKind>> tensor_list(P& params) {
  std::vector<std::pair<Mat*, ParamKind>> out;
  visit_params(params, [&](const std::string&, Mat& m, ParamKind kind) {
    out.emplace_back(&m, kind);
  });
  return out;
}

std::vector<const Mat*> tensor_list_const(const Params& params) {
  std::vector<const Mat*> out;
  visit_params(params, [&](const std::string&, const Mat& m, ParamKind) {
    out.push_back(&m);
  });
  return out;
}

}  // namespace

void AdamW::step(Params& params, const Params& grads, double lr,
                 double weight_decay) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto ps = tensor_list(params);
  auto gs = tensor_list_const(grads);
  auto ms = tensor_list(m_);
  auto vs = tensor_list(v_);
  for (size_t i = 0; i < ps.size(); ++i) {
    Mat& p = *ps[i].first;
    const Mat& g = *gs[i];
    Mat& m = *ms[i].first;
    Mat& v = *vs[i].first;
    const double wd = ps[i].second == ParamKind::kWeight ? weight_decay : 0.0;
    for (size_t j = 0; j < p.size(); ++j) {
      const double gj = g.v[j];
      m.v[j] = beta1_ * m.v[j] + (1.0 - beta1_) * gj;
      v.v[j] = beta2_ * v.v[j] + (1.0 - beta2_) * gj * gj;
      const double mhat = m.v[j] / bc1;
      const double vhat = v.v[j] / bc2;
      p.v[j] -= lr * (mhat / (std::sqrt(vhat) + eps_) + wd * p.v[j]);
    }
  }
}

double clip_gradients(Params& grads, double max_norm) {
  double sq = 0.0;
  visit_params(grads, [&](const std::string&, const Mat& m, ParamKind) {
    for (double x : m.v) sq += x * x;
  });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    visit_params(grads, [&](const std::string&, Mat& m, ParamKind) {
      for (double& x : m.v) x *= scale;
    });
  }
  return norm;
}

AuxMaskedExample build_aux_example(const LabeledInstance& instance,
                                   const SalienceProfile* profile,
                                   const Table& table, const Vocab& vocab,
                                   int max_len, MaskingStrategy strategy,
                                   Rng& rng) {
  if (instance.label != 1)
    throw RefutedInstanceError("masked-token task requires an entailed "
                               "statement, got instance " + instance.id);
  int pos;
  if (strategy == MaskingStrategy::kSalient) {
    if (profile == nullptr)
      throw MissingProfile("salient masking needs a profile for " + instance.id);
    if (profile->scores.size() != instance.statement.size())
      throw MissingProfile("profile does not match instance " + instance.id);
    pos = most_salient(*profile);
  } else {
    pos = static_cast<int>(rng.uniform_u64(instance.statement.size()));
  }

  AuxMaskedExample out;
  out.target_id = vocab.id(instance.statement[pos]);
  std::vector<std::string> masked = instance.statement;
  masked[pos] = "[MASK]";
  out.input = encode(masked, table, vocab, max_len);
  out.position = 1 + pos;  // [CLS] precedes the statement
  return out;
}

void save_metrics_log(const std::vector<StepRecord>& log,
                      const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  for (const auto& r : log) {
    json j{{"step", r.step},
           {"loss", r.loss},
           {"verification_part", r.verification_part},
           {"auxiliary_part", r.auxiliary_part},
           {"lr", r.lr}};
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("failed writing " + p.string());
}

std::vector<StepRecord> load_metrics_log(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string() + " for reading");
  std::vector<StepRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    out.push_back({j.at("step").get<int>(), j.at("loss").get<double>(),
                   j.at("verification_part").get<double>(),
                   j.at("auxiliary_part").get<double>(),
                   j.at("lr").get<double>()});
  }
  return out;
}

namespace {

void zero_grads(Params& grads) {
  visit_params(grads, [](const std::string&, Mat& m, ParamKind) { m.zero(); });
}

// Epoch-shuffled index stream; reshuffles whenever the pool is exhausted.
class BatchSampler {
 public:
  BatchSampler(size_t pool_size, Rng rng)
      : rng_(rng), order_(pool_size), cursor_(pool_size) {
    for (size_t i = 0; i < pool_size; ++i) order_[i] = i;
  }
  size_t next() {
    if (cursor_ >= order_.size()) {
      rng_.shuffle(order_);
      cursor_ = 0;
    }
    return order_[cursor_++];
  }

 private:
  Rng rng_;
  std::vector<size_t> order_;
  size_t cursor_;
};

}  // namespace

TrainResult train_stage_a(const Dataset& dataset, const Vocab& vocab,
                          const ModelConfig& model_config,
                          const TrainConfig& config) {
  config.validate();
  model_config.validate();

  const auto train = dataset.split_instances(Split::kTrain);
  if (train.empty()) throw IntegrityError("train split is empty");

  std::vector<EncodedInput> encoded;
  std::vector<double> targets;
  encoded.reserve(train.size());
  for (const auto* inst : train) {
    encoded.push_back(encode(inst->statement, dataset.table_for(*inst), vocab,
                             model_config.max_len));
    targets.push_back(inst->label);
  }

  Params params = init_params(model_config, config.seed);
  Params grads = zeros_like(params);
  AdamW opt(params);
  Rng sample_rng(Rng::mix(config.seed, Rng::hash_str("stage-a-batches")));
  Rng dropout_rng(Rng::mix(config.seed, Rng::hash_str("stage-a-dropout")));
  BatchSampler sampler(encoded.size(), sample_rng.child(1));

  TrainResult result;
  result.best_params = params;
  for (int step = 1; step <= config.total_steps; ++step) {
    LossBatch batch;
    const double scale = 1.0 / config.batch_size;
    for (int b = 0; b < config.batch_size; ++b) {
      size_t i = sampler.next();
      batch.verification.push_back({encoded[i], targets[i], 1.0, scale});
    }
    zero_grads(grads);
    LossValue loss =
        loss_and_gradients(params, batch, grads, true, &dropout_rng);
    clip_gradients(grads, config.grad_clip);
    const double lr = lr_at_step(step, config);
    opt.step(params, grads, lr, config.weight_decay);
    result.log.push_back(
        {step, loss.total, loss.verification_part, loss.auxiliary_part, lr});

    if (step % config.eval_every == 0 || step == config.total_steps) {
      double acc = evaluate(params, vocab, dataset, Split::kVal).accuracy;
      if (acc > result.best_val_accuracy) {
        result.best_val_accuracy = acc;
        result.best_params = params;
        result.best_step = step;
      }
    }
  }
  result.final_params = std::move(params);
  return result;
}

TrainResult train_stage_a_prime(const Dataset& dataset, const Vocab& vocab,
                                const ModelConfig& model_config,
                                const TrainConfig& config) {
  config.validate();
  model_config.validate();

  const auto train = dataset.split_instances(Split::kTrain);
  if (train.empty()) throw IntegrityError("train split is empty");

  // Statement-only stream: the table never enters the input.
  const Table empty_table;
  std::vector<EncodedInput> encoded;
  std::vector<const LabeledInstance*> insts;
  for (const auto* inst : train) {
    encoded.push_back(
        encode(inst->statement, empty_table, vocab, model_config.max_len));
    insts.push_back(inst);
  }

  Params params = init_params(
      model_config, Rng::mix(config.seed, Rng::hash_str("stage-ap-init")));
  Params grads = zeros_like(params);
  AdamW opt(params);
  Rng sample_rng(Rng::mix(config.seed, Rng::hash_str("stage-ap-batches")));
  Rng mask_rng(Rng::mix(config.seed, Rng::hash_str("stage-ap-mask")));
  Rng dropout_rng(Rng::mix(config.seed, Rng::hash_str("stage-ap-dropout")));
  BatchSampler sampler(encoded.size(), sample_rng.child(1));

  TrainResult result;
  result.best_params = params;
  for (int step = 1; step <= config.total_steps; ++step) {
    LossBatch batch;
    const double scale = 1.0 / config.batch_size;
    for (int b = 0; b < config.batch_size; ++b) {
      size_t i = sampler.next();
      // A fresh random mask position each visit.
      const auto& stmt = insts[i]->statement;
      int pos = static_cast<int>(mask_rng.uniform_u64(stmt.size()));
      AuxExample ex;
      ex.input = encoded[i];
      ex.input.token_ids[1 + pos] = Vocab::kMask;
      ex.position = 1 + pos;
      ex.target_id = vocab.id(stmt[pos]);
      ex.scale = scale;
      batch.auxiliary.push_back(std::move(ex));
    }
    zero_grads(grads);
    LossValue loss =
        loss_and_gradients(params, batch, grads, true, &dropout_rng);
    clip_gradients(grads, config.grad_clip);
    const double lr = lr_at_step(step, config);
    opt.step(params, grads, lr, config.weight_decay);
    result.log.push_back(
        {step, loss.total, loss.verification_part, loss.auxiliary_part, lr});

    if (step % config.eval_every == 0 || step == config.total_steps) {
      double acc = mlm_recovery_accuracy(params, vocab, dataset, Split::kVal,
                                         config.seed, 200);
      if (acc > result.best_val_accuracy) {
        result.best_val_accuracy = acc;
        result.best_params = params;
        result.best_step = step;
      }
    }
  }
  result.final_params = std::move(params);
  return result;
}

TrainResult train_joint(const Dataset& dataset,
                        const std::map<std::string, SalienceProfile>& profiles,
                        const std::vector<AugmentedInstance>& augmented,
                        const Params& stage_a_params, const Vocab& vocab,
                        const TrainConfig& config) {
  config.validate();
  const ModelConfig& model_config = stage_a_params.config;
  const int max_len = model_config.max_len;

  std::map<std::string, const LabeledInstance*> by_id;
  const auto train = dataset.split_instances(Split::kTrain);
  for (const auto* inst : train) by_id.emplace(inst->id, inst);
  const int n_v = static_cast<int>(train.size());
  if (n_v == 0) throw IntegrityError("train split is empty");

  // Verification pool: the augmented corpus (originals ride along with
  // weight 1), or the plain originals when augmentation is off.
  struct VerRecord {
    EncodedInput input;
    double target;
    double weight;
  };
  std::vector<VerRecord> ver_pool;
  if (config.aug_mode == AugMode::kOff) {
    for (const auto* inst : train)
      ver_pool.push_back({encode(inst->statement, dataset.table_for(*inst),
                                 vocab, max_len),
                          static_cast<double>(inst->label), 1.0});
  } else {
    for (const auto& rec : augmented) {
      auto it = by_id.find(rec.source_id);
      if (it == by_id.end())
        throw IntegrityError("augmented record references unknown instance " +
                             rec.source_id);
      ver_pool.push_back({encode(rec.statement,
                                 dataset.table_for(*it->second), vocab,
                                 max_len),
                          static_cast<double>(rec.label), rec.weight});
    }
    if (ver_pool.empty())
      throw IntegrityError("augmented corpus is empty with aug_mode != off");
  }

  // Auxiliary pool: entailed originals only.
  std::vector<const LabeledInstance*> aux_pool;
  for (const auto* inst : train)
    if (inst->label == 1) aux_pool.push_back(inst);
  const int n_m = static_cast<int>(aux_pool.size());
  if (config.alpha < 1.0) {
    if (n_m == 0)
      throw IntegrityError("no entailed train statements for the auxiliary task");
    for (const auto* inst : aux_pool)
      if (profiles.find(inst->id) == profiles.end())
        throw MissingProfile("no salience profile for train instance " +
                             inst->id);
  }

  // Per-record scales make each step's loss an unbiased estimate of
  //   alpha/(N_v*denom_k) * L_v + (1-alpha)/N_m * L_m
  // under epoch-shuffled sampling of both pools.
  const double denom_k = config.lv_denominator == LvDenominator::kTimesK
                             ? static_cast<double>(config.k)
                             : static_cast<double>(config.k) + 1.0;
  const double ver_scale = config.alpha * static_cast<double>(ver_pool.size()) /
                           (static_cast<double>(n_v) * denom_k *
                            static_cast<double>(config.batch_size));
  const double aux_scale =
      (1.0 - config.alpha) / static_cast<double>(config.batch_size);

  Params params = stage_a_params;
  Params grads = zeros_like(params);
  AdamW opt(params);
  Rng ver_rng(Rng::mix(config.seed, Rng::hash_str("joint-ver")));
  Rng aux_rng(Rng::mix(config.seed, Rng::hash_str("joint-aux")));
  Rng mask_rng(Rng::mix(config.seed, Rng::hash_str("joint-mask")));
  Rng dropout_rng(Rng::mix(config.seed, Rng::hash_str("joint-dropout")));
  BatchSampler ver_sampler(ver_pool.size(), ver_rng.child(1));
  BatchSampler aux_sampler(std::max<size_t>(aux_pool.size(), 1),
                           aux_rng.child(1));

  TrainResult result;
  result.best_params = params;
  for (int step = 1; step <= config.total_steps; ++step) {
    LossBatch batch;
    if (config.alpha > 0.0) {
      for (int b = 0; b < config.batch_size; ++b) {
        const VerRecord& rec = ver_pool[ver_sampler.next()];
        batch.verification.push_back(
            {rec.input, rec.target, rec.weight, ver_scale});
      }
    }
    if (config.alpha < 1.0) {
      for (int b = 0; b < config.batch_size; ++b) {
        const LabeledInstance* inst = aux_pool[aux_sampler.next()];
        const SalienceProfile* prof = &profiles.at(inst->id);
        AuxMaskedExample ex = build_aux_example(
            *inst, prof, dataset.table_for(*inst), vocab, max_len,
            config.masking_strategy, mask_rng);
        batch.auxiliary.push_back(
            {std::move(ex.input), ex.position, ex.target_id, aux_scale});
      }
    }
    zero_grads(grads);
    LossValue loss =
        loss_and_gradients(params, batch, grads, true, &dropout_rng);
    clip_gradients(grads, config.grad_clip);
    const double lr = lr_at_step(step, config);
    opt.step(params, grads, lr, config.weight_decay);
    result.log.push_back(
        {step, loss.total, loss.verification_part, loss.auxiliary_part, lr});

    if (step % config.eval_every == 0 || step == config.total_steps) {
      double acc = evaluate(params, vocab, dataset, Split::kVal).accuracy;
      if (acc > result.best_val_accuracy) {
        result.best_val_accuracy = acc;
        result.best_params = params;
        result.best_step = step;
      }
    }
  }
  result.final_params = std::move(params);
  return result;
}

double mlm_recovery_accuracy(const Params& params, const Vocab& vocab,
                             const Dataset& dataset, Split split,
                             uint64_t seed, int limit) {
  const Table empty_table;
  Rng rng(Rng::mix(seed, Rng::hash_str("mlm-recovery")));
  auto insts = dataset.split_instances(split);
  if (limit >= 0 && static_cast<size_t>(limit) < insts.size())
    insts.resize(limit);
  if (insts.empty()) return 0.0;
  int correct = 0;
  for (const auto* inst : insts) {
    int pos = static_cast<int>(rng.uniform_u64(inst->statement.size()));
    std::vector<std::string> masked = inst->statement;
    masked[pos] = "[MASK]";
    EncodedInput enc =
        encode(masked, empty_table, vocab, params.config.max_len);
    std::vector<double> dist =
        masked_token_distribution(params, enc, 1 + pos);
    int argmax = 0;
    for (int i = 1; i < static_cast<int>(dist.size()); ++i)
      if (dist[i] > dist[argmax]) argmax = i;
    if (argmax == vocab.id(inst->statement[pos])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(insts.size());
}

}  // namespace tabsal
