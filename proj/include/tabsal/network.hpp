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

#ifndef TABSAL_NETWORK_HPP_
#define TABSAL_NETWORK_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tabsal/encoder.hpp"
#include "tabsal/rng.hpp"

namespace tabsal {

// Dense row-major double matrix. Vectors are 1 x n.
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const {
    return v.data() + static_cast<size_t>(r) * cols;
  }
  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return v[static_cast<size_t>(r) * cols + c];
  }
  size_t size() const { return v.size(); }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

struct ModelConfig {
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ffn = 128;
  int max_len = 128;
  int vocab_size = 0;
  int max_rows = 32;
  int max_cols = 16;
  int max_rank = 32;
  double dropout = 0.1;
  double init_std = 0.02;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
  Mat ln1_g, ln1_b;
  Mat wq, bq, wk, bk, wv, bv, wo, bo;
  Mat ln2_g, ln2_b;
  Mat w1, b1, w2, b2;
};

enum class ParamKind { kWeight, kBias, kGain };

// All learnable tensors. The masked-token head is tok_emb transposed plus
// mlm_bias; the tie is structural (there is no second matrix anywhere), so
// a write to the embedding is observed through the head and vice versa.
struct Params {
  ModelConfig config;
  Mat tok_emb, pos_emb, seg_emb, row_emb, col_emb, rank_emb;
  std::vector<LayerParams> layers;
  Mat lnf_g, lnf_b;
  Mat ver_w1, ver_b1, ver_w2, ver_b2;
  Mat mlm_bias;

  explicit Params(const ModelConfig& cfg = {});
  size_t n_params() const;
};

// Visits every parameter in the fixed serialization order.
// f(name, mat, kind).
template <typename P, typename F>
void visit_params(P& p, F&& f) {
  f("tok_emb", p.tok_emb, ParamKind::kWeight);
  f("pos_emb", p.pos_emb, ParamKind::kWeight);
  f("seg_emb", p.seg_emb, ParamKind::kWeight);
  f("row_emb", p.row_emb, ParamKind::kWeight);
  f("col_emb", p.col_emb, ParamKind::kWeight);
  f("rank_emb", p.rank_emb, ParamKind::kWeight);
  for (size_t l = 0; l < p.layers.size(); ++l) {
    auto& layer = p.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    f(prefix + "ln1_g", layer.ln1_g, ParamKind::kGain);
    f(prefix + "ln1_b", layer.ln1_b, ParamKind::kBias);
    f(prefix + "wq", layer.wq, ParamKind::kWeight);
    f(prefix + "bq", layer.bq, ParamKind::kBias);
    f(prefix + "wk", layer.wk, ParamKind::kWeight);
    f(prefix + "bk", layer.bk, ParamKind::kBias);
    f(prefix + "wv", layer.wv, ParamKind::kWeight);
    f(prefix + "bv", layer.bv, ParamKind::kBias);
    f(prefix + "wo", layer.wo, ParamKind::kWeight);
    f(prefix + "bo", layer.bo, ParamKind::kBias);
    f(prefix + "ln2_g", layer.ln2_g, ParamKind::kGain);
    f(prefix + "ln2_b", layer.ln2_b, ParamKind::kBias);
    f(prefix + "w1", layer.w1, ParamKind::kWeight);
    f(prefix + "b1", layer.b1, ParamKind::kBias);
    f(prefix + "w2", layer.w2, ParamKind::kWeight);
    f(prefix + "b2", layer.b2, ParamKind::kBias);
  }
  f("lnf_g", p.lnf_g, ParamKind::kGain);
  f("lnf_b", p.lnf_b, ParamKind::kBias);
  f("ver_w1", p.ver_w1, ParamKind::kWeight);
  f("ver_b1", p.ver_b1, ParamKind::kBias);
  f("ver_w2", p.ver_w2, ParamKind::kWeight);
  f("ver_b2", p.ver_b2, ParamKind::kBias);
  f("mlm_bias", p.mlm_bias, ParamKind::kBias);
}

// Weights ~ truncated normal(0, init_std^2), biases 0, layer-norm gains 1.
// Bitwise deterministic per seed.
Params init_params(const ModelConfig& config, uint64_t seed);

struct BatchOutput {
  std::vector<double> entail_prob;
  std::vector<Mat> token_logits;  // attention_len x vocab_size, if requested
  std::vector<Mat> hidden;        // attention_len x d_model, if requested
};

struct ForwardOptions {
  bool train_mode = false;
  bool want_token_logits = true;
  bool want_hidden = false;
  Rng* dropout_rng = nullptr;  // required when train_mode and dropout > 0
};

// Embedding streams are summed position-wise; [PAD] positions never enter
// the computation, so appending padding cannot change any output.
BatchOutput forward(const Params& params, const std::vector<EncodedInput>& batch,
                    const ForwardOptions& opts = {});

// Softmax over the vocabulary of the masked-token head at one position.
std::vector<double> masked_token_distribution(const Params& params,
                                              const EncodedInput& input,
                                              int position);

// One weighted binary cross-entropy record: loss contribution is
// scale * weight * bce(target, p).
struct VerificationExample {
  EncodedInput input;
  double target = 0.0;  // gold label
  double weight = 1.0;  // augmentation weight w_ij
  double scale = 1.0;   // objective normalizer applied per record
};

// One masked-token record: loss contribution is scale * ce at `position`.
struct AuxExample {
  EncodedInput input;
  int position = 0;  // sequence position of the [MASK]
  int target_id = 0;
  double scale = 1.0;
};

struct LossBatch {
  std::vector<VerificationExample> verification;
  std::vector<AuxExample> auxiliary;
};

struct LossValue {
  double total = 0.0;
  double verification_part = 0.0;
  double auxiliary_part = 0.0;
};

// Probabilities are clamped to [kProbEps, 1-kProbEps] before logs.
inline constexpr double kProbEps = 1e-7;

// Accumulates into `grads` (caller zeroes when starting a step). The tied
// embedding receives contributions from both the input path and the
// masked-token head path. Throws NonFiniteError if the loss or any
// gradient is non-finite.
LossValue loss_and_gradients(const Params& params, const LossBatch& batch,
                             Params& grads, bool train_mode = false,
                             Rng* dropout_rng = nullptr);

// The same loss without gradients; the finite-difference oracle runs this.
LossValue loss_only(const Params& params, const LossBatch& batch);

Params zeros_like(const Params& params);

// Single file: one JSON header line (format version + config echo), then
// raw little-endian doubles in visit_params order. The tied head is not
// stored separately.
void save_checkpoint(const Params& params, const std::filesystem::path& p);
Params load_checkpoint(const std::filesystem::path& p);

// Bytes a checkpoint's array section occupies; the embedding is counted
// exactly once.
size_t checkpoint_array_bytes(const Params& params);

}  // namespace tabsal

#endif  // TABSAL_NETWORK_HPP_
