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

#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "tabsal/error.hpp"
#include "tabsal/network.hpp"
#include "testutil.hpp"

namespace {

using namespace tabsal;

// ---- Independent re-implementation of the forward arithmetic ----------------
// Plain nested loops, no shared kernels; the oracle for the production path.

using Vec = std::vector<double>;
using Grid = std::vector<Vec>;

Grid naive_layernorm(const Grid& x, const Mat& g, const Mat& b) {
  Grid y(x.size(), Vec(x[0].size()));
  const size_t n = x[0].size();
  for (size_t t = 0; t < x.size(); ++t) {
    double mean = 0.0;
    for (double v : x[t]) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x[t]) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    double rstd = 1.0 / std::sqrt(var + 1e-5);
    for (size_t i = 0; i < n; ++i)
      y[t][i] = (x[t][i] - mean) * rstd * g.v[i] + b.v[i];
  }
  return y;
}

Grid naive_linear(const Grid& x, const Mat& w, const Mat& b) {
  Grid y(x.size(), Vec(w.cols, 0.0));
  for (size_t t = 0; t < x.size(); ++t)
    for (int j = 0; j < w.cols; ++j) {
      double acc = b.v[j];
      for (int i = 0; i < w.rows; ++i) acc += x[t][i] * w.at(i, j);
      y[t][j] = acc;
    }
  return y;
}

double naive_forward_prob(const Params& p, const EncodedInput& enc) {
  const ModelConfig& cfg = p.config;
  const int len = enc.attention_len;
  const int d = cfg.d_model;
  const int dh = d / cfg.n_heads;

  Grid x(len, Vec(d, 0.0));
  for (int t = 0; t < len; ++t)
    for (int i = 0; i < d; ++i)
      x[t][i] = p.tok_emb.at(enc.token_ids[t], i) +
                p.pos_emb.at(enc.position_ids[t], i) +
                p.seg_emb.at(enc.segment_ids[t], i) +
                p.row_emb.at(enc.row_ids[t], i) +
                p.col_emb.at(enc.col_ids[t], i) +
                p.rank_emb.at(enc.rank_ids[t], i);

  for (const LayerParams& lp : p.layers) {
    Grid a = naive_layernorm(x, lp.ln1_g, lp.ln1_b);
    Grid q = naive_linear(a, lp.wq, lp.bq);
    Grid k = naive_linear(a, lp.wk, lp.bk);
    Grid v = naive_linear(a, lp.wv, lp.bv);
    Grid ctx(len, Vec(d, 0.0));
    for (int h = 0; h < cfg.n_heads; ++h) {
      for (int t = 0; t < len; ++t) {
        Vec scores(len);
        for (int s = 0; s < len; ++s) {
          double acc = 0.0;
          for (int i = 0; i < dh; ++i)
            acc += q[t][h * dh + i] * k[s][h * dh + i];
          scores[s] = acc / std::sqrt(static_cast<double>(dh));
        }
        double mx = scores[0];
        for (double s : scores) mx = std::max(mx, s);
        double z = 0.0;
        for (double& s : scores) {
          s = std::exp(s - mx);
          z += s;
        }
        for (double& s : scores) s /= z;
        for (int i = 0; i < dh; ++i) {
          double acc = 0.0;
          for (int s = 0; s < len; ++s) acc += scores[s] * v[s][h * dh + i];
          ctx[t][h * dh + i] = acc;
        }
      }
    }
    Grid attn = naive_linear(ctx, lp.wo, lp.bo);
    for (int t = 0; t < len; ++t)
      for (int i = 0; i < d; ++i) x[t][i] += attn[t][i];

    Grid b2 = naive_layernorm(x, lp.ln2_g, lp.ln2_b);
    Grid f1 = naive_linear(b2, lp.w1, lp.b1);
    for (auto& row : f1)
      for (double& v2 : row)
        v2 = 0.5 * v2 * (1.0 + std::erf(v2 / std::sqrt(2.0)));
    Grid f2 = naive_linear(f1, lp.w2, lp.b2);
    for (int t = 0; t < len; ++t)
      for (int i = 0; i < d; ++i) x[t][i] += f2[t][i];
  }

  Grid h = naive_layernorm(x, p.lnf_g, p.lnf_b);
  Vec z1(d, 0.0);
  for (int j = 0; j < d; ++j) {
    double acc = p.ver_b1.v[j];
    for (int i = 0; i < d; ++i) acc += h[0][i] * p.ver_w1.at(i, j);
    z1[j] = std::tanh(acc);
  }
  double z2 = p.ver_b2.v[0];
  for (int i = 0; i < d; ++i) z2 += z1[i] * p.ver_w2.v[i];
  return 1.0 / (1.0 + std::exp(-z2));
}

// ---- Shared fixtures ---------------------------------------------------------

struct NetFixture {
  Dataset dataset = testutil::fixture_dataset();
  Vocab vocab = Vocab::build(dataset);
  ModelConfig config = testutil::tiny_model_config(vocab.size());
  Params params = init_params(config, 7);

  EncodedInput encode_instance(int idx, int max_len = 0) const {
    const auto& inst = dataset.instances[idx];
    return encode(inst.statement, dataset.tables.at(inst.table_id), vocab,
                  max_len > 0 ? max_len : config.max_len);
  }

  LossBatch joint_batch() const {
    LossBatch batch;
    batch.verification.push_back({encode_instance(0), 1.0, 1.0, 1.0});
    batch.verification.push_back({encode_instance(2), 0.0, 0.5, 0.7});
    AuxExample aux;
    aux.input = encode_instance(1);
    aux.position = 2;
    aux.input.token_ids[2] = Vocab::kMask;
    aux.target_id = vocab.id("total");
    aux.scale = 0.5;
    batch.auxiliary.push_back(aux);
    return batch;
  }
};

double fd_max_rel_error(const Params& params, const LossBatch& batch,
                        double h = 1e-4) {
  Params grads = zeros_like(params);
  loss_and_gradients(params, batch, grads, false, nullptr);

  Params work = params;
  std::vector<Mat*> work_mats;
  std::vector<const Mat*> grad_mats;
  visit_params(work, [&](const std::string&, Mat& m, ParamKind) {
    work_mats.push_back(&m);
  });
  visit_params(grads, [&](const std::string&, const Mat& m, ParamKind) {
    grad_mats.push_back(&m);
  });

  double max_err = 0.0;
  for (size_t mi = 0; mi < work_mats.size(); ++mi) {
    Mat& m = *work_mats[mi];
    for (size_t j = 0; j < m.size(); ++j) {
      const double saved = m.v[j];
      m.v[j] = saved + h;
      double up = loss_only(work, batch).total;
      m.v[j] = saved - h;
      double down = loss_only(work, batch).total;
      m.v[j] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double an = grad_mats[mi]->v[j];
      const double denom = std::max({1e-6, std::fabs(fd), std::fabs(an)});
      max_err = std::max(max_err, std::fabs(fd - an) / denom);
    }
  }
  return max_err;
}

TEST_SUITE("network") {

TEST_CASE("init: deterministic per seed, shapes, tie storage") {
  ModelConfig mc = testutil::tiny_model_config(200);
  mc.d_model = 64;
  mc.n_heads = 4;
  Params a = init_params(mc, 5);
  Params b = init_params(mc, 5);
  CHECK(a.tok_emb.v == b.tok_emb.v);
  CHECK(a.layers[0].wq.v == b.layers[0].wq.v);
  Params c = init_params(mc, 6);
  CHECK(a.tok_emb.v != c.tok_emb.v);

  CHECK(a.tok_emb.rows == 200);
  CHECK(a.tok_emb.cols == 64);
  bool bias_zero = true;
  for (double x : a.layers[0].bq.v) bias_zero &= x == 0.0;
  CHECK(bias_zero);
  for (double x : a.lnf_g.v) CHECK(x == 1.0);
}

TEST_CASE("forward: zeroed verification output gives p = 0.5 exactly") {
  NetFixture f;
  f.params.ver_w2.zero();
  f.params.ver_b2.zero();
  BatchOutput out = forward(f.params, {f.encode_instance(0)});
  CHECK(out.entail_prob[0] == 0.5);
}

TEST_CASE("forward: token-logit softmax rows sum to 1") {
  NetFixture f;
  BatchOutput out = forward(f.params, {f.encode_instance(0)});
  const Mat& logits = out.token_logits[0];
  for (int t = 0; t < logits.rows; ++t) {
    double mx = logits.at(t, 0);
    for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, logits.at(t, j));
    double sum = 0.0;
    for (int j = 0; j < logits.cols; ++j) sum += std::exp(logits.at(t, j) - mx);
    double total = 0.0;
    for (int j = 0; j < logits.cols; ++j)
      total += std::exp(logits.at(t, j) - mx) / sum;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("forward agrees with the independent naive implementation") {
  NetFixture f;
  for (int idx : {0, 1, 2, 3}) {
    EncodedInput enc = f.encode_instance(idx);
    BatchOutput out = forward(f.params, {enc});
    CHECK(out.entail_prob[0] ==
          doctest::Approx(naive_forward_prob(f.params, enc)).epsilon(1e-6));
  }
}

TEST_CASE("padding invariance: extra [PAD] positions change nothing") {
  NetFixture f;
  EncodedInput short_enc = f.encode_instance(0, 20);
  EncodedInput long_enc = f.encode_instance(0, 32);
  double a = forward(f.params, {short_enc}).entail_prob[0];
  double b = forward(f.params, {long_enc}).entail_prob[0];
  CHECK(std::fabs(a - b) < 1e-12);
}

TEST_CASE("permutation equivariance over the batch") {
  NetFixture f;
  std::vector<EncodedInput> batch = {f.encode_instance(0), f.encode_instance(1),
                                     f.encode_instance(2)};
  BatchOutput fwd = forward(f.params, batch);
  std::vector<EncodedInput> permuted = {batch[2], batch[0], batch[1]};
  BatchOutput fwd_p = forward(f.params, permuted);
  CHECK(fwd_p.entail_prob[0] == fwd.entail_prob[2]);
  CHECK(fwd_p.entail_prob[1] == fwd.entail_prob[0]);
  CHECK(fwd_p.entail_prob[2] == fwd.entail_prob[1]);
}

TEST_CASE("weight tying: an embedding row edit moves that logit column") {
  NetFixture f;
  EncodedInput enc = f.encode_instance(0);
  BatchOutput before = forward(f.params, {enc});
  const int vid = f.vocab.id("score");
  for (int i = 0; i < f.config.d_model; ++i)
    f.params.tok_emb.at(vid, i) += 0.25;
  BatchOutput after = forward(f.params, {enc});
  bool column_moved = false;
  for (int t = 0; t < before.token_logits[0].rows; ++t)
    column_moved |= before.token_logits[0].at(t, vid) !=
                    after.token_logits[0].at(t, vid);
  CHECK(column_moved);
}

TEST_CASE("gradients: tied embedding receives both paths") {
  NetFixture f;
  LossBatch batch = f.joint_batch();

  // Verification-only: the embedding gradient can only come from the input
  // path.
  LossBatch ver_only;
  ver_only.verification = batch.verification;
  Params grads = zeros_like(f.params);
  loss_and_gradients(f.params, ver_only, grads);
  const int input_token = f.encode_instance(0).token_ids[1];
  double input_norm = 0.0;
  for (int i = 0; i < f.config.d_model; ++i)
    input_norm += std::fabs(grads.tok_emb.at(input_token, i));
  CHECK(input_norm > 0.0);
  // And nothing flows into the masked-token bias.
  for (double x : grads.mlm_bias.v) CHECK(x == 0.0);

  // Auxiliary-only: a vocabulary row absent from every input still gets a
  // gradient through the softmax of the tied head.
  LossBatch aux_only;
  aux_only.auxiliary = batch.auxiliary;
  int absent_id = -1;
  for (int cand = Vocab::kNumReserved; cand < f.vocab.size(); ++cand) {
    bool used = false;
    for (int t = 0; t < aux_only.auxiliary[0].input.attention_len; ++t)
      used |= aux_only.auxiliary[0].input.token_ids[t] == cand;
    if (!used) {
      absent_id = cand;
      break;
    }
  }
  REQUIRE(absent_id >= 0);
  Params aux_grads = zeros_like(f.params);
  loss_and_gradients(f.params, aux_only, aux_grads);
  double head_norm = 0.0;
  for (int i = 0; i < f.config.d_model; ++i)
    head_norm += std::fabs(aux_grads.tok_emb.at(absent_id, i));
  CHECK(head_norm > 0.0);
  CHECK(std::fabs(aux_grads.mlm_bias.v[absent_id]) > 0.0);
}

TEST_CASE("gradients: parameters the loss never touches stay exactly zero") {
  NetFixture f;
  LossBatch ver_only;
  ver_only.verification.push_back({f.encode_instance(0), 1.0, 1.0, 1.0});
  Params grads = zeros_like(f.params);
  loss_and_gradients(f.params, ver_only, grads);
  // Unused rank ids (the fixture table uses ranks 0..3 at most).
  for (int i = 0; i < f.config.d_model; ++i)
    CHECK(grads.rank_emb.at(f.config.max_rank, i) == 0.0);
  for (double x : grads.mlm_bias.v) CHECK(x == 0.0);
}

TEST_CASE("finite differences confirm the analytic gradients") {
  NetFixture f;
  CHECK(f.params.n_params() <= 5000);
  double err = fd_max_rel_error(f.params, f.joint_batch());
  CHECK(err < 1e-4);
}

TEST_CASE("loss_and_gradients flags non-finite arithmetic") {
  NetFixture f;
  f.params.lnf_g.v[0] = std::numeric_limits<double>::quiet_NaN();
  LossBatch batch;
  batch.verification.push_back({f.encode_instance(0), 1.0, 1.0, 1.0});
  Params grads = zeros_like(f.params);
  CHECK_THROWS_AS(loss_and_gradients(f.params, batch, grads), NonFiniteError);
}

TEST_CASE("out-of-range coordinates raise DimensionError") {
  NetFixture f;
  EncodedInput enc = f.encode_instance(0);
  enc.row_ids[5] = 99;
  CHECK_THROWS_AS(forward(f.params, {enc}), DimensionError);
  EncodedInput enc2 = f.encode_instance(0);
  enc2.token_ids[1] = f.vocab.size() + 3;
  CHECK_THROWS_AS(forward(f.params, {enc2}), DimensionError);
}

TEST_CASE("checkpoint: bit-exact round trip with a single embedding copy") {
  NetFixture f;
  testutil::TempDir dir("ckpt");
  save_checkpoint(f.params, dir.path() / "m.ckpt");
  Params loaded = load_checkpoint(dir.path() / "m.ckpt");
  CHECK(loaded.config == f.params.config);
  bool equal = true;
  std::vector<const Mat*> a, b;
  visit_params(f.params, [&](const std::string&, const Mat& m, ParamKind) {
    a.push_back(&m);
  });
  visit_params(loaded, [&](const std::string&, const Mat& m, ParamKind) {
    b.push_back(&m);
  });
  for (size_t i = 0; i < a.size(); ++i) equal &= a[i]->v == b[i]->v;
  CHECK(equal);

  // File size = header line + one copy of every tensor; the tied head adds
  // nothing.
  std::string contents = testutil::read_file(dir.path() / "m.ckpt");
  size_t header_len = contents.find('\n') + 1;
  CHECK(contents.size() == header_len + checkpoint_array_bytes(f.params));

  // The tie survives the round trip: editing the loaded embedding moves the
  // corresponding logit column.
  EncodedInput enc = f.encode_instance(0);
  const int vid = f.vocab.id("score");
  BatchOutput before = forward(loaded, {enc});
  for (int i = 0; i < loaded.config.d_model; ++i)
    loaded.tok_emb.at(vid, i) += 0.5;
  BatchOutput after = forward(loaded, {enc});
  CHECK(before.token_logits[0].at(0, vid) != after.token_logits[0].at(0, vid));
}

TEST_CASE("train-mode dropout is the only source of stochasticity") {
  NetFixture f;
  EncodedInput enc = f.encode_instance(0);
  ForwardOptions opts;
  opts.train_mode = true;
  Rng rng1(3), rng2(3), rng3(4);
  opts.dropout_rng = &rng1;
  double p1 = forward(f.params, {enc}, opts).entail_prob[0];
  opts.dropout_rng = &rng2;
  double p2 = forward(f.params, {enc}, opts).entail_prob[0];
  opts.dropout_rng = &rng3;
  double p3 = forward(f.params, {enc}, opts).entail_prob[0];
  CHECK(p1 == p2);       // same dropout stream
  CHECK(p1 != p3);       // different stream, different masks
  double pe = forward(f.params, {enc}).entail_prob[0];
  double pe2 = forward(f.params, {enc}).entail_prob[0];
  CHECK(pe == pe2);      // eval mode is deterministic without an rng
}

}  // TEST_SUITE

}  // namespace
