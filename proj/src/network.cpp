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

#include "tabsal/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "tabsal/error.hpp"
#include "tabsal/kernels.hpp"

namespace tabsal {

using nlohmann::json;

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

const kernels::Ops& ops() { return kernels::active(); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

void softmax_row(double* x, int n) {
  double m = x[0];
  for (int i = 1; i < n; ++i) m = std::max(m, x[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - m);
    sum += x[i];
  }
  double inv = 1.0 / sum;
  for (int i = 0; i < n; ++i) x[i] *= inv;
}

void add_bias_rows(Mat& y, const Mat& b) {
  for (int r = 0; r < y.rows; ++r) ops().axpy(y.cols, 1.0, b.data(), y.row(r));
}

void add_colsum(const Mat& dy, Mat& db) {
  for (int r = 0; r < dy.rows; ++r) ops().axpy(dy.cols, 1.0, dy.row(r), db.data());
}

// y = x * W + b, all row-major; W is (x.cols x out).
void linear_forward(const Mat& x, const Mat& w, const Mat& b, Mat& y) {
  y = Mat(x.rows, w.cols);
  ops().matmul_nn(x.data(), w.data(), y.data(), x.rows, x.cols, w.cols, 0.0);
  add_bias_rows(y, b);
}

// Accumulates dW, db and adds the input gradient into dx.
void linear_backward(const Mat& x, const Mat& w, const Mat& dy, Mat& dw,
                     Mat& db, Mat& dx) {
  ops().matmul_tn(x.data(), dy.data(), dw.data(), w.rows, x.rows, w.cols, 1.0);
  add_colsum(dy, db);
  ops().matmul_nt(dy.data(), w.data(), dx.data(), dy.rows, w.cols, w.rows, 1.0);
}

struct LnCache {
  Mat xhat;                   // normalized input
  std::vector<double> rstd;   // 1/sqrt(var + eps), per row
  Mat out;
};

void layernorm_forward(const Mat& x, const Mat& g, const Mat& b, LnCache& c) {
  const int rows = x.rows, n = x.cols;
  c.xhat = Mat(rows, n);
  c.out = Mat(rows, n);
  c.rstd.assign(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.row(r);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += xr[i];
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = xr[i] - mean;
      var += d * d;
    }
    var /= n;
    double rstd = 1.0 / std::sqrt(var + kLnEps);
    c.rstd[r] = rstd;
    double* xh = c.xhat.row(r);
    double* yr = c.out.row(r);
    for (int i = 0; i < n; ++i) {
      xh[i] = (xr[i] - mean) * rstd;
      yr[i] = xh[i] * g.v[i] + b.v[i];
    }
  }
}

void layernorm_backward(const LnCache& c, const Mat& g, const Mat& dy, Mat& dg,
                        Mat& db, Mat& dx) {
  const int rows = c.xhat.rows, n = c.xhat.cols;
  for (int r = 0; r < rows; ++r) {
    const double* dyr = dy.row(r);
    const double* xh = c.xhat.row(r);
    double* dxr = dx.row(r);
    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
    for (int i = 0; i < n; ++i) {
      dg.v[i] += dyr[i] * xh[i];
      db.v[i] += dyr[i];
      double dxh = dyr[i] * g.v[i];
      sum_dxhat += dxh;
      sum_dxhat_xhat += dxh * xh[i];
    }
    double m1 = sum_dxhat / n;
    double m2 = sum_dxhat_xhat / n;
    double rstd = c.rstd[r];
    for (int i = 0; i < n; ++i) {
      double dxh = dyr[i] * g.v[i];
      dxr[i] += rstd * (dxh - m1 - xh[i] * m2);
    }
  }
}

// Inverted dropout in place; the mask is reused in the backward pass.
void dropout_forward(Mat& x, std::vector<uint8_t>& mask, double p, Rng& rng) {
  mask.assign(x.size(), 1);
  const double scale = 1.0 / (1.0 - p);
  for (size_t i = 0; i < x.size(); ++i) {
    if (rng.uniform() < p) {
      mask[i] = 0;
      x.v[i] = 0.0;
    } else {
      x.v[i] *= scale;
    }
  }
}

void dropout_backward(Mat& dx, const std::vector<uint8_t>& mask, double p) {
  if (mask.empty()) return;
  const double scale = 1.0 / (1.0 - p);
  for (size_t i = 0; i < dx.size(); ++i) dx.v[i] = mask[i] ? dx.v[i] * scale : 0.0;
}

void pack_head(const Mat& src, Mat& dst, int head, int dh) {
  dst = Mat(src.rows, dh);
  for (int r = 0; r < src.rows; ++r)
    std::memcpy(dst.row(r), src.row(r) + head * dh, sizeof(double) * dh);
}

void unpack_head_add(const Mat& src, Mat& dst, int head, int dh) {
  for (int r = 0; r < src.rows; ++r)
    ops().axpy(dh, 1.0, src.row(r), dst.row(r) + head * dh);
}

void unpack_head_set(const Mat& src, Mat& dst, int head, int dh) {
  for (int r = 0; r < src.rows; ++r)
    std::memcpy(dst.row(r) + head * dh, src.row(r), sizeof(double) * dh);
}

struct LayerCache {
  LnCache ln1;
  Mat q, k, v;
  std::vector<Mat> probs;                      // per head, post softmax
  std::vector<std::vector<uint8_t>> prob_mask; // attention dropout
  Mat ctx;
  std::vector<uint8_t> attn_out_mask;
  Mat x_mid;  // after the attention residual
  LnCache ln2;
  Mat ffn_pre, ffn_act;
  std::vector<uint8_t> ffn_out_mask;
  Mat x_out;
};

struct InstanceCache {
  int len = 0;
  std::vector<uint8_t> emb_mask;
  Mat x0;
  std::vector<LayerCache> layers;
  LnCache lnf;
  std::vector<double> ver_act;  // tanh hidden of the verification head
  double entail_z = 0.0;
  double entail_p = 0.5;
};

void check_input(const ModelConfig& cfg, const EncodedInput& enc) {
  const size_t n = enc.token_ids.size();
  if (enc.segment_ids.size() != n || enc.row_ids.size() != n ||
      enc.col_ids.size() != n || enc.rank_ids.size() != n ||
      enc.position_ids.size() != n)
    throw DimensionError("coordinate streams have mismatched lengths");
  if (enc.attention_len <= 0 || enc.attention_len > static_cast<int>(n))
    throw DimensionError("attention_len out of range");
  if (enc.attention_len > cfg.max_len)
    throw DimensionError("input length " + std::to_string(enc.attention_len) +
                         " exceeds model max_len " + std::to_string(cfg.max_len));
  for (int t = 0; t < enc.attention_len; ++t) {
    if (enc.token_ids[t] < 0 || enc.token_ids[t] >= cfg.vocab_size)
      throw DimensionError("token id out of range at position " + std::to_string(t));
    if (enc.position_ids[t] < 0 || enc.position_ids[t] >= cfg.max_len)
      throw DimensionError("position id out of range at position " + std::to_string(t));
    if (enc.segment_ids[t] < 0 || enc.segment_ids[t] > 1)
      throw DimensionError("segment id out of range at position " + std::to_string(t));
    if (enc.row_ids[t] < 0 || enc.row_ids[t] > cfg.max_rows)
      throw DimensionError("row id out of range at position " + std::to_string(t));
    if (enc.col_ids[t] < 0 || enc.col_ids[t] > cfg.max_cols)
      throw DimensionError("col id out of range at position " + std::to_string(t));
    if (enc.rank_ids[t] < 0 || enc.rank_ids[t] > cfg.max_rank)
      throw DimensionError("rank id out of range at position " + std::to_string(t));
  }
}

// Runs one instance up to the final hidden states (cache.lnf.out). Only the
// first attention_len positions participate; padding is sliced off here.
void run_forward(const Params& p, const EncodedInput& enc, bool train,
                 Rng* rng, InstanceCache& c) {
  const ModelConfig& cfg = p.config;
  check_input(cfg, enc);
  const int len = enc.attention_len;
  const int d = cfg.d_model;
  const int heads = cfg.n_heads;
  const int dh = d / heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool use_dropout = train && cfg.dropout > 0.0;
  if (use_dropout && rng == nullptr)
    throw DimensionError("train-mode forward requires a dropout rng");

  c.len = len;
  c.x0 = Mat(len, d);
  for (int t = 0; t < len; ++t) {
    double* x = c.x0.row(t);
    ops().axpy(d, 1.0, p.tok_emb.row(enc.token_ids[t]), x);
    ops().axpy(d, 1.0, p.pos_emb.row(enc.position_ids[t]), x);
    ops().axpy(d, 1.0, p.seg_emb.row(enc.segment_ids[t]), x);
    ops().axpy(d, 1.0, p.row_emb.row(enc.row_ids[t]), x);
    ops().axpy(d, 1.0, p.col_emb.row(enc.col_ids[t]), x);
    ops().axpy(d, 1.0, p.rank_emb.row(enc.rank_ids[t]), x);
  }
  if (use_dropout) dropout_forward(c.x0, c.emb_mask, cfg.dropout, *rng);

  c.layers.assign(cfg.n_layers, LayerCache{});
  const Mat* x_in = &c.x0;
  for (int l = 0; l < cfg.n_layers; ++l) {
    LayerCache& lc = c.layers[l];
    const LayerParams& lp = p.layers[l];

    layernorm_forward(*x_in, lp.ln1_g, lp.ln1_b, lc.ln1);
    linear_forward(lc.ln1.out, lp.wq, lp.bq, lc.q);
    linear_forward(lc.ln1.out, lp.wk, lp.bk, lc.k);
    linear_forward(lc.ln1.out, lp.wv, lp.bv, lc.v);

    lc.ctx = Mat(len, d);
    lc.probs.assign(heads, Mat{});
    lc.prob_mask.assign(heads, {});
    Mat qh, kh, vh, ch;
    for (int h = 0; h < heads; ++h) {
      pack_head(lc.q, qh, h, dh);
      pack_head(lc.k, kh, h, dh);
      pack_head(lc.v, vh, h, dh);
      Mat& scores = lc.probs[h];
      scores = Mat(len, len);
      ops().matmul_nt(qh.data(), kh.data(), scores.data(), len, dh, len, 0.0);
      for (size_t i = 0; i < scores.size(); ++i) scores.v[i] *= inv_sqrt_dh;
      for (int r = 0; r < len; ++r) softmax_row(scores.row(r), len);
      Mat probs_used = scores;  // dropout acts on a copy; softmax output stays cached
      if (use_dropout) dropout_forward(probs_used, lc.prob_mask[h], cfg.dropout, *rng);
      ch = Mat(len, dh);
      ops().matmul_nn(probs_used.data(), vh.data(), ch.data(), len, len, dh, 0.0);
      unpack_head_set(ch, lc.ctx, h, dh);
    }

    Mat attn_out;
    linear_forward(lc.ctx, lp.wo, lp.bo, attn_out);
    if (use_dropout) dropout_forward(attn_out, lc.attn_out_mask, cfg.dropout, *rng);
    lc.x_mid = *x_in;
    for (size_t i = 0; i < lc.x_mid.size(); ++i) lc.x_mid.v[i] += attn_out.v[i];

    layernorm_forward(lc.x_mid, lp.ln2_g, lp.ln2_b, lc.ln2);
    linear_forward(lc.ln2.out, lp.w1, lp.b1, lc.ffn_pre);
    lc.ffn_act = Mat(len, cfg.d_ffn);
    for (size_t i = 0; i < lc.ffn_pre.size(); ++i)
      lc.ffn_act.v[i] = gelu(lc.ffn_pre.v[i]);
    Mat ffn_out;
    linear_forward(lc.ffn_act, lp.w2, lp.b2, ffn_out);
    if (use_dropout) dropout_forward(ffn_out, lc.ffn_out_mask, cfg.dropout, *rng);
    lc.x_out = lc.x_mid;
    for (size_t i = 0; i < lc.x_out.size(); ++i) lc.x_out.v[i] += ffn_out.v[i];
    x_in = &lc.x_out;
  }

  layernorm_forward(*x_in, p.lnf_g, p.lnf_b, c.lnf);

  // Verification head: MLP over the [CLS] state with a sigmoid output.
  const int dcols = d;
  Mat h_cls(1, dcols);
  std::memcpy(h_cls.data(), c.lnf.out.row(0), sizeof(double) * dcols);
  Mat z1;
  linear_forward(h_cls, p.ver_w1, p.ver_b1, z1);
  c.ver_act.assign(dcols, 0.0);
  for (int i = 0; i < dcols; ++i) c.ver_act[i] = std::tanh(z1.v[i]);
  c.entail_z = ops().dot(dcols, c.ver_act.data(), p.ver_w2.data()) + p.ver_b2.v[0];
  c.entail_p = sigmoid(c.entail_z);
}

// Backward from d(loss)/d(entail_z) and sparse masked-token logit
// gradients. Accumulates into `grads`.
void run_backward(const Params& p, const EncodedInput& enc,
                  const InstanceCache& c, double d_entail_z,
                  const std::vector<std::pair<int, std::vector<double>>>& dlogits,
                  Params& grads) {
  const ModelConfig& cfg = p.config;
  const int len = c.len;
  const int d = cfg.d_model;
  const int heads = cfg.n_heads;
  const int dh = d / heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat dh_final(len, d);

  if (d_entail_z != 0.0) {
    Mat dz2(1, 1);
    dz2.v[0] = d_entail_z;
    // z2 = ver_act . ver_w2 + ver_b2
    for (int i = 0; i < d; ++i) grads.ver_w2.v[i] += c.ver_act[i] * d_entail_z;
    grads.ver_b2.v[0] += d_entail_z;
    Mat dz1(1, d);
    for (int i = 0; i < d; ++i) {
      double da = d_entail_z * p.ver_w2.v[i];
      dz1.v[i] = da * (1.0 - c.ver_act[i] * c.ver_act[i]);
    }
    Mat h_cls(1, d);
    std::memcpy(h_cls.data(), c.lnf.out.row(0), sizeof(double) * d);
    Mat dh_cls(1, d);
    linear_backward(h_cls, p.ver_w1, dz1, grads.ver_w1, grads.ver_b1, dh_cls);
    ops().axpy(d, 1.0, dh_cls.data(), dh_final.row(0));
  }

  // Masked-token head: logits = H . E^T + b. The tied embedding gradient
  // picks up the head-path term here; the input-path term lands in the
  // scatter at the bottom.
  for (const auto& [pos, dlog] : dlogits) {
    const int vocab = cfg.vocab_size;
    ops().axpy(vocab, 1.0, dlog.data(), grads.mlm_bias.data());
    ops().matmul_tn(dlog.data(), c.lnf.out.row(pos), grads.tok_emb.data(),
                    vocab, 1, d, 1.0);
    ops().matmul_nn(dlog.data(), p.tok_emb.data(), dh_final.row(pos), 1, vocab,
                    d, 1.0);
  }

  Mat dx(len, d);
  layernorm_backward(c.lnf, p.lnf_g, dh_final, grads.lnf_g, grads.lnf_b, dx);

  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const LayerCache& lc = c.layers[l];
    const LayerParams& lp = p.layers[l];
    LayerParams& lg = grads.layers[l];

    // FFN block: x_out = x_mid + dropout(W2 gelu(W1 ln2(x_mid) + b1) + b2)
    Mat d_ffn_out = dx;
    dropout_backward(d_ffn_out, lc.ffn_out_mask, cfg.dropout);
    Mat d_act(len, cfg.d_ffn);
    ops().matmul_tn(lc.ffn_act.data(), d_ffn_out.data(), lg.w2.data(),
                    cfg.d_ffn, len, d, 1.0);
    add_colsum(d_ffn_out, lg.b2);
    ops().matmul_nt(d_ffn_out.data(), lp.w2.data(), d_act.data(), len, d,
                    cfg.d_ffn, 0.0);
    Mat d_pre(len, cfg.d_ffn);
    for (size_t i = 0; i < d_pre.size(); ++i)
      d_pre.v[i] = d_act.v[i] * gelu_grad(lc.ffn_pre.v[i]);
    Mat d_ln2_out(len, d);
    ops().matmul_tn(lc.ln2.out.data(), d_pre.data(), lg.w1.data(), d, len,
                    cfg.d_ffn, 1.0);
    add_colsum(d_pre, lg.b1);
    ops().matmul_nt(d_pre.data(), lp.w1.data(), d_ln2_out.data(), len,
                    cfg.d_ffn, d, 0.0);
    // dx currently holds d(x_out); the skip connection passes it through to
    // d(x_mid), the layer-norm branch adds to it.
    layernorm_backward(lc.ln2, lp.ln2_g, d_ln2_out, lg.ln2_g, lg.ln2_b, dx);

    // Attention block: x_mid = x_in + dropout(Wo ctx + bo)
    Mat d_attn_out = dx;
    dropout_backward(d_attn_out, lc.attn_out_mask, cfg.dropout);
    Mat d_ctx(len, d);
    ops().matmul_tn(lc.ctx.data(), d_attn_out.data(), lg.wo.data(), d, len, d,
                    1.0);
    add_colsum(d_attn_out, lg.bo);
    ops().matmul_nt(d_attn_out.data(), lp.wo.data(), d_ctx.data(), len, d, d,
                    0.0);

    Mat dq(len, d), dk(len, d), dv(len, d);
    Mat qh, kh, vh, d_ch(len, dh), d_probs(len, len);
    for (int h = 0; h < heads; ++h) {
      pack_head(lc.q, qh, h, dh);
      pack_head(lc.k, kh, h, dh);
      pack_head(lc.v, vh, h, dh);
      pack_head(d_ctx, d_ch, h, dh);

      // ctx_h = dropout(probs) . v_h
      Mat probs_used = lc.probs[h];
      if (!lc.prob_mask[h].empty()) {
        const double scale = 1.0 / (1.0 - cfg.dropout);
        for (size_t i = 0; i < probs_used.size(); ++i)
          probs_used.v[i] = lc.prob_mask[h][i] ? probs_used.v[i] * scale : 0.0;
      }
      Mat dvh(len, dh);
      ops().matmul_tn(probs_used.data(), d_ch.data(), dvh.data(), len, len, dh,
                      0.0);
      unpack_head_add(dvh, dv, h, dh);

      ops().matmul_nt(d_ch.data(), vh.data(), d_probs.data(), len, dh, len, 0.0);
      dropout_backward(d_probs, lc.prob_mask[h], cfg.dropout);
      // softmax backward, then fold in the 1/sqrt(dh) score scaling
      for (int r = 0; r < len; ++r) {
        double* dp = d_probs.row(r);
        const double* pr = lc.probs[h].row(r);
        double acc = 0.0;
        for (int i = 0; i < len; ++i) acc += dp[i] * pr[i];
        for (int i = 0; i < len; ++i)
          dp[i] = pr[i] * (dp[i] - acc) * inv_sqrt_dh;
      }
      Mat dqh(len, dh), dkh(len, dh);
      ops().matmul_nn(d_probs.data(), kh.data(), dqh.data(), len, len, dh, 0.0);
      ops().matmul_tn(d_probs.data(), qh.data(), dkh.data(), len, len, dh, 0.0);
      unpack_head_add(dqh, dq, h, dh);
      unpack_head_add(dkh, dk, h, dh);
    }

    Mat d_ln1_out(len, d);
    linear_backward(lc.ln1.out, lp.wq, dq, lg.wq, lg.bq, d_ln1_out);
    linear_backward(lc.ln1.out, lp.wk, dk, lg.wk, lg.bk, d_ln1_out);
    linear_backward(lc.ln1.out, lp.wv, dv, lg.wv, lg.bv, d_ln1_out);
    layernorm_backward(lc.ln1, lp.ln1_g, d_ln1_out, lg.ln1_g, lg.ln1_b, dx);
  }

  dropout_backward(dx, c.emb_mask, cfg.dropout);
  for (int t = 0; t < len; ++t) {
    const double* g = dx.row(t);
    ops().axpy(d, 1.0, g, grads.tok_emb.row(enc.token_ids[t]));
    ops().axpy(d, 1.0, g, grads.pos_emb.row(enc.position_ids[t]));
    ops().axpy(d, 1.0, g, grads.seg_emb.row(enc.segment_ids[t]));
    ops().axpy(d, 1.0, g, grads.row_emb.row(enc.row_ids[t]));
    ops().axpy(d, 1.0, g, grads.col_emb.row(enc.col_ids[t]));
    ops().axpy(d, 1.0, g, grads.rank_emb.row(enc.rank_ids[t]));
  }
}

double clamp_prob(double p) {
  return std::min(std::max(p, kProbEps), 1.0 - kProbEps);
}

}  // namespace

void ModelConfig::validate() const {
  if (d_model <= 0 || n_layers <= 0 || n_heads <= 0 || d_ffn <= 0 ||
      max_len <= 0 || vocab_size <= 0 || max_rows <= 0 || max_cols <= 0 ||
      max_rank <= 0)
    throw DimensionError("all model dimensions must be positive");
  if (d_model % n_heads != 0)
    throw DimensionError("d_model must be divisible by n_heads");
  if (dropout < 0.0 || dropout >= 1.0)
    throw DimensionError("dropout must be in [0, 1)");
}

Params::Params(const ModelConfig& cfg) : config(cfg) {
  if (cfg.vocab_size == 0) return;  // default-constructed shell
  cfg.validate();
  tok_emb = Mat(cfg.vocab_size, cfg.d_model);
  pos_emb = Mat(cfg.max_len, cfg.d_model);
  seg_emb = Mat(2, cfg.d_model);
  row_emb = Mat(cfg.max_rows + 1, cfg.d_model);
  col_emb = Mat(cfg.max_cols + 1, cfg.d_model);
  rank_emb = Mat(cfg.max_rank + 1, cfg.d_model);
  layers.resize(cfg.n_layers);
  for (auto& l : layers) {
    l.ln1_g = Mat(1, cfg.d_model);
    l.ln1_b = Mat(1, cfg.d_model);
    l.wq = Mat(cfg.d_model, cfg.d_model);
    l.bq = Mat(1, cfg.d_model);
    l.wk = Mat(cfg.d_model, cfg.d_model);
    l.bk = Mat(1, cfg.d_model);
    l.wv = Mat(cfg.d_model, cfg.d_model);
    l.bv = Mat(1, cfg.d_model);
    l.wo = Mat(cfg.d_model, cfg.d_model);
    l.bo = Mat(1, cfg.d_model);
    l.ln2_g = Mat(1, cfg.d_model);
    l.ln2_b = Mat(1, cfg.d_model);
    l.w1 = Mat(cfg.d_model, cfg.d_ffn);
    l.b1 = Mat(1, cfg.d_ffn);
    l.w2 = Mat(cfg.d_ffn, cfg.d_model);
    l.b2 = Mat(1, cfg.d_model);
  }
  lnf_g = Mat(1, cfg.d_model);
  lnf_b = Mat(1, cfg.d_model);
  ver_w1 = Mat(cfg.d_model, cfg.d_model);
  ver_b1 = Mat(1, cfg.d_model);
  ver_w2 = Mat(cfg.d_model, 1);
  ver_b2 = Mat(1, 1);
  mlm_bias = Mat(1, cfg.vocab_size);
}

size_t Params::n_params() const {
  size_t n = 0;
  visit_params(*this, [&](const std::string&, const Mat& m, ParamKind) {
    n += m.size();
  });
  return n;
}

Params init_params(const ModelConfig& config, uint64_t seed) {
  Params p(config);
  Rng rng(seed);
  visit_params(p, [&](const std::string&, Mat& m, ParamKind kind) {
    switch (kind) {
      case ParamKind::kWeight:
        for (auto& x : m.v) x = rng.truncated_normal(config.init_std);
        break;
      case ParamKind::kBias:
        m.zero();
        break;
      case ParamKind::kGain:
        std::fill(m.v.begin(), m.v.end(), 1.0);
        break;
    }
  });
  return p;
}

Params zeros_like(const Params& params) {
  Params g(params.config);
  visit_params(g, [](const std::string&, Mat& m, ParamKind) { m.zero(); });
  return g;
}

BatchOutput forward(const Params& params, const std::vector<EncodedInput>& batch,
                    const ForwardOptions& opts) {
  BatchOutput out;
  out.entail_prob.reserve(batch.size());
  InstanceCache cache;
  for (const auto& enc : batch) {
    run_forward(params, enc, opts.train_mode, opts.dropout_rng, cache);
    out.entail_prob.push_back(cache.entail_p);
    if (opts.want_token_logits) {
      const Mat& h = cache.lnf.out;
      Mat logits(cache.len, params.config.vocab_size);
      ops().matmul_nt(h.data(), params.tok_emb.data(), logits.data(), cache.len,
                      params.config.d_model, params.config.vocab_size, 0.0);
      add_bias_rows(logits, params.mlm_bias);
      out.token_logits.push_back(std::move(logits));
    }
    if (opts.want_hidden) out.hidden.push_back(cache.lnf.out);
  }
  return out;
}

std::vector<double> masked_token_distribution(const Params& params,
                                              const EncodedInput& input,
                                              int position) {
  if (position < 0 || position >= input.attention_len)
    throw DimensionError("masked position " + std::to_string(position) +
                         " outside the encoded sequence");
  InstanceCache cache;
  run_forward(params, input, false, nullptr, cache);
  const int vocab = params.config.vocab_size;
  std::vector<double> dist(vocab, 0.0);
  ops().matmul_nt(cache.lnf.out.row(position), params.tok_emb.data(),
                  dist.data(), 1, params.config.d_model, vocab, 0.0);
  for (int i = 0; i < vocab; ++i) dist[i] += params.mlm_bias.v[i];
  softmax_row(dist.data(), vocab);
  return dist;
}

namespace {

LossValue run_loss(const Params& params, const LossBatch& batch, Params* grads,
                   bool train_mode, Rng* dropout_rng) {
  LossValue loss;
  InstanceCache cache;

  for (const auto& ex : batch.verification) {
    run_forward(params, ex.input, train_mode, dropout_rng, cache);
    const double p = cache.entail_p;
    const double pc = clamp_prob(p);
    const double coeff = ex.scale * ex.weight;
    loss.verification_part +=
        coeff * -(ex.target * std::log(pc) + (1.0 - ex.target) * std::log(1.0 - pc));
    if (grads != nullptr) {
      // d/dz of the clamped cross-entropy; zero in the clamped region.
      const double dz = (p > kProbEps && p < 1.0 - kProbEps)
                            ? coeff * (p - ex.target)
                            : 0.0;
      run_backward(params, ex.input, cache, dz, {}, *grads);
    }
  }

  const int vocab = params.config.vocab_size;
  for (const auto& ex : batch.auxiliary) {
    if (ex.position < 0 || ex.position >= ex.input.attention_len)
      throw DimensionError("auxiliary mask position out of range");
    if (ex.target_id < 0 || ex.target_id >= vocab)
      throw DimensionError("auxiliary target id out of range");
    run_forward(params, ex.input, train_mode, dropout_rng, cache);
    std::vector<double> dist(vocab, 0.0);
    ops().matmul_nt(cache.lnf.out.row(ex.position), params.tok_emb.data(),
                    dist.data(), 1, params.config.d_model, vocab, 0.0);
    for (int i = 0; i < vocab; ++i) dist[i] += params.mlm_bias.v[i];
    softmax_row(dist.data(), vocab);
    const double pt = dist[ex.target_id];
    loss.auxiliary_part += ex.scale * -std::log(clamp_prob(pt));
    if (grads != nullptr) {
      std::vector<double> dlog(vocab, 0.0);
      if (pt > kProbEps && pt < 1.0 - kProbEps) {  // flat when clamped
        for (int i = 0; i < vocab; ++i) dlog[i] = ex.scale * dist[i];
        dlog[ex.target_id] -= ex.scale;
      }
      run_backward(params, ex.input, cache, 0.0, {{ex.position, dlog}}, *grads);
    }
  }

  loss.total = loss.verification_part + loss.auxiliary_part;
  if (!std::isfinite(loss.total))
    throw NonFiniteError("loss is non-finite");
  if (grads != nullptr) {
    visit_params(*grads, [](const std::string& name, const Mat& m, ParamKind) {
      for (double x : m.v)
        if (!std::isfinite(x))
          throw NonFiniteError("non-finite gradient in " + name);
    });
  }
  return loss;
}

}  // namespace

LossValue loss_and_gradients(const Params& params, const LossBatch& batch,
                             Params& grads, bool train_mode, Rng* dropout_rng) {
  return run_loss(params, batch, &grads, train_mode, dropout_rng);
}

LossValue loss_only(const Params& params, const LossBatch& batch) {
  return run_loss(params, batch, nullptr, false, nullptr);
}

namespace {

json config_to_json(const ModelConfig& c) {
  return json{{"d_model", c.d_model},     {"n_layers", c.n_layers},
              {"n_heads", c.n_heads},     {"d_ffn", c.d_ffn},
              {"max_len", c.max_len},     {"vocab_size", c.vocab_size},
              {"max_rows", c.max_rows},   {"max_cols", c.max_cols},
              {"max_rank", c.max_rank},   {"dropout", c.dropout},
              {"init_std", c.init_std}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.d_ffn = j.at("d_ffn").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_rows = j.at("max_rows").get<int>();
  c.max_cols = j.at("max_cols").get<int>();
  c.max_rank = j.at("max_rank").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.init_std = j.at("init_std").get<double>();
  return c;
}

}  // namespace

size_t checkpoint_array_bytes(const Params& params) {
  return params.n_params() * sizeof(double);
}

void save_checkpoint(const Params& params, const std::filesystem::path& p) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint format is little-endian");
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  json header{{"format", "tabsal-checkpoint"},
              {"version", 1},
              {"model", config_to_json(params.config)}};
  out << header.dump() << "\n";
  visit_params(params, [&](const std::string&, const Mat& m, ParamKind) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  });
  if (!out) throw IoError("failed writing " + p.string());
}

Params load_checkpoint(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingCheckpoint("cannot open checkpoint " + p.string());
  std::string header_line;
  if (!std::getline(in, header_line))
    throw ParseError("checkpoint " + p.string() + " has no header");
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + p.string() + ": bad header: " + e.what());
  }
  if (header.value("format", "") != "tabsal-checkpoint" ||
      header.value("version", 0) != 1)
    throw ParseError("checkpoint " + p.string() + ": unsupported format");
  Params params(config_from_json(header.at("model")));
  visit_params(params, [&](const std::string& name, Mat& m, ParamKind) {
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in)
      throw ParseError("checkpoint " + p.string() + ": truncated at " + name);
  });
  char extra;
  if (in.read(&extra, 1))
    throw ParseError("checkpoint " + p.string() + ": trailing bytes");
  return params;
}

}  // namespace tabsal
