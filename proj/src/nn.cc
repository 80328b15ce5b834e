// src/nn.cc

// Copyright 2026  kgdial authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nn.h"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

namespace kgdial {

Tensor& ParamStore::add(const std::string& name, int rows, int cols) {
  auto t = std::make_unique<Tensor>();
  t->name = name;
  t->v = Eigen::MatrixXd::Zero(rows, cols);
  t->g = Eigen::MatrixXd::Zero(rows, cols);
  tensors_.push_back(std::move(t));
  return *tensors_.back();
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<size_t>(t->v.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& t : tensors_) t->g.setZero();
}

void ParamStore::save(std::ostream& out) const {
  const uint64_t count = tensors_.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& t : tensors_) {
    const uint64_t len = t->name.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(t->name.data(), static_cast<std::streamsize>(len));
    const int64_t rows = t->v.rows(), cols = t->v.cols();
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    out.write(reinterpret_cast<const char*>(t->v.data()),
              static_cast<std::streamsize>(sizeof(double) * t->v.size()));
  }
}

void ParamStore::load(std::istream& in) {
  uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || count != tensors_.size()) {
    throw StateError("parameter blob: tensor count mismatch");
  }
  for (auto& t : tensors_) {
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    int64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in || name != t->name || rows != t->v.rows() || cols != t->v.cols()) {
      throw StateError("parameter blob: layout mismatch at tensor \"" + t->name +
                       "\"");
    }
    in.read(reinterpret_cast<char*>(t->v.data()),
            static_cast<std::streamsize>(sizeof(double) * t->v.size()));
    if (!in) throw StateError("parameter blob: truncated data");
  }
}

void init_normal(Tensor& t, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < t.v.size(); ++i) {
    t.v.data()[i] = stddev * rng.normal();
  }
}

// ---------------------------------------------------------------------------
// LayerNorm

void LayerNorm::init(ParamStore* store, const std::string& name, int dim) {
  gamma_ = &store->add(name + ".gamma", 1, dim);
  beta_ = &store->add(name + ".beta", 1, dim);
  gamma_->v.setOnes();
}

Eigen::MatrixXd LayerNorm::forward(const Eigen::MatrixXd& x,
                                   LayerNormCache* cache) const {
  const Eigen::Index rows = x.rows(), cols = x.cols();
  Eigen::MatrixXd x_hat(rows, cols);
  Eigen::VectorXd inv_std(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + kEps);
    x_hat.row(i) = (x.row(i).array() - mu) * inv;
    inv_std[i] = inv;
  }
  Eigen::MatrixXd y =
      (x_hat.array().rowwise() * gamma_->v.row(0).array()).rowwise() +
      beta_->v.row(0).array();
  if (cache) {
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Eigen::MatrixXd LayerNorm::backward(const Eigen::MatrixXd& dy,
                                    const LayerNormCache& cache) const {
  gamma_->g.row(0) += (dy.array() * cache.x_hat.array()).colwise().sum().matrix();
  beta_->g.row(0) += dy.colwise().sum();
  Eigen::MatrixXd d_hat = dy.array().rowwise() * gamma_->v.row(0).array();
  Eigen::MatrixXd dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double mean_d = d_hat.row(i).mean();
    const double mean_dx = (d_hat.row(i).array() * cache.x_hat.row(i).array()).mean();
    dx.row(i) = cache.inv_std[i] *
                (d_hat.row(i).array() - mean_d - cache.x_hat.row(i).array() * mean_dx);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// TransformerBlock

namespace {

Eigen::MatrixXd masked_row_softmax(const Eigen::MatrixXd& scores, bool causal) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const Eigen::Index limit = causal ? i + 1 : scores.cols();
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < limit; ++j) mx = std::max(mx, scores(i, j));
    double denom = 0.0;
    for (Eigen::Index j = 0; j < limit; ++j) {
      const double e = std::exp(scores(i, j) - mx);
      p(i, j) = e;
      denom += e;
    }
    for (Eigen::Index j = 0; j < limit; ++j) p(i, j) /= denom;
  }
  return p;
}

}  // namespace

void TransformerBlock::init(ParamStore* store, const std::string& prefix,
                            int dim, int heads, Rng& rng) {
  if (dim % heads != 0) {
    throw ConfigError("model width " + std::to_string(dim) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  dim_ = dim;
  heads_ = heads;
  head_dim_ = dim / heads;
  ffn_dim_ = 4 * dim;
  auto weight = [&](const std::string& n, int r, int c) {
    Tensor& t = store->add(prefix + n, r, c);
    init_normal(t, rng, 0.02);
    return &t;
  };
  auto bias = [&](const std::string& n, int c) { return &store->add(prefix + n, 1, c); };
  wq_ = weight(".wq", dim, dim);
  bq_ = bias(".bq", dim);
  wk_ = weight(".wk", dim, dim);
  bk_ = bias(".bk", dim);
  wv_ = weight(".wv", dim, dim);
  bv_ = bias(".bv", dim);
  wo_ = weight(".wo", dim, dim);
  bo_ = bias(".bo", dim);
  w1_ = weight(".ffn.w1", dim, ffn_dim_);
  b1_ = bias(".ffn.b1", ffn_dim_);
  w2_ = weight(".ffn.w2", ffn_dim_, dim);
  b2_ = bias(".ffn.b2", dim);
  ln1_.init(store, prefix + ".ln1", dim);
  ln2_.init(store, prefix + ".ln2", dim);
}

Eigen::MatrixXd TransformerBlock::forward(const Eigen::MatrixXd& x, bool causal,
                                          BlockCache* cache) const {
  const Eigen::Index len = x.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
  Eigen::MatrixXd q = (x * wq_->v).rowwise() + bq_->v.row(0);
  Eigen::MatrixXd k = (x * wk_->v).rowwise() + bk_->v.row(0);
  Eigen::MatrixXd v = (x * wv_->v).rowwise() + bv_->v.row(0);
  Eigen::MatrixXd ctx(len, dim_);
  std::vector<Eigen::MatrixXd> probs(heads_);
  for (int h = 0; h < heads_; ++h) {
    const auto qh = q.middleCols(h * head_dim_, head_dim_);
    const auto kh = k.middleCols(h * head_dim_, head_dim_);
    const auto vh = v.middleCols(h * head_dim_, head_dim_);
    Eigen::MatrixXd scores = (qh * kh.transpose()) * scale;
    probs[h] = masked_row_softmax(scores, causal);
    ctx.middleCols(h * head_dim_, head_dim_) = probs[h] * vh;
  }
  Eigen::MatrixXd attn = (ctx * wo_->v).rowwise() + bo_->v.row(0);
  LayerNormCache ln1c;
  Eigen::MatrixXd a1 = ln1_.forward(x + attn, &ln1c);
  Eigen::MatrixXd h1 = (a1 * w1_->v).rowwise() + b1_->v.row(0);
  Eigen::MatrixXd act = h1.unaryExpr([](double u) { return gelu(u); });
  Eigen::MatrixXd ffn = (act * w2_->v).rowwise() + b2_->v.row(0);
  LayerNormCache ln2c;
  Eigen::MatrixXd y = ln2_.forward(a1 + ffn, &ln2c);
  if (cache) {
    cache->x = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->ctx = std::move(ctx);
    cache->ln1 = std::move(ln1c);
    cache->a1 = std::move(a1);
    cache->h1 = std::move(h1);
    cache->gelu_out = std::move(act);
    cache->ln2 = std::move(ln2c);
  }
  return y;
}

Eigen::MatrixXd TransformerBlock::backward(const Eigen::MatrixXd& dy,
                                           const BlockCache& cache,
                                           bool causal) const {
  (void)causal;  // the mask is implicit in the cached probabilities
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));

  // FFN sublayer.
  Eigen::MatrixXd dz2 = ln2_.backward(dy, cache.ln2);
  w2_->g += cache.gelu_out.transpose() * dz2;
  b2_->g.row(0) += dz2.colwise().sum();
  Eigen::MatrixXd d_act = dz2 * w2_->v.transpose();
  Eigen::MatrixXd dh1 =
      d_act.array() * cache.h1.unaryExpr([](double u) { return gelu_grad(u); }).array();
  w1_->g += cache.a1.transpose() * dh1;
  b1_->g.row(0) += dh1.colwise().sum();
  Eigen::MatrixXd da1 = dh1 * w1_->v.transpose() + dz2;

  // Attention sublayer.
  Eigen::MatrixXd dz1 = ln1_.backward(da1, cache.ln1);
  wo_->g += cache.ctx.transpose() * dz1;
  bo_->g.row(0) += dz1.colwise().sum();
  Eigen::MatrixXd d_ctx = dz1 * wo_->v.transpose();
  Eigen::MatrixXd dq(dy.rows(), dim_), dk(dy.rows(), dim_), dv(dy.rows(), dim_);
  for (int h = 0; h < heads_; ++h) {
    const auto qh = cache.q.middleCols(h * head_dim_, head_dim_);
    const auto kh = cache.k.middleCols(h * head_dim_, head_dim_);
    const auto vh = cache.v.middleCols(h * head_dim_, head_dim_);
    const auto dch = d_ctx.middleCols(h * head_dim_, head_dim_);
    const Eigen::MatrixXd& p = cache.probs[h];
    Eigen::MatrixXd dp = dch * vh.transpose();
    Eigen::MatrixXd ds = p.array() * dp.array();
    const Eigen::VectorXd row_dots = ds.rowwise().sum();
    ds = p.array() * (dp.array().colwise() - row_dots.array());
    dv.middleCols(h * head_dim_, head_dim_) = p.transpose() * dch;
    dq.middleCols(h * head_dim_, head_dim_) = (ds * kh) * scale;
    dk.middleCols(h * head_dim_, head_dim_) = (ds.transpose() * qh) * scale;
  }
  wq_->g += cache.x.transpose() * dq;
  bq_->g.row(0) += dq.colwise().sum();
  wk_->g += cache.x.transpose() * dk;
  bk_->g.row(0) += dk.colwise().sum();
  wv_->g += cache.x.transpose() * dv;
  bv_->g.row(0) += dv.colwise().sum();

  Eigen::MatrixXd dx = dz1;
  dx += dq * wq_->v.transpose();
  dx += dk * wk_->v.transpose();
  dx += dv * wv_->v.transpose();
  return dx;
}

void TransformerBlock::stream_reset(BlockStream* s, int max_len) const {
  s->k = Eigen::MatrixXd::Zero(max_len, dim_);
  s->v = Eigen::MatrixXd::Zero(max_len, dim_);
  s->len = 0;
}

Eigen::RowVectorXd TransformerBlock::stream_step(const Eigen::RowVectorXd& x,
                                                 BlockStream* s) const {
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
  Eigen::RowVectorXd q = x * wq_->v + bq_->v.row(0);
  s->k.row(s->len) = x * wk_->v + bk_->v.row(0);
  s->v.row(s->len) = x * wv_->v + bv_->v.row(0);
  ++s->len;
  Eigen::RowVectorXd ctx(dim_);
  for (int h = 0; h < heads_; ++h) {
    const auto kh = s->k.block(0, h * head_dim_, s->len, head_dim_);
    const auto vh = s->v.block(0, h * head_dim_, s->len, head_dim_);
    Eigen::VectorXd scores = (kh * q.middleCols(h * head_dim_, head_dim_).transpose()) * scale;
    Eigen::VectorXd p = softmax(scores);
    ctx.middleCols(h * head_dim_, head_dim_) = p.transpose() * vh;
  }
  Eigen::RowVectorXd attn = ctx * wo_->v + bo_->v.row(0);
  LayerNormCache scratch;
  Eigen::RowVectorXd a1 = ln1_.forward(x + attn, &scratch).row(0);
  Eigen::RowVectorXd h1 = a1 * w1_->v + b1_->v.row(0);
  Eigen::RowVectorXd act = h1.unaryExpr([](double u) { return gelu(u); });
  Eigen::RowVectorXd ffn = act * w2_->v + b2_->v.row(0);
  return ln2_.forward(a1 + ffn, &scratch).row(0);
}

// ---------------------------------------------------------------------------
// TransformerStack

TransformerStack::TransformerStack(ParamStore* store, const StackConfig& cfg,
                                   Rng& rng, const std::string& prefix)
    : cfg_(cfg) {
  if (cfg.vocab_size <= 0 || cfg.dim <= 0 || cfg.layers <= 0 || cfg.heads <= 0 ||
      cfg.max_positions <= 0 || cfg.n_segments <= 0) {
    throw ConfigError("transformer stack: all dimensions must be positive");
  }
  tok_ = &store->add(prefix + ".tok_emb", cfg.vocab_size, cfg.dim);
  pos_ = &store->add(prefix + ".pos_emb", cfg.max_positions, cfg.dim);
  seg_ = &store->add(prefix + ".seg_emb", cfg.n_segments, cfg.dim);
  init_normal(*tok_, rng, 0.02);
  init_normal(*pos_, rng, 0.02);
  init_normal(*seg_, rng, 0.02);
  emb_ln_.init(store, prefix + ".emb_ln", cfg.dim);
  blocks_.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l) {
    blocks_[l].init(store, prefix + ".layer" + std::to_string(l), cfg.dim,
                    cfg.heads, rng);
  }
}

Eigen::MatrixXd TransformerStack::embed(const std::vector<int>& ids,
                                        const std::vector<int>& segs,
                                        StackCache* cache) const {
  if (ids.empty()) throw ValidationError("transformer stack: empty input");
  if (ids.size() != segs.size()) {
    throw ValidationError("transformer stack: ids/segments length mismatch");
  }
  if (static_cast<int>(ids.size()) > cfg_.max_positions) {
    throw ValidationError("transformer stack: input length " +
                          std::to_string(ids.size()) + " exceeds " +
                          std::to_string(cfg_.max_positions) + " positions");
  }
  Eigen::MatrixXd x(ids.size(), cfg_.dim);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= cfg_.vocab_size) {
      throw ValidationError("transformer stack: token id out of range");
    }
    if (segs[i] < 0 || segs[i] >= cfg_.n_segments) {
      throw ValidationError("transformer stack: segment id out of range");
    }
    x.row(i) = tok_->v.row(ids[i]) + pos_->v.row(static_cast<int>(i)) +
               seg_->v.row(segs[i]);
  }
  return emb_ln_.forward(x, cache ? &cache->emb_ln : nullptr);
}

Eigen::MatrixXd TransformerStack::forward(const std::vector<int>& ids,
                                          const std::vector<int>& segs,
                                          StackCache* cache) const {
  if (cache) {
    cache->ids = ids;
    cache->segs = segs;
    cache->blocks.resize(blocks_.size());
  }
  Eigen::MatrixXd x = embed(ids, segs, cache);
  if (cache) cache->x0 = x;
  for (size_t l = 0; l < blocks_.size(); ++l) {
    x = blocks_[l].forward(x, cfg_.causal, cache ? &cache->blocks[l] : nullptr);
  }
  return x;
}

void TransformerStack::backward(const StackCache& cache,
                                const Eigen::MatrixXd& dy) const {
  Eigen::MatrixXd dx = dy;
  for (size_t l = blocks_.size(); l-- > 0;) {
    dx = blocks_[l].backward(dx, cache.blocks[l], cfg_.causal);
  }
  dx = emb_ln_.backward(dx, cache.emb_ln);
  for (size_t i = 0; i < cache.ids.size(); ++i) {
    tok_->g.row(cache.ids[i]) += dx.row(i);
    pos_->g.row(static_cast<int>(i)) += dx.row(i);
    seg_->g.row(cache.segs[i]) += dx.row(i);
  }
}

void TransformerStack::stream_reset(StackStream* s) const {
  s->next_pos = 0;
  s->blocks.resize(blocks_.size());
  for (size_t l = 0; l < blocks_.size(); ++l) {
    blocks_[l].stream_reset(&s->blocks[l], cfg_.max_positions);
  }
}

Eigen::RowVectorXd TransformerStack::stream_step(StackStream* s, int id,
                                                 int seg) const {
  if (!cfg_.causal) throw StateError("stream_step requires a causal stack");
  if (s->next_pos >= cfg_.max_positions) {
    throw ValidationError("stream_step: capacity exceeded");
  }
  if (id < 0 || id >= cfg_.vocab_size) {
    throw ValidationError("stream_step: token id out of range");
  }
  Eigen::RowVectorXd x =
      tok_->v.row(id) + pos_->v.row(s->next_pos) + seg_->v.row(seg);
  LayerNormCache scratch;
  x = emb_ln_.forward(x, &scratch).row(0);
  ++s->next_pos;
  for (size_t l = 0; l < blocks_.size(); ++l) {
    x = blocks_[l].stream_step(x, &s->blocks[l]);
  }
  return x;
}

// ---------------------------------------------------------------------------
// LstmStack

void LstmStack::init(ParamStore* store, const std::string& prefix, int input_dim,
                     int hidden, int layers, Rng& rng) {
  if (input_dim <= 0 || hidden <= 0 || layers <= 0) {
    throw ConfigError("lstm stack: dimensions must be positive");
  }
  input_dim_ = input_dim;
  hidden_ = hidden;
  layers_ = layers;
  for (int l = 0; l < layers; ++l) {
    const int in_dim = l == 0 ? input_dim : hidden;
    const std::string p = prefix + ".cell" + std::to_string(l);
    Tensor& wx = store->add(p + ".wx", 4 * hidden, in_dim);
    Tensor& wh = store->add(p + ".wh", 4 * hidden, hidden);
    Tensor& b = store->add(p + ".b", 4 * hidden, 1);
    Tensor& h0 = store->add(p + ".h0", hidden, 1);
    Tensor& c0 = store->add(p + ".c0", hidden, 1);
    init_normal(wx, rng, 0.02);
    init_normal(wh, rng, 0.02);
    init_normal(h0, rng, 0.02);
    init_normal(c0, rng, 0.02);
    wx_.push_back(&wx);
    wh_.push_back(&wh);
    b_.push_back(&b);
    h0_.push_back(&h0);
    c0_.push_back(&c0);
  }
}

LstmState LstmStack::initial_state() const {
  LstmState s;
  for (int l = 0; l < layers_; ++l) {
    s.h.push_back(h0_[l]->v.col(0));
    s.c.push_back(c0_[l]->v.col(0));
  }
  return s;
}

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

LstmState LstmStack::step(const Eigen::VectorXd& x, const LstmState& prev,
                          LstmStepCache* cache) const {
  if (x.size() != input_dim_) throw ValidationError("lstm step: input dimension mismatch");
  LstmState next;
  next.h.resize(layers_);
  next.c.resize(layers_);
  if (cache) {
    cache->input = x;
    cache->prev = prev;
    cache->gi.resize(layers_);
    cache->gf.resize(layers_);
    cache->gg.resize(layers_);
    cache->go.resize(layers_);
    cache->c_new.resize(layers_);
    cache->tanh_c.resize(layers_);
    cache->layer_in.resize(layers_);
  }
  Eigen::VectorXd layer_in = x;
  for (int l = 0; l < layers_; ++l) {
    Eigen::VectorXd pre = wx_[l]->v * layer_in + wh_[l]->v * prev.h[l] + b_[l]->v.col(0);
    Eigen::VectorXd gi = pre.segment(0, hidden_).unaryExpr([](double u) { return sigmoid(u); });
    Eigen::VectorXd gf = pre.segment(hidden_, hidden_).unaryExpr([](double u) { return sigmoid(u); });
    Eigen::VectorXd gg = pre.segment(2 * hidden_, hidden_).array().tanh();
    Eigen::VectorXd go = pre.segment(3 * hidden_, hidden_).unaryExpr([](double u) { return sigmoid(u); });
    Eigen::VectorXd c_new = gf.cwiseProduct(prev.c[l]) + gi.cwiseProduct(gg);
    Eigen::VectorXd tanh_c = c_new.array().tanh();
    next.c[l] = c_new;
    next.h[l] = go.cwiseProduct(tanh_c);
    if (cache) {
      cache->layer_in[l] = layer_in;
      cache->gi[l] = std::move(gi);
      cache->gf[l] = std::move(gf);
      cache->gg[l] = std::move(gg);
      cache->go[l] = std::move(go);
      cache->c_new[l] = c_new;
      cache->tanh_c[l] = tanh_c;
    }
    layer_in = next.h[l];
  }
  return next;
}

void LstmStack::step_backward(const LstmStepCache& cache, LstmState* d_state,
                              Eigen::VectorXd* d_input) const {
  Eigen::VectorXd dx_carry;
  for (int l = layers_ - 1; l >= 0; --l) {
    Eigen::VectorXd dh = d_state->h[l];
    if (l < layers_ - 1) dh += dx_carry;
    const Eigen::VectorXd& dc_in = d_state->c[l];
    const Eigen::VectorXd& gi = cache.gi[l];
    const Eigen::VectorXd& gf = cache.gf[l];
    const Eigen::VectorXd& gg = cache.gg[l];
    const Eigen::VectorXd& go = cache.go[l];
    const Eigen::VectorXd& tanh_c = cache.tanh_c[l];

    Eigen::VectorXd d_go = dh.cwiseProduct(tanh_c);
    Eigen::VectorXd dc = dc_in +
        dh.cwiseProduct(go).cwiseProduct(
            (1.0 - tanh_c.array().square()).matrix());
    Eigen::VectorXd d_gi = dc.cwiseProduct(gg);
    Eigen::VectorXd d_gg = dc.cwiseProduct(gi);
    Eigen::VectorXd d_gf = dc.cwiseProduct(cache.prev.c[l]);

    Eigen::VectorXd dpre(4 * hidden_);
    dpre.segment(0, hidden_) =
        d_gi.array() * gi.array() * (1.0 - gi.array());
    dpre.segment(hidden_, hidden_) =
        d_gf.array() * gf.array() * (1.0 - gf.array());
    dpre.segment(2 * hidden_, hidden_) = d_gg.array() * (1.0 - gg.array().square());
    dpre.segment(3 * hidden_, hidden_) =
        d_go.array() * go.array() * (1.0 - go.array());

    wx_[l]->g += dpre * cache.layer_in[l].transpose();
    wh_[l]->g += dpre * cache.prev.h[l].transpose();
    b_[l]->g.col(0) += dpre;

    dx_carry = wx_[l]->v.transpose() * dpre;
    d_state->h[l] = wh_[l]->v.transpose() * dpre;
    d_state->c[l] = dc.cwiseProduct(gf);
  }
  if (d_input) *d_input = dx_carry;
}

void LstmStack::initial_state_backward(const LstmState& d_state) const {
  for (int l = 0; l < layers_; ++l) {
    h0_[l]->g.col(0) += d_state.h[l];
    c0_[l]->g.col(0) += d_state.c[l];
  }
}

// ---------------------------------------------------------------------------
// Adam

void Adam::attach(const ParamStore& store) {
  m_.clear();
  v_.clear();
  for (const auto& t : store.tensors()) {
    m_.push_back(Eigen::MatrixXd::Zero(t->v.rows(), t->v.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(t->v.rows(), t->v.cols()));
  }
  t_ = 0;
}

void Adam::step(ParamStore& store) {
  if (m_.size() != store.tensors().size()) {
    throw StateError("adam: optimizer not attached to this store");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < m_.size(); ++i) {
    Tensor& t = *store.tensors()[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * t.g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * t.g.cwiseProduct(t.g);
    t.v.array() -=
        lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

void Adam::save(std::ostream& out) const {
  out.write(reinterpret_cast<const char*>(&lr_), sizeof(lr_));
  out.write(reinterpret_cast<const char*>(&t_), sizeof(t_));
  const uint64_t n = m_.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (size_t i = 0; i < m_.size(); ++i) {
    out.write(reinterpret_cast<const char*>(m_[i].data()),
              static_cast<std::streamsize>(sizeof(double) * m_[i].size()));
    out.write(reinterpret_cast<const char*>(v_[i].data()),
              static_cast<std::streamsize>(sizeof(double) * v_[i].size()));
  }
}

void Adam::load(std::istream& in, const ParamStore& store) {
  attach(store);
  in.read(reinterpret_cast<char*>(&lr_), sizeof(lr_));
  in.read(reinterpret_cast<char*>(&t_), sizeof(t_));
  uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n != m_.size()) throw StateError("adam blob: tensor count mismatch");
  for (size_t i = 0; i < m_.size(); ++i) {
    in.read(reinterpret_cast<char*>(m_[i].data()),
            static_cast<std::streamsize>(sizeof(double) * m_[i].size()));
    in.read(reinterpret_cast<char*>(v_[i].data()),
            static_cast<std::streamsize>(sizeof(double) * v_[i].size()));
    if (!in) throw StateError("adam blob: truncated data");
  }
}

// ---------------------------------------------------------------------------

Eigen::VectorXd softmax(const Eigen::VectorXd& scores) {
  const double mx = scores.maxCoeff();
  Eigen::VectorXd e = (scores.array() - mx).exp();
  return e / e.sum();
}

double log_sum_exp(const Eigen::VectorXd& scores) {
  const double mx = scores.maxCoeff();
  return mx + std::log((scores.array() - mx).exp().sum());
}

}  // namespace kgdial
