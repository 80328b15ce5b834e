// src/nn.h

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
//
// Minimal dense-network toolkit: named parameter tensors with explicit
// forward/backward passes. Everything is double precision so analytic
// gradients can be validated against central finite differences, and
// parameter blobs round-trip bitwise through checkpoints.

#ifndef KGDIAL_NN_H_
#define KGDIAL_NN_H_

#include <Eigen/Core>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "common.h"

namespace kgdial {

struct Tensor {
  std::string name;
  Eigen::MatrixXd v;  // value
  Eigen::MatrixXd g;  // accumulated gradient, same shape
};

// Owns the tensors of one model. Registration order is the canonical order
// for serialization and optimizer state.
class ParamStore {
 public:
  Tensor& add(const std::string& name, int rows, int cols);
  const std::vector<std::unique_ptr<Tensor>>& tensors() const { return tensors_; }
  size_t scalar_count() const;
  void zero_grad();

  // Raw little-endian doubles with name/shape framing; load refuses blobs
  // whose layout disagrees with the constructed model.
  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  std::vector<std::unique_ptr<Tensor>> tensors_;
};

void init_normal(Tensor& t, Rng& rng, double stddev);

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }
inline double gelu_grad(double x) {
  static const double kInvSqrt2Pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

struct LayerNormCache {
  Eigen::MatrixXd x_hat;
  Eigen::VectorXd inv_std;
};

class LayerNorm {
 public:
  void init(ParamStore* store, const std::string& name, int dim);
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, LayerNormCache* cache) const;
  // Accumulates gamma/beta gradients; returns gradient wrt the input.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dy,
                           const LayerNormCache& cache) const;

 private:
  Tensor* gamma_ = nullptr;
  Tensor* beta_ = nullptr;
  static constexpr double kEps = 1e-5;
};

struct BlockCache {
  Eigen::MatrixXd x;
  Eigen::MatrixXd q, k, v;
  std::vector<Eigen::MatrixXd> probs;  // per head, L x L
  Eigen::MatrixXd ctx;
  LayerNormCache ln1;
  Eigen::MatrixXd a1;
  Eigen::MatrixXd h1;        // FFN pre-activation
  Eigen::MatrixXd gelu_out;  // FFN activation
  LayerNormCache ln2;
};

// Per-layer decode state: cached keys/values of already-consumed positions.
struct BlockStream {
  Eigen::MatrixXd k, v;
  int len = 0;
};

// Post-norm transformer layer (self-attention + position-wise FFN).
class TransformerBlock {
 public:
  void init(ParamStore* store, const std::string& prefix, int dim, int heads,
            Rng& rng);
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool causal,
                          BlockCache* cache) const;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& dy, const BlockCache& cache,
                           bool causal) const;

  void stream_reset(BlockStream* s, int max_len) const;
  Eigen::RowVectorXd stream_step(const Eigen::RowVectorXd& x, BlockStream* s) const;

 private:
  int dim_ = 0, heads_ = 0, head_dim_ = 0, ffn_dim_ = 0;
  Tensor *wq_ = nullptr, *bq_ = nullptr, *wk_ = nullptr, *bk_ = nullptr;
  Tensor *wv_ = nullptr, *bv_ = nullptr, *wo_ = nullptr, *bo_ = nullptr;
  Tensor *w1_ = nullptr, *b1_ = nullptr, *w2_ = nullptr, *b2_ = nullptr;
  LayerNorm ln1_, ln2_;
};

struct StackConfig {
  int vocab_size = 0;
  int dim = 0;
  int layers = 0;
  int heads = 0;
  int max_positions = 0;
  int n_segments = 2;
  bool causal = false;
};

struct StackCache {
  std::vector<int> ids, segs;
  LayerNormCache emb_ln;
  Eigen::MatrixXd x0;  // embedding output
  std::vector<BlockCache> blocks;
};

struct StackStream {
  int next_pos = 0;
  std::vector<BlockStream> blocks;
};

// Token+position+segment embeddings feeding a stack of transformer layers.
// `causal` selects masked (left-to-right) attention; otherwise attention is
// fully bidirectional.
class TransformerStack {
 public:
  TransformerStack(ParamStore* store, const StackConfig& cfg, Rng& rng,
                   const std::string& prefix);

  const StackConfig& config() const { return cfg_; }

  // Returns the final hidden states, one row per position.
  Eigen::MatrixXd forward(const std::vector<int>& ids,
                          const std::vector<int>& segs,
                          StackCache* cache) const;
  void backward(const StackCache& cache, const Eigen::MatrixXd& dy) const;

  // Incremental decoding (causal stacks only).
  void stream_reset(StackStream* s) const;
  Eigen::RowVectorXd stream_step(StackStream* s, int id, int seg) const;

 private:
  Eigen::MatrixXd embed(const std::vector<int>& ids, const std::vector<int>& segs,
                        StackCache* cache) const;
  StackConfig cfg_;
  Tensor *tok_ = nullptr, *pos_ = nullptr, *seg_ = nullptr;
  LayerNorm emb_ln_;
  std::vector<TransformerBlock> blocks_;
};

// State of a stacked LSTM: hidden and cell vectors per layer.
struct LstmState {
  std::vector<Eigen::VectorXd> h, c;
  const Eigen::VectorXd& top() const { return h.back(); }
};

struct LstmStepCache {
  Eigen::VectorXd input;
  LstmState prev;
  // Per layer: post-nonlinearity gates and cell values.
  std::vector<Eigen::VectorXd> gi, gf, gg, go, c_new, tanh_c, layer_in;
};

class LstmStack {
 public:
  LstmStack() = default;
  void init(ParamStore* store, const std::string& prefix, int input_dim,
            int hidden, int layers, Rng& rng);

  int hidden() const { return hidden_; }
  int layers() const { return layers_; }

  // Trainable initial state.
  LstmState initial_state() const;

  LstmState step(const Eigen::VectorXd& x, const LstmState& prev,
                 LstmStepCache* cache) const;

  // Consumes gradients wrt the step's output state (d_state) and produces
  // gradients wrt the previous state (into d_state) and the input.
  void step_backward(const LstmStepCache& cache, LstmState* d_state,
                     Eigen::VectorXd* d_input) const;
  void initial_state_backward(const LstmState& d_state) const;

 private:
  int input_dim_ = 0, hidden_ = 0, layers_ = 0;
  std::vector<Tensor*> wx_, wh_, b_, h0_, c0_;
};

class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}
  void attach(const ParamStore& store);
  void step(ParamStore& store);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  void save(std::ostream& out) const;
  void load(std::istream& in, const ParamStore& store);

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long long t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

// Numerically stable log-softmax helpers shared by the selector and the
// generator loss.
Eigen::VectorXd softmax(const Eigen::VectorXd& scores);
double log_sum_exp(const Eigen::VectorXd& scores);

}  // namespace kgdial

#endif  // KGDIAL_NN_H_
