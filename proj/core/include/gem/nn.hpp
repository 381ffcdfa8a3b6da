#pragma once

#include <random>
#include <vector>

#include "gem/tensor.hpp"

namespace gem {

using Rng = std::mt19937_64;

// Weight init helpers; all randomness funnels through the caller's Rng.
Mat randn(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);
Mat fan_in_init(Eigen::Index in, Eigen::Index out, Rng& rng);

struct Linear {
  Var weight;  // in x out
  Var bias;    // 1 x out

  Linear() = default;
  Linear(Eigen::Index in, Eigen::Index out, Rng& rng);

  Var forward(const Var& x) const { return add_rowvec(matmul(x, weight), bias); }
  void collect(std::vector<Var>& out) const;
};

struct LayerNorm {
  Var gamma;  // 1 x d
  Var beta;   // 1 x d
  double eps = 1e-5;

  LayerNorm() = default;
  explicit LayerNorm(Eigen::Index d);

  Var forward(const Var& x) const { return layer_norm_rows(x, gamma, beta, eps); }
  void collect(std::vector<Var>& out) const;
};

// Post-norm transformer encoder layer: x = LN(x + MHA(x)); x = LN(x + FFN(x)).
struct TransformerLayer {
  int heads = 1;
  Linear query, key, value, out;
  Linear ffn_in, ffn_out;
  LayerNorm norm_attn, norm_ffn;

  TransformerLayer() = default;
  TransformerLayer(Eigen::Index d_model, int heads, Eigen::Index d_ffn, Rng& rng);

  Var forward(const Var& x) const;
  void collect(std::vector<Var>& out) const;
};

// AdamW with decoupled weight decay; deterministic given a fixed step order.
class AdamW {
 public:
  AdamW(std::vector<Var> params, double lr, double weight_decay = 0.01,
        double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step();
  void zero_grad();
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  std::vector<Var> params_;
  std::vector<Mat> m_, v_;
  double lr_, weight_decay_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace gem
