#include "gem/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace gem {

Mat randn(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

Mat fan_in_init(Eigen::Index in, Eigen::Index out, Rng& rng) {
  return randn(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng);
}

Linear::Linear(Eigen::Index in, Eigen::Index out, Rng& rng)
    : weight(Var::param(fan_in_init(in, out, rng))),
      bias(Var::param(Mat::Zero(1, out))) {}

void Linear::collect(std::vector<Var>& out) const {
  out.push_back(weight);
  out.push_back(bias);
}

LayerNorm::LayerNorm(Eigen::Index d)
    : gamma(Var::param(Mat::Ones(1, d))), beta(Var::param(Mat::Zero(1, d))) {}

void LayerNorm::collect(std::vector<Var>& out) const {
  out.push_back(gamma);
  out.push_back(beta);
}

TransformerLayer::TransformerLayer(Eigen::Index d_model, int n_heads, Eigen::Index d_ffn,
                                   Rng& rng)
    : heads(n_heads),
      query(d_model, d_model, rng),
      key(d_model, d_model, rng),
      value(d_model, d_model, rng),
      out(d_model, d_model, rng),
      ffn_in(d_model, d_ffn, rng),
      ffn_out(d_ffn, d_model, rng),
      norm_attn(d_model),
      norm_ffn(d_model) {
  if (d_model % n_heads != 0)
    throw std::invalid_argument("TransformerLayer: d_model must be divisible by heads");
}

Var TransformerLayer::forward(const Var& x) const {
  const Eigen::Index d = x.cols();
  const Eigen::Index dh = d / heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));

  Var q = query.forward(x);
  Var k = key.forward(x);
  Var v = value.forward(x);

  std::vector<Var> head_outputs;
  head_outputs.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var qh = slice_cols(q, h * dh, dh);
    Var kh = slice_cols(k, h * dh, dh);
    Var vh = slice_cols(v, h * dh, dh);
    Var logits = scale(matmul(qh, transpose(kh)), scale_factor);
    Var weights = softmax_rows(logits);
    head_outputs.push_back(matmul(weights, vh));
  }
  Var attn = heads == 1 ? head_outputs[0] : concat_cols(head_outputs);
  Var x1 = norm_attn.forward(add(x, out.forward(attn)));
  Var ffn = ffn_out.forward(gelu(ffn_in.forward(x1)));
  return norm_ffn.forward(add(x1, ffn));
}

void TransformerLayer::collect(std::vector<Var>& out_params) const {
  query.collect(out_params);
  key.collect(out_params);
  value.collect(out_params);
  out.collect(out_params);
  ffn_in.collect(out_params);
  ffn_out.collect(out_params);
  norm_attn.collect(out_params);
  norm_ffn.collect(out_params);
}

AdamW::AdamW(std::vector<Var> params, double lr, double weight_decay, double beta1,
             double beta2, double eps)
    : params_(std::move(params)),
      lr_(lr),
      weight_decay_(weight_decay),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.push_back(Mat::Zero(p.rows(), p.cols()));
    v_.push_back(Mat::Zero(p.rows(), p.cols()));
  }
}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Node* n = params_[i].node().get();
    if (n->grad.size() == 0) continue;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * n->grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * n->grad.cwiseProduct(n->grad);
    const Mat mhat = m_[i] / bc1;
    const Mat vhat = v_[i] / bc2;
    n->value -=
        lr_ * (mhat.array() / (vhat.array().sqrt() + eps_) + weight_decay_ * n->value.array())
            .matrix();
  }
}

void AdamW::zero_grad() { gem::zero_grad(params_); }

}  // namespace gem
