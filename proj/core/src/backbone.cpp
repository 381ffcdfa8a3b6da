#include "gem/backbone.hpp"

#include <stdexcept>

namespace gem {

void BackboneConfig::validate() const {
  if (vocab_size <= 0) throw std::invalid_argument("BackboneConfig: vocab_size not set");
  if (hidden_dim <= 0 || layers < 0 || heads <= 0 || ffn_dim <= 0)
    throw std::invalid_argument("BackboneConfig: dimensions must be positive");
  if (hidden_dim % heads != 0)
    throw std::invalid_argument("BackboneConfig: hidden_dim must be divisible by heads");
  if (max_sequence_length <= 8)
    throw std::invalid_argument("BackboneConfig: max_sequence_length too small");
}

MiniLm::MiniLm(const BackboneConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  token_table_ = Var::param(randn(cfg_.vocab_size, cfg_.hidden_dim, 0.02, rng));
  position_table_ = Var::param(randn(cfg_.max_sequence_length, cfg_.hidden_dim, 0.02, rng));
  for (int i = 0; i < cfg_.layers; ++i)
    layers_.emplace_back(cfg_.hidden_dim, cfg_.heads, cfg_.ffn_dim, rng);
  final_norm_ = LayerNorm(cfg_.hidden_dim);
  if (cfg_.tie_lm_head)
    lm_bias_ = Var::param(Mat::Zero(1, cfg_.vocab_size));
  else
    lm_head_ = Linear(cfg_.hidden_dim, cfg_.vocab_size, rng);
}

Var MiniLm::sequence_hidden(const Var& embedded) {
  const Eigen::Index len = embedded.rows();
  if (len > cfg_.max_sequence_length)
    throw std::invalid_argument("MiniLm: sequence length " + std::to_string(len) +
                                " exceeds maximum " +
                                std::to_string(cfg_.max_sequence_length));
  std::vector<int> positions(static_cast<size_t>(len));
  for (Eigen::Index i = 0; i < len; ++i) positions[static_cast<size_t>(i)] = static_cast<int>(i);

  Var x = add(embedded, gather_rows(position_table_, positions));
  for (auto& layer : layers_) x = layer.forward(x);
  return final_norm_.forward(x);
}

Var MiniLm::logits_at(const Var& hidden, const std::vector<int>& positions) {
  Var rows = gather_rows(hidden, positions);
  if (cfg_.tie_lm_head)
    return add_rowvec(matmul(rows, transpose(token_table_)), lm_bias_);
  return lm_head_.forward(rows);
}

Var MiniLm::mask_logits(const Var& embedded, int mask_position) {
  if (mask_position < 0 || mask_position >= embedded.rows())
    throw std::invalid_argument("MiniLm: mask position out of range");
  return logits_at(sequence_hidden(embedded), {mask_position});
}

std::vector<Var> MiniLm::parameters() const {
  std::vector<Var> out;
  out.push_back(token_table_);
  out.push_back(position_table_);
  for (const auto& layer : layers_) layer.collect(out);
  final_norm_.collect(out);
  if (cfg_.tie_lm_head)
    out.push_back(lm_bias_);
  else
    lm_head_.collect(out);
  return out;
}

}  // namespace gem
