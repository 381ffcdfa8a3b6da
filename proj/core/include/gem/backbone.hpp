#pragma once

#include <memory>
#include <vector>

#include "gem/nn.hpp"
#include "gem/tensor.hpp"

namespace gem {

// A masked-LM backbone consumed by the matcher: it owns the shared token
// embedding table and maps an embedded prompt to vocabulary logits at the
// mask position. The prompt machinery is backbone-agnostic; any model that
// can fill a mask slots in behind this interface.
class MaskedLmBackbone {
 public:
  virtual ~MaskedLmBackbone() = default;

  virtual const Var& token_embeddings() const = 0;
  virtual Eigen::Index hidden_dim() const = 0;
  virtual int max_sequence_length() const = 0;
  virtual int vocab_size() const = 0;

  // `embedded` is the full prompt as one l x hidden matrix (soft tokens
  // already injected); returns 1 x vocab logits for the mask position.
  virtual Var mask_logits(const Var& embedded, int mask_position) = 0;

  virtual std::vector<Var> parameters() const = 0;
};

struct BackboneConfig {
  int vocab_size = 0;  // set when the vocabulary is built
  int hidden_dim = 64;
  int layers = 2;
  int heads = 2;
  int ffn_dim = 256;
  int max_sequence_length = 160;
  bool tie_lm_head = true;  // logits share the token embedding table

  void validate() const;
};

// Compact trainable transformer MLM: token + position embeddings, post-norm
// encoder layers, final layer norm, and a linear LM head. Small enough to
// tune from scratch on desk-scale matching data.
class MiniLm : public MaskedLmBackbone {
 public:
  MiniLm() = default;
  MiniLm(const BackboneConfig& cfg, Rng& rng);

  const Var& token_embeddings() const override { return token_table_; }
  Eigen::Index hidden_dim() const override { return cfg_.hidden_dim; }
  int max_sequence_length() const override { return cfg_.max_sequence_length; }
  int vocab_size() const override { return cfg_.vocab_size; }

  Var mask_logits(const Var& embedded, int mask_position) override;
  std::vector<Var> parameters() const override;

  // Encoder output for a whole embedded sequence, and vocabulary logits at
  // chosen positions; mask_logits composes these.
  Var sequence_hidden(const Var& embedded);
  Var logits_at(const Var& hidden, const std::vector<int>& positions);

  const BackboneConfig& config() const { return cfg_; }

  // Direct state access for checkpointing.
  const Var& token_table() const { return token_table_; }
  const Var& position_table() const { return position_table_; }
  const std::vector<TransformerLayer>& encoder() const { return layers_; }
  const LayerNorm& final_norm() const { return final_norm_; }
  const Linear& lm_head() const { return lm_head_; }
  const Var& lm_bias() const { return lm_bias_; }

 private:
  BackboneConfig cfg_;
  Var token_table_;     // vocab x hidden
  Var position_table_;  // max_len x hidden
  std::vector<TransformerLayer> layers_;
  LayerNorm final_norm_;
  Linear lm_head_;  // hidden -> vocab, untied mode only
  Var lm_bias_;     // 1 x vocab, tied mode
};

}  // namespace gem
