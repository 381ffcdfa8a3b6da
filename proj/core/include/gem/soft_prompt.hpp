#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gem/nn.hpp"
#include "gem/tensor.hpp"

namespace gem {

enum class PeMode { kCol, kPos, kNone };

std::string_view to_string(PeMode m);
std::optional<PeMode> pe_mode_from_string(std::string_view s);

struct SoftPromptConfig {
  int aspect_count = 4;    // K, the default preset
  int encoder_layers = 0;  // N in 0..2, the default preset
  int query_dim = 768;     // d_q
  int value_dim = 768;     // d_v
  int soft_dim = 768;      // d_s, the post-processed embedding width
  PeMode pe_mode = PeMode::kPos;
  int encoder_heads = 2;
  int max_positions = 512;
  int max_columns = 64;

  void validate() const;  // K >= 1, dims > 0, N in 0..2
};

// Learnable state: aspect queries A (K x d_q), key/value projections, the N
// encoder layers, post-processing linear + layer norm, and the position /
// column embedding tables. Token embeddings are shared with the backbone.
struct SoftPromptState {
  Var aspects;  // K x d_q
  Linear key_proj;
  Linear value_proj;
  std::vector<TransformerLayer> encoder;
  Linear post;  // d_v -> d_s
  LayerNorm post_norm;
  Var position_embeddings;  // max_positions x hidden (kPos)
  Var column_embeddings;    // max_columns x hidden (kCol)

  SoftPromptState() = default;
  SoftPromptState(const SoftPromptConfig& cfg, Eigen::Index hidden_dim, Rng& rng);

  std::vector<Var> parameters() const;
};

// Token embeddings plus the configured position information, passed through
// the N encoder layers. `columns` gives each token's top-level attribute
// index and is required in COL mode.
Var encode_tokens(const std::vector<int>& token_ids, const std::vector<int>& columns,
                  const SoftPromptConfig& cfg, const SoftPromptState& state,
                  const Var& token_table);

struct AspectExtraction {
  Var attention;   // K x l, rows sum to 1
  Var pooled;      // K x d_v, attention-weighted values before post-processing
  Var embeddings;  // K x d_s, after linear map + layer norm
};

// Scaled dot-product attention of the aspect queries over the encoded tokens,
// followed by the post-processing linear map and layer normalization.
AspectExtraction extract_aspects(const Var& encoded, const SoftPromptConfig& cfg,
                                 const SoftPromptState& state);

// Replaces the placeholder rows of an embedded prompt with the soft
// embeddings, in order. Positions out of range are an error.
Var inject_soft_tokens(const Var& sequence, const std::vector<int>& soft_positions,
                       const Var& soft_embeddings);

// Attention map export for visualization (JSON): tokens and one weight row
// per aspect.
std::string attention_to_json(const std::vector<std::string>& tokens, const Mat& attention);

}  // namespace gem
