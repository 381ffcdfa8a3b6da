#include "gem/soft_prompt.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gem {

std::string_view to_string(PeMode m) {
  switch (m) {
    case PeMode::kCol: return "COL";
    case PeMode::kPos: return "POS";
    case PeMode::kNone: return "NONE";
  }
  return "?";
}

std::optional<PeMode> pe_mode_from_string(std::string_view s) {
  if (s == "COL" || s == "col") return PeMode::kCol;
  if (s == "POS" || s == "pos") return PeMode::kPos;
  if (s == "NONE" || s == "none" || s == "w/o") return PeMode::kNone;
  return std::nullopt;
}

void SoftPromptConfig::validate() const {
  if (aspect_count < 1)
    throw std::invalid_argument("SoftPromptConfig: aspect count K must be >= 1");
  if (encoder_layers < 0 || encoder_layers > 2)
    throw std::invalid_argument("SoftPromptConfig: encoder layer count N must be in 0..2, got " +
                                std::to_string(encoder_layers));
  if (query_dim <= 0 || value_dim <= 0 || soft_dim <= 0)
    throw std::invalid_argument("SoftPromptConfig: d_q, d_v, d_s must be positive");
  if (max_positions <= 0 || max_columns <= 0)
    throw std::invalid_argument("SoftPromptConfig: embedding table sizes must be positive");
}

SoftPromptState::SoftPromptState(const SoftPromptConfig& cfg, Eigen::Index hidden_dim,
                                 Rng& rng) {
  cfg.validate();
  // zero-mean, small-variance init for the aspect queries
  aspects = Var::param(randn(cfg.aspect_count, cfg.query_dim, 0.02, rng));
  key_proj = Linear(hidden_dim, cfg.query_dim, rng);
  value_proj = Linear(hidden_dim, cfg.value_dim, rng);
  for (int i = 0; i < cfg.encoder_layers; ++i)
    encoder.emplace_back(hidden_dim, cfg.encoder_heads, 4 * hidden_dim, rng);
  post = Linear(cfg.value_dim, cfg.soft_dim, rng);
  post_norm = LayerNorm(cfg.soft_dim);
  // normalized rows carry norm sqrt(d_s); scaling gamma keeps the initial
  // soft embeddings near unit norm, where the Gram diagonal already matches
  // the identity target of the orthogonal regularizer
  post_norm.gamma.value().setConstant(1.0 / std::sqrt(static_cast<double>(cfg.soft_dim)));
  position_embeddings = Var::param(randn(cfg.max_positions, hidden_dim, 0.02, rng));
  column_embeddings = Var::param(randn(cfg.max_columns, hidden_dim, 0.02, rng));
}

std::vector<Var> SoftPromptState::parameters() const {
  std::vector<Var> out;
  out.push_back(aspects);
  key_proj.collect(out);
  value_proj.collect(out);
  for (const auto& layer : encoder) layer.collect(out);
  post.collect(out);
  post_norm.collect(out);
  out.push_back(position_embeddings);
  out.push_back(column_embeddings);
  return out;
}

Var encode_tokens(const std::vector<int>& token_ids, const std::vector<int>& columns,
                  const SoftPromptConfig& cfg, const SoftPromptState& state,
                  const Var& token_table) {
  cfg.validate();
  if (token_ids.empty()) throw std::invalid_argument("encode_tokens: empty token sequence");

  Var x = gather_rows(token_table, token_ids);

  switch (cfg.pe_mode) {
    case PeMode::kPos: {
      std::vector<int> positions(token_ids.size());
      for (size_t i = 0; i < positions.size(); ++i) {
        if (static_cast<int>(i) >= cfg.max_positions)
          throw std::invalid_argument("encode_tokens: sequence exceeds max_positions");
        positions[i] = static_cast<int>(i);
      }
      x = add(x, gather_rows(state.position_embeddings, positions));
      break;
    }
    case PeMode::kCol: {
      if (columns.size() != token_ids.size())
        throw std::invalid_argument(
            "encode_tokens: COL position mode requires a column index per token");
      for (int c : columns)
        if (c < 0 || c >= cfg.max_columns)
          throw std::invalid_argument("encode_tokens: column index out of range");
      x = add(x, gather_rows(state.column_embeddings, columns));
      break;
    }
    case PeMode::kNone:
      break;
  }

  for (const auto& layer : state.encoder) x = layer.forward(x);
  return x;
}

AspectExtraction extract_aspects(const Var& encoded, const SoftPromptConfig& cfg,
                                 const SoftPromptState& state) {
  if (!encoded.value().allFinite())
    throw std::invalid_argument("extract_aspects: non-finite token encodings");

  Var keys = state.key_proj.forward(encoded);      // l x d_q
  Var values = state.value_proj.forward(encoded);  // l x d_v

  const double inv_sqrt_dq = 1.0 / std::sqrt(static_cast<double>(cfg.query_dim));
  Var logits = scale(matmul(state.aspects, transpose(keys)), inv_sqrt_dq);  // K x l

  AspectExtraction out;
  out.attention = softmax_rows(logits);
  out.pooled = matmul(out.attention, values);
  out.embeddings = state.post_norm.forward(state.post.forward(out.pooled));
  return out;
}

Var inject_soft_tokens(const Var& sequence, const std::vector<int>& soft_positions,
                       const Var& soft_embeddings) {
  if (soft_positions.empty()) return sequence;
  for (int p : soft_positions)
    if (p < 0 || p >= sequence.rows())
      throw std::out_of_range("inject_soft_tokens: position " + std::to_string(p) +
                              " out of range");
  return replace_rows(sequence, soft_positions, soft_embeddings);
}

std::string attention_to_json(const std::vector<std::string>& tokens, const Mat& attention) {
  nlohmann::ordered_json j;
  j["tokens"] = tokens;
  auto& rows = j["aspects"];
  rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < attention.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < attention.cols(); ++c) row.push_back(attention(r, c));
    rows.push_back(std::move(row));
  }
  return j.dump();
}

}  // namespace gem
