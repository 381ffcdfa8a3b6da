#pragma once

#include <cstdint>
#include <string>

namespace gem {

// Currency rate per 1k tokens in exact micro-currency units ($0.002 -> 2000).
struct TokenRate {
  std::uint64_t micro_per_1k = 0;

  static TokenRate parse(const std::string& decimal);  // up to 6 decimals
  std::string to_string() const;
};

struct CostParams {
  std::uint64_t entities_per_source = 0;  // N
  std::uint64_t pairs_per_entity = 0;     // N_k, key-value pairs per entity
  std::uint64_t augmented_attrs = 0;      // O_k, requested attribute count
  std::uint64_t tokens_per_pair = 0;      // L
  std::uint64_t blocking_fanout = 0;      // B
  TokenRate base_rate{2000};              // $0.002 / 1k tokens (10/2023)
  TokenRate finetuned_rate{16000};        // $0.016 / 1k tokens
};

// 2*N*(N_k + O_k)*L: every entity serialized once in, augmented values out.
std::uint64_t estimate_augmentation_tokens(const CostParams& p);

// N*B*2*N_k*L: every candidate pair serialized into a fine-tuned model.
std::uint64_t estimate_direct_tokens(const CostParams& p);

// Exact dollar string for tokens billed at `rate` (cost in nano-dollars is
// tokens * micro_per_1k, printed exactly).
std::string format_cost_dollars(std::uint64_t tokens, TokenRate rate);

struct SavingsReport {
  long long token_difference = 0;  // d = 2*N*L*(B*N_k - N_k - O_k)
  std::uint64_t augmentation_tokens = 0;
  std::uint64_t direct_tokens = 0;
  std::string augmentation_cost;  // billed at the base rate
  std::string direct_cost;        // billed at the fine-tuned rate

  // True when the saved-token share equals percent/100 exactly.
  bool is_exact_reduction_percent(int percent) const;
};

SavingsReport savings(const CostParams& p);

}  // namespace gem
