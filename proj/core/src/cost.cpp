#include "gem/cost.hpp"

#include <stdexcept>

namespace gem {

namespace {

using u128 = unsigned __int128;

std::string u128_to_string(u128 v) {
  if (v == 0) return "0";
  std::string out;
  while (v > 0) {
    out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return out;
}

}  // namespace

TokenRate TokenRate::parse(const std::string& decimal) {
  std::uint64_t whole = 0;
  std::uint64_t frac = 0;
  int frac_digits = 0;
  size_t i = 0;
  bool any = false;
  for (; i < decimal.size() && decimal[i] != '.'; ++i) {
    if (decimal[i] < '0' || decimal[i] > '9')
      throw std::invalid_argument("TokenRate: malformed decimal '" + decimal + "'");
    whole = whole * 10 + static_cast<std::uint64_t>(decimal[i] - '0');
    any = true;
  }
  if (i < decimal.size() && decimal[i] == '.') {
    for (++i; i < decimal.size(); ++i) {
      if (decimal[i] < '0' || decimal[i] > '9')
        throw std::invalid_argument("TokenRate: malformed decimal '" + decimal + "'");
      if (frac_digits >= 6)
        throw std::invalid_argument("TokenRate: more than 6 decimal places in '" + decimal +
                                    "'");
      frac = frac * 10 + static_cast<std::uint64_t>(decimal[i] - '0');
      ++frac_digits;
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("TokenRate: empty rate string");
  for (int d = frac_digits; d < 6; ++d) frac *= 10;
  return TokenRate{whole * 1000000ULL + frac};
}

std::string TokenRate::to_string() const {
  const std::uint64_t whole = micro_per_1k / 1000000ULL;
  std::uint64_t frac = micro_per_1k % 1000000ULL;
  std::string out = std::to_string(whole);
  if (frac > 0) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%06llu", static_cast<unsigned long long>(frac));
    std::string digits(buf);
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += '.' + digits;
  }
  return out;
}

std::uint64_t estimate_augmentation_tokens(const CostParams& p) {
  return 2ULL * p.entities_per_source * (p.pairs_per_entity + p.augmented_attrs) *
         p.tokens_per_pair;
}

std::uint64_t estimate_direct_tokens(const CostParams& p) {
  return p.entities_per_source * p.blocking_fanout * 2ULL * p.pairs_per_entity *
         p.tokens_per_pair;
}

std::string format_cost_dollars(std::uint64_t tokens, TokenRate rate) {
  const u128 nano = static_cast<u128>(tokens) * rate.micro_per_1k;
  const u128 dollars = nano / 1000000000ULL;
  const std::uint64_t remainder = static_cast<std::uint64_t>(nano % 1000000000ULL);
  std::string out = "$" + u128_to_string(dollars);
  if (remainder > 0) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%09llu", static_cast<unsigned long long>(remainder));
    std::string digits(buf);
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += '.' + digits;
  }
  return out;
}

SavingsReport savings(const CostParams& p) {
  SavingsReport r;
  r.augmentation_tokens = estimate_augmentation_tokens(p);
  r.direct_tokens = estimate_direct_tokens(p);

  // d = 2*N*L*(B*N_k - N_k - O_k), computed as signed exact arithmetic
  const __int128 inner = static_cast<__int128>(p.blocking_fanout) * p.pairs_per_entity -
                         static_cast<__int128>(p.pairs_per_entity) -
                         static_cast<__int128>(p.augmented_attrs);
  const __int128 d =
      2 * static_cast<__int128>(p.entities_per_source) * p.tokens_per_pair * inner;
  r.token_difference = static_cast<long long>(d);

  r.augmentation_cost = format_cost_dollars(r.augmentation_tokens, p.base_rate);
  r.direct_cost = format_cost_dollars(r.direct_tokens, p.finetuned_rate);
  return r;
}

bool SavingsReport::is_exact_reduction_percent(int percent) const {
  if (direct_tokens == 0) return false;
  const __int128 lhs = static_cast<__int128>(token_difference) * 100;
  const __int128 rhs = static_cast<__int128>(percent) * direct_tokens;
  return lhs == rhs;
}

}  // namespace gem
