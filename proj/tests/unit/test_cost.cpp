#include "doctest.h"

#include <fstream>
#include <random>

#include "gem/cost.hpp"

using namespace gem;

namespace {

CostParams params(std::uint64_t n, std::uint64_t nk, std::uint64_t ok, std::uint64_t l,
                  std::uint64_t b) {
  CostParams p;
  p.entities_per_source = n;
  p.pairs_per_entity = nk;
  p.augmented_attrs = ok;
  p.tokens_per_pair = l;
  p.blocking_fanout = b;
  return p;
}

}  // namespace

TEST_SUITE("cost") {

TEST_CASE("augmentation tokens follow 2N(Nk+Ok)L") {
  CHECK(estimate_augmentation_tokens(params(100, 5, 5, 10, 1)) == 20000);
  CHECK(estimate_augmentation_tokens(params(100, 0, 0, 10, 1)) == 0);
}

TEST_CASE("augmentation tokens are linear in N") {
  CostParams p = params(100, 5, 7, 11, 3);
  CostParams doubled = p;
  doubled.entities_per_source *= 2;
  CHECK(estimate_augmentation_tokens(doubled) == 2 * estimate_augmentation_tokens(p));
}

TEST_CASE("direct inference tokens follow N*B*2*Nk*L") {
  CHECK(estimate_direct_tokens(params(100, 5, 0, 10, 5)) == 50000);
  CHECK(estimate_direct_tokens(params(100, 5, 0, 10, 0)) == 0);
}

TEST_CASE("B=5 with Ok=Nk saves exactly 60 percent of the tokens") {
  CostParams p = params(137, 6, 6, 9, 5);
  SavingsReport r = savings(p);
  CHECK(5 * r.augmentation_tokens == 2 * r.direct_tokens);  // 40% of direct
  CHECK(r.is_exact_reduction_percent(60));
}

TEST_CASE("difference formula zeroes out for B=1 with no augmentation") {
  SavingsReport r = savings(params(50, 4, 0, 12, 1));
  CHECK(r.token_difference == 0);
}

TEST_CASE("hand-computed difference example") {
  SavingsReport r = savings(params(100, 6, 12, 10, 5));
  CHECK(r.token_difference == 24000);  // 2*100*10*(30-6-12)
}

TEST_CASE("the difference identity d = direct - augmentation holds on random draws") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    CostParams p = params(rng() % 10000, rng() % 40, rng() % 40, rng() % 60, rng() % 10);
    SavingsReport r = savings(p);
    CHECK(r.token_difference == static_cast<long long>(r.direct_tokens) -
                                    static_cast<long long>(r.augmentation_tokens));
  }
}

TEST_CASE("savings are positive exactly when B*Nk exceeds Nk+Ok") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    CostParams p =
        params(1 + rng() % 1000, 1 + rng() % 30, rng() % 30, 1 + rng() % 40, rng() % 8);
    SavingsReport r = savings(p);
    const bool cheaper = p.blocking_fanout * p.pairs_per_entity >
                         p.pairs_per_entity + p.augmented_attrs;
    CHECK((r.token_difference > 0) == cheaper);
  }
}

TEST_CASE("token rates parse exact micro-units") {
  CHECK(TokenRate::parse("0.002").micro_per_1k == 2000);
  CHECK(TokenRate::parse("0.016").micro_per_1k == 16000);
  CHECK(TokenRate::parse("1").micro_per_1k == 1000000);
  CHECK(TokenRate::parse("2.5").micro_per_1k == 2500000);
  CHECK_THROWS_AS(TokenRate::parse("0.0000001"), std::invalid_argument);
  CHECK_THROWS_AS(TokenRate::parse("abc"), std::invalid_argument);
  CHECK(TokenRate::parse("0.002").to_string() == "0.002");
}

TEST_CASE("costs format as exact dollar strings") {
  CHECK(format_cost_dollars(20000, TokenRate{2000}) == "$0.04");
  CHECK(format_cost_dollars(50000, TokenRate{16000}) == "$0.8");
  CHECK(format_cost_dollars(0, TokenRate{2000}) == "$0");
  CHECK(format_cost_dollars(1000000000ULL, TokenRate{2000}) == "$2000");
  CHECK(format_cost_dollars(1, TokenRate{2000}) == "$0.000002");
}

TEST_CASE("the default rates are the 10/2023 list prices") {
  CostParams p;
  CHECK(p.base_rate.micro_per_1k == 2000);
  CHECK(p.finetuned_rate.micro_per_1k == 16000);
}

TEST_CASE("the monetary comparison bills direct inference at the fine-tuned rate") {
  CostParams p = params(100, 5, 5, 10, 5);
  SavingsReport r = savings(p);
  CHECK(r.augmentation_cost == "$0.04");  // 20000 tokens at 0.002/1k
  CHECK(r.direct_cost == "$0.8");         // 50000 tokens at 0.016/1k
}

}  // TEST_SUITE
