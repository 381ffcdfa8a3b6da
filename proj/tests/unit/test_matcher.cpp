#include "doctest.h"

#include <random>

#include "gem/matcher.hpp"
#include "test_helpers.hpp"

using namespace gem;

namespace {

size_t count_substr(const std::string& s, const std::string& needle) {
  size_t n = 0, pos = 0;
  while ((pos = s.find(needle, pos)) != std::string::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

WordTokenizer tokenizer_for(const std::vector<std::string>& texts, int soft_tokens) {
  WordTokenizer tok;
  for (const auto& w : {"the", "keyword", "is", "to", "."}) tok.add_token(w);
  for (int k = 1; k <= soft_tokens; ++k) tok.add_token(soft_token_name(k));
  for (const auto& t : texts) tok.add_text(t);
  tok.freeze();
  return tok;
}

}  // namespace

TEST_SUITE("matcher") {

TEST_CASE("K=0 reduces to the plain pairwise prompt") {
  Entity a = test::structured_entity("a", {{"brand", "seagate"}});
  Entity b = test::structured_entity("b", {{"brand", "apple"}});
  MatcherConfig cfg;
  cfg.use_soft_tokens = false;
  WordTokenizer tok =
      tokenizer_for({"the brand is seagate", "the brand is apple"}, 0);
  PromptBuilder builder(tok, cfg, 0, 64);
  PromptInstance inst = builder.build(a, b);

  CHECK(inst.text == "the brand is seagate is [MASK] to the brand is apple.");
  CHECK(count_substr(inst.text, " is [MASK] to ") == 1);
  CHECK(inst.soft_positions_left.empty());
  CHECK(inst.soft_positions_right.empty());

  // exactly one mask token in the id sequence
  int masks = 0;
  for (int id : inst.token_ids)
    if (id == tok.mask_id()) ++masks;
  CHECK(masks == 1);
  CHECK(inst.token_ids[inst.mask_position] == tok.mask_id());
}

TEST_CASE("soft placeholders append after each entity serialization") {
  Entity a = test::structured_entity("a", {{"brand", "seagate"}});
  Entity b = test::structured_entity("b", {{"brand", "apple"}});
  MatcherConfig cfg;
  WordTokenizer tok =
      tokenizer_for({"the brand is seagate", "the brand is apple"}, 2);
  PromptBuilder builder(tok, cfg, 2, 64);
  PromptInstance inst = builder.build(a, b);

  CHECK(inst.text.find("seagate the keyword is [S_1] [S_2] is [MASK] to") !=
        std::string::npos);
  CHECK(inst.soft_positions_left.size() == 2);
  CHECK(inst.soft_positions_right.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(inst.token_ids[inst.soft_positions_left[i]] ==
          tok.token_id(soft_token_name(static_cast<int>(i) + 1)));
    CHECK(inst.token_ids[inst.soft_positions_right[i]] ==
          tok.token_id(soft_token_name(static_cast<int>(i) + 1)));
  }
}

TEST_CASE("overlong pairs truncate entity tails, never the mask or placeholders") {
  std::string long_title;
  for (int i = 0; i < 120; ++i) long_title += "word" + std::to_string(i) + " ";
  Entity a = test::structured_entity("a", {{"title", long_title}});
  Entity b = test::structured_entity("b", {{"title", long_title}});
  MatcherConfig cfg;
  WordTokenizer tok = tokenizer_for({"the title is " + long_title}, 2);
  const int max_len = 64;
  PromptBuilder builder(tok, cfg, 2, max_len);
  PromptInstance inst = builder.build(a, b);

  CHECK(inst.truncated);
  CHECK(static_cast<int>(inst.token_ids.size()) <= max_len);
  CHECK(inst.token_ids[inst.mask_position] == tok.mask_id());
  CHECK(inst.soft_positions_left.size() == 2);
  CHECK(inst.soft_positions_right.size() == 2);
  // symmetric tail trim keeps both sides balanced
  CHECK(std::abs(static_cast<long>(inst.left_entity_tokens.size()) -
                 static_cast<long>(inst.right_entity_tokens.size())) <= 1);
}

TEST_CASE("two empty entities are an error") {
  Entity a;
  a.id = "a";
  a.shape = EntityShape::kStructured;
  Entity b;
  b.id = "b";
  b.shape = EntityShape::kTextual;
  MatcherConfig cfg;
  WordTokenizer tok = tokenizer_for({}, 2);
  PromptBuilder builder(tok, cfg, 2, 64);
  CHECK_THROWS_AS(builder.build(a, b), std::invalid_argument);
}

TEST_CASE("verbalizer halves on equal scores") {
  CHECK(verbalize({0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}) == 0.5);  // exactly
}

TEST_CASE("verbalizer sums the sets and renormalizes") {
  CHECK(verbalize({0.3, 0.2, 0.1}, {0.2, 0.1, 0.1}) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("swapping the word sets flips the probability") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(1e-6, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> m = {dist(rng), dist(rng), dist(rng)};
    std::vector<double> n = {dist(rng), dist(rng), dist(rng)};
    CHECK(verbalize(m, n) == doctest::Approx(1.0 - verbalize(n, m)).epsilon(1e-12));
  }
}

TEST_CASE("verbalizer is invariant to positive rescaling") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dist(1e-6, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> m = {dist(rng), dist(rng), dist(rng)};
    std::vector<double> n = {dist(rng), dist(rng), dist(rng)};
    const double c = dist(rng) * 10 + 1e-3;
    std::vector<double> ms = m, ns = n;
    for (auto& v : ms) v *= c;
    for (auto& v : ns) v *= c;
    CHECK(verbalize(ms, ns) == doctest::Approx(verbalize(m, n)).epsilon(1e-9));
  }
}

TEST_CASE("all-zero label scores are a degenerate-output error") {
  CHECK_THROWS_AS(verbalize({0, 0, 0}, {0, 0, 0}), std::runtime_error);
}

TEST_CASE("predict is deterministic and ties resolve to match") {
  Rng rng(5);
  Dataset d = test::synth_duplicate_dataset(2, 2, 21);

  // build a small untrained model directly
  MatcherConfig mcfg;
  WordTokenizer tok;
  for (const auto& w : {"the", "keyword", "is", "to", "."}) tok.add_token(w);
  for (int k = 1; k <= 2; ++k) tok.add_token(soft_token_name(k));
  for (const auto& w : mcfg.match_words) tok.add_text(w);
  for (const auto& w : mcfg.mismatch_words) tok.add_text(w);
  for (const auto& e : d.left) tok.add_text(serialize_natural(e));
  for (const auto& e : d.right) tok.add_text(serialize_natural(e));
  tok.freeze();

  MatchModel model;
  model.tokenizer = std::move(tok);
  model.backbone_config.vocab_size = model.tokenizer.vocab_size();
  model.backbone_config.hidden_dim = 16;
  model.backbone_config.layers = 1;
  model.backbone_config.heads = 2;
  model.backbone_config.ffn_dim = 32;
  model.backbone_config.max_sequence_length = 96;
  model.soft_config.aspect_count = 2;
  model.soft_config.encoder_layers = 0;
  model.soft_config.query_dim = 16;
  model.soft_config.value_dim = 16;
  model.soft_config.soft_dim = 16;
  model.soft_config.pe_mode = PeMode::kPos;
  model.matcher_config = mcfg;
  model.backbone = MiniLm(model.backbone_config, rng);
  model.soft = SoftPromptState(model.soft_config, 16, rng);
  model.resolve_label_words();

  PromptBuilder builder(model.tokenizer, model.matcher_config, 2,
                        model.backbone_config.max_sequence_length);
  PromptInstance inst = builder.build(d.left[0], d.right[0]);

  MatchPrediction p1 = predict(model, inst);
  MatchPrediction p2 = predict(model, inst);
  CHECK(p1.p_match == p2.p_match);  // bitwise identical on a frozen model
  CHECK(p1.label == (p1.p_match >= 0.5 ? 1 : 0));
  CHECK(p1.match_word_scores.size() == 3);
  CHECK(p1.mismatch_word_scores.size() == 3);
}

}  // TEST_SUITE
