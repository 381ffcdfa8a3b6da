#pragma once

#include <string>
#include <vector>

#include "gem/serialize.hpp"

namespace gem {

struct ScoredText {
  std::string text;
  double logprob = 0.0;
};

// A sequence-to-sequence translation model pair (source -> pivot language and
// back). Consumed, never trained here.
class TranslationBackend {
 public:
  virtual ~TranslationBackend() = default;
  virtual bool available() const = 0;
  virtual std::vector<ScoredText> forward(const std::string& text, int beam_width) = 0;
  virtual std::vector<ScoredText> backward(const std::string& text, int beam_width) = 0;
  virtual std::string pivot_language() const { return "de"; }
};

// Deterministic backend reading translations from a JSON fixture:
// {"pivot": "de", "forward": {text: [{"text","logprob"}...]}, "backward": {...}}
class FixtureTranslationBackend : public TranslationBackend {
 public:
  explicit FixtureTranslationBackend(const std::string& path);

  bool available() const override { return true; }
  std::vector<ScoredText> forward(const std::string& text, int beam_width) override;
  std::vector<ScoredText> backward(const std::string& text, int beam_width) override;
  std::string pivot_language() const override { return pivot_; }

 private:
  std::string pivot_ = "de";
  std::map<std::string, std::vector<ScoredText>> forward_;
  std::map<std::string, std::vector<ScoredText>> backward_;
};

struct ParaphraseResult {
  PromptTemplate result;            // paraphrased, or the input on fallback
  bool fallback = false;            // no candidate survived parsing
  bool backend_unavailable = false; // translation backend missing; input returned
  double score = 0.0;               // summed generation probability of the winner
  size_t candidates_seen = 0;
  size_t survivors = 0;
};

// Back-translation template mining: fill the template per corpus entity,
// translate with beam width k_b (k_b pivots, k_b back-translations each),
// recover candidate templates by substituting the known slot values, discard
// candidates that fail parse_filled, and return the candidate with the
// highest summed generation probability p(p_t|p) * p(p'|p_t). Ties break on
// lexicographic pattern order.
ParaphraseResult paraphrase_template(const PromptTemplate& t,
                                     const std::vector<Entity>& corpus, int beam_width,
                                     TranslationBackend& backend);

}  // namespace gem
