#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gem/backbone.hpp"
#include "gem/data.hpp"
#include "gem/serialize.hpp"
#include "gem/soft_prompt.hpp"
#include "gem/tokenizer.hpp"

namespace gem {

enum class SerializationMode { kNaturalBasic, kDitto, kTemplate };

std::string_view to_string(SerializationMode m);
std::optional<SerializationMode> serialization_mode_from_string(std::string_view s);

struct MatcherConfig {
  SerializationMode serialization = SerializationMode::kNaturalBasic;
  // Carried in full so checkpoints stay self-contained in kTemplate mode.
  PromptTemplate serialization_template;
  bool use_soft_tokens = true;
  std::vector<std::string> match_words = {"matched", "similar", "relevant"};
  std::vector<std::string> mismatch_words = {"mismatched", "different", "irrelevant"};
  // Label words that split into several pieces score by their first piece.
  bool score_first_piece = true;
};

// One assembled pairwise prompt: "<a> the keyword is [S_1]..[S_K] is [MASK]
// to <b> the keyword is [S_1]..[S_K]." with exactly one mask token.
struct PromptInstance {
  std::string text;
  std::vector<int> token_ids;
  int mask_position = -1;
  std::vector<int> soft_positions_left;
  std::vector<int> soft_positions_right;
  // serialize(e) tokens per side (post-truncation), inputs to the soft encoder
  std::vector<int> left_entity_tokens;
  std::vector<int> right_entity_tokens;
  std::vector<int> left_columns;
  std::vector<int> right_columns;
  std::string left_id;
  std::string right_id;
  std::optional<int> label;
  bool truncated = false;
};

struct MatchPrediction {
  double p_match = 0.0;
  int label = 0;  // 1 = match (ties at 0.5 resolve to match)
  std::vector<double> match_word_scores;
  std::vector<double> mismatch_word_scores;
};

// Entity serialization for matching: the configured base form plus the
// augmented-attribute suffix when a record is supplied.
std::vector<Fragment> serialize_entity_fragments(const Entity& e, const MatcherConfig& cfg,
                                                 const AugmentationRecord* record);

// ---------------------------------------------------------------------------
// Prompt assembly
// ---------------------------------------------------------------------------
class PromptBuilder {
 public:
  PromptBuilder(const WordTokenizer& tokenizer, MatcherConfig cfg, int soft_token_count,
                int max_sequence_length,
                const std::unordered_map<std::string, AugmentationRecord>* augmentations =
                    nullptr);

  // Entity serialization including the augmented-attribute suffix when a
  // record is attached for the entity.
  std::vector<Fragment> serialize_entity(const Entity& e) const;

  // Pairwise prompt assembly; truncation trims tail tokens of the longer
  // entity first and never removes the mask or the soft placeholders.
  PromptInstance build(const Entity& a, const Entity& b) const;

  int soft_token_count() const { return soft_tokens_; }

 private:
  const WordTokenizer& tokenizer_;
  MatcherConfig cfg_;
  int soft_tokens_ = 0;
  int max_len_ = 0;
  const std::unordered_map<std::string, AugmentationRecord>* augmentations_ = nullptr;
};

// ---------------------------------------------------------------------------
// Verbalizer
// ---------------------------------------------------------------------------

// p_match = sum(match scores) / sum(all six); throws when the union sums to
// zero (degenerate backbone output).
double verbalize(const std::vector<double>& match_scores,
                 const std::vector<double>& mismatch_scores);

// Autograd path over the full-vocabulary probability row at the mask.
Var verbalize_probs(const Var& vocab_probs_row, const std::vector<int>& match_ids,
                    const std::vector<int>& mismatch_ids);

// ---------------------------------------------------------------------------
// Model bundle
// ---------------------------------------------------------------------------
struct MatchModel {
  WordTokenizer tokenizer;
  BackboneConfig backbone_config;
  MiniLm backbone;
  SoftPromptConfig soft_config;
  SoftPromptState soft;
  MatcherConfig matcher_config;
  std::vector<int> match_word_ids;
  std::vector<int> mismatch_word_ids;

  MatchModel() = default;
  MatchModel(const MatchModel&) = delete;  // parameters are shared nodes
  MatchModel& operator=(const MatchModel&) = delete;
  MatchModel(MatchModel&&) = default;
  MatchModel& operator=(MatchModel&&) = default;

  void resolve_label_words();
  std::vector<Var> parameters() const;  // backbone + prompt parameters
};

struct PairForward {
  Var p_match;
  Var word_probs;  // 1 x 6, match set first
  Var left_soft;   // K x d_s (defined when soft tokens are enabled)
  Var right_soft;
  Mat left_attention;  // K x l snapshots for export
  Mat right_attention;
};

PairForward forward_pair(MatchModel& model, const PromptInstance& instance);

// Deterministic given fixed parameters; label = match iff p_match >= 0.5.
MatchPrediction predict(MatchModel& model, const PromptInstance& instance);

}  // namespace gem
