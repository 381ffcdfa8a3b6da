#include "gem/matcher.hpp"

#include <algorithm>
#include <stdexcept>

namespace gem {

std::string_view to_string(SerializationMode m) {
  switch (m) {
    case SerializationMode::kNaturalBasic: return "basic";
    case SerializationMode::kDitto: return "ditto";
    case SerializationMode::kTemplate: return "template";
  }
  return "?";
}

std::optional<SerializationMode> serialization_mode_from_string(std::string_view s) {
  if (s == "basic" || s == "natural") return SerializationMode::kNaturalBasic;
  if (s == "ditto") return SerializationMode::kDitto;
  if (s == "template") return SerializationMode::kTemplate;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// PromptBuilder
// ---------------------------------------------------------------------------

PromptBuilder::PromptBuilder(const WordTokenizer& tokenizer, MatcherConfig cfg,
                             int soft_token_count, int max_sequence_length,
                             const std::unordered_map<std::string, AugmentationRecord>*
                                 augmentations)
    : tokenizer_(tokenizer),
      cfg_(std::move(cfg)),
      soft_tokens_(cfg_.use_soft_tokens ? soft_token_count : 0),
      max_len_(max_sequence_length),
      augmentations_(augmentations) {
  if (cfg_.serialization == SerializationMode::kTemplate)
    cfg_.serialization_template.validate();
}

std::vector<Fragment> serialize_entity_fragments(const Entity& e, const MatcherConfig& cfg,
                                                 const AugmentationRecord* record) {
  std::vector<Fragment> frags;
  switch (cfg.serialization) {
    case SerializationMode::kNaturalBasic:
      frags = serialize_natural_fragments(e, nullptr);
      break;
    case SerializationMode::kDitto:
      frags = serialize_ditto_fragments(e);
      break;
    case SerializationMode::kTemplate:
      frags = serialize_natural_fragments(e, &cfg.serialization_template);
      break;
  }
  if (record != nullptr && !record->values.empty()) {
    int col = frags.empty() ? 0 : static_cast<int>(frags.size());
    bool first = true;
    for (const auto& [k, v] : record->values) {
      std::string piece = first ? (frags.empty() ? "" : " ") : ", ";
      first = false;
      piece += "the " + k + " is " + (v.empty() ? std::string(kPadMarker) : v);
      frags.push_back({piece, col++});
    }
  }
  return frags;
}

std::vector<Fragment> PromptBuilder::serialize_entity(const Entity& e) const {
  const AugmentationRecord* record = nullptr;
  if (augmentations_ != nullptr) {
    auto it = augmentations_->find(e.id);
    if (it != augmentations_->end()) record = &it->second;
  }
  return serialize_entity_fragments(e, cfg_, record);
}

namespace {

struct EntityTokens {
  std::vector<int> ids;
  std::vector<int> columns;
  std::vector<std::string> words;
};

EntityTokens tokenize_fragments(const WordTokenizer& tok, const std::vector<Fragment>& frags) {
  EntityTokens out;
  for (const auto& f : frags) {
    for (const auto& w : WordTokenizer::split(f.text)) {
      out.ids.push_back(tok.token_id(w));
      out.columns.push_back(f.column);
      out.words.push_back(w);
    }
  }
  return out;
}

void truncate_tail(EntityTokens& t, size_t keep) {
  t.ids.resize(keep);
  t.columns.resize(keep);
  t.words.resize(keep);
}

}  // namespace

PromptInstance PromptBuilder::build(const Entity& a, const Entity& b) const {
  EntityTokens left = tokenize_fragments(tokenizer_, serialize_entity(a));
  EntityTokens right = tokenize_fragments(tokenizer_, serialize_entity(b));
  if (left.ids.empty() && right.ids.empty())
    throw std::invalid_argument("build_prompt: both entities serialize to nothing ('" +
                                a.id + "', '" + b.id + "')");

  // fixed skeleton: per-side "the keyword is [S_1..K]", " is [MASK] to ", "."
  const int suffix_len = soft_tokens_ > 0 ? 3 + soft_tokens_ : 0;
  const int overhead = 2 * suffix_len + 3 + 1;
  const long budget = static_cast<long>(max_len_) - overhead;
  if (budget < 2)
    throw std::invalid_argument("build_prompt: backbone length too small for the prompt");

  PromptInstance inst;
  inst.left_id = a.id;
  inst.right_id = b.id;

  while (static_cast<long>(left.ids.size() + right.ids.size()) > budget) {
    inst.truncated = true;
    if (left.ids.size() >= right.ids.size())
      truncate_tail(left, left.ids.size() - 1);
    else
      truncate_tail(right, right.ids.size() - 1);
  }

  std::vector<int> ids;
  std::vector<std::string> words;
  auto push_token = [&](const std::string& w) {
    ids.push_back(tokenizer_.token_id(w));
    words.push_back(w);
  };
  auto push_entity = [&](const EntityTokens& t) {
    ids.insert(ids.end(), t.ids.begin(), t.ids.end());
    words.insert(words.end(), t.words.begin(), t.words.end());
  };
  auto push_soft_suffix = [&](std::vector<int>& positions) {
    if (soft_tokens_ == 0) return;
    push_token("the");
    push_token("keyword");
    push_token("is");
    for (int k = 1; k <= soft_tokens_; ++k) {
      positions.push_back(static_cast<int>(ids.size()));
      push_token(soft_token_name(k));
    }
  };

  push_entity(left);
  push_soft_suffix(inst.soft_positions_left);
  push_token("is");
  inst.mask_position = static_cast<int>(ids.size());
  push_token(kMaskToken);
  push_token("to");
  push_entity(right);
  push_soft_suffix(inst.soft_positions_right);
  push_token(".");

  inst.token_ids = std::move(ids);
  inst.left_entity_tokens = std::move(left.ids);
  inst.right_entity_tokens = std::move(right.ids);
  inst.left_columns = std::move(left.columns);
  inst.right_columns = std::move(right.columns);

  // canonical text form; token-joined when truncation changed the content
  auto join = [](const std::vector<std::string>& ws, size_t from, size_t to) {
    std::string s;
    for (size_t i = from; i < to; ++i) {
      if (!s.empty()) s += ' ';
      s += ws[i];
    }
    return s;
  };
  std::string left_text = inst.truncated
                              ? join(words, 0, inst.left_entity_tokens.size())
                              : fragments_to_string(serialize_entity(a));
  size_t right_begin = inst.left_entity_tokens.size() + suffix_len + 3;
  std::string right_text =
      inst.truncated ? join(words, right_begin, right_begin + inst.right_entity_tokens.size())
                     : fragments_to_string(serialize_entity(b));
  std::string soft_suffix;
  if (soft_tokens_ > 0) {
    soft_suffix = " the keyword is";
    for (int k = 1; k <= soft_tokens_; ++k) soft_suffix += ' ' + soft_token_name(k);
  }
  inst.text = left_text + soft_suffix + " is [MASK] to " + right_text + soft_suffix + ".";
  return inst;
}

// ---------------------------------------------------------------------------
// Verbalizer
// ---------------------------------------------------------------------------

double verbalize(const std::vector<double>& match_scores,
                 const std::vector<double>& mismatch_scores) {
  double match_sum = 0.0;
  double mismatch_sum = 0.0;
  for (double s : match_scores) match_sum += s;
  for (double s : mismatch_scores) mismatch_sum += s;
  const double denom = match_sum + mismatch_sum;
  if (denom == 0.0)
    throw std::runtime_error("verbalize: all label-word scores are zero (degenerate output)");
  return match_sum / denom;
}

Var verbalize_probs(const Var& vocab_probs_row, const std::vector<int>& match_ids,
                    const std::vector<int>& mismatch_ids) {
  Var match_sum = sum(gather_cols_row(vocab_probs_row, match_ids));
  Var mismatch_sum = sum(gather_cols_row(vocab_probs_row, mismatch_ids));
  Var denom = sadd(match_sum, mismatch_sum);
  if (denom.item() == 0.0)
    throw std::runtime_error("verbalize: all label-word scores are zero (degenerate output)");
  return sdiv(match_sum, denom);
}

// ---------------------------------------------------------------------------
// MatchModel
// ---------------------------------------------------------------------------

namespace {

int resolve_word_id(const WordTokenizer& tok, const std::string& word, bool first_piece) {
  auto pieces = WordTokenizer::split(word);
  if (pieces.empty()) throw std::invalid_argument("label word is empty");
  if (pieces.size() > 1 && !first_piece)
    throw std::invalid_argument("label word '" + word + "' splits into multiple pieces");
  return tok.token_id(pieces.front());
}

}  // namespace

void MatchModel::resolve_label_words() {
  match_word_ids.clear();
  mismatch_word_ids.clear();
  for (const auto& w : matcher_config.match_words)
    match_word_ids.push_back(resolve_word_id(tokenizer, w, matcher_config.score_first_piece));
  for (const auto& w : matcher_config.mismatch_words)
    mismatch_word_ids.push_back(
        resolve_word_id(tokenizer, w, matcher_config.score_first_piece));
}

std::vector<Var> MatchModel::parameters() const {
  std::vector<Var> out = backbone.parameters();
  if (matcher_config.use_soft_tokens) {
    auto soft_params = soft.parameters();
    out.insert(out.end(), soft_params.begin(), soft_params.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward / predict
// ---------------------------------------------------------------------------

PairForward forward_pair(MatchModel& model, const PromptInstance& instance) {
  const Var& table = model.backbone.token_embeddings();
  Var seq = gather_rows(table, instance.token_ids);

  PairForward out;
  if (model.matcher_config.use_soft_tokens && model.soft_config.aspect_count > 0 &&
      !instance.soft_positions_left.empty()) {
    // an empty side still gets soft tokens: encode the pad token
    auto encode_side = [&](const std::vector<int>& entity_ids,
                           const std::vector<int>& columns) {
      std::vector<int> ids = entity_ids;
      std::vector<int> cols = columns;
      if (ids.empty()) {
        ids.push_back(model.tokenizer.token_id(std::string(kPadMarker)));
        cols.push_back(0);
      }
      Var encoded = encode_tokens(ids, cols, model.soft_config, model.soft, table);
      return extract_aspects(encoded, model.soft_config, model.soft);
    };
    AspectExtraction left = encode_side(instance.left_entity_tokens, instance.left_columns);
    AspectExtraction right = encode_side(instance.right_entity_tokens, instance.right_columns);
    seq = inject_soft_tokens(seq, instance.soft_positions_left, left.embeddings);
    seq = inject_soft_tokens(seq, instance.soft_positions_right, right.embeddings);
    out.left_soft = left.embeddings;
    out.right_soft = right.embeddings;
    out.left_attention = left.attention.value();
    out.right_attention = right.attention.value();
  }

  Var logits = model.backbone.mask_logits(seq, instance.mask_position);
  Var probs = softmax_rows(logits);

  std::vector<int> six = model.match_word_ids;
  six.insert(six.end(), model.mismatch_word_ids.begin(), model.mismatch_word_ids.end());
  out.word_probs = gather_cols_row(probs, six);
  out.p_match = verbalize_probs(probs, model.match_word_ids, model.mismatch_word_ids);
  return out;
}

MatchPrediction predict(MatchModel& model, const PromptInstance& instance) {
  PairForward fwd = forward_pair(model, instance);
  MatchPrediction pred;
  pred.p_match = fwd.p_match.item();
  pred.label = pred.p_match >= 0.5 ? 1 : 0;
  const Mat& six = fwd.word_probs.value();
  const size_t n_match = model.match_word_ids.size();
  for (size_t i = 0; i < n_match; ++i)
    pred.match_word_scores.push_back(six(0, static_cast<Eigen::Index>(i)));
  for (Eigen::Index i = static_cast<Eigen::Index>(n_match); i < six.cols(); ++i)
    pred.mismatch_word_scores.push_back(six(0, i));
  return pred;
}

}  // namespace gem
