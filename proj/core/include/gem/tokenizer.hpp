#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "gem/serialize.hpp"

namespace gem {

inline constexpr const char* kMaskToken = "[MASK]";
inline constexpr const char* kUnkToken = "[UNK]";

// Placeholder token for the k-th soft aspect, 1-based: "[S_1]", "[S_2]", ...
std::string soft_token_name(int k);

// Word-level tokenizer: whitespace split with boundary punctuation peeled
// into separate tokens. Bracketed specials like [MASK], [COL], [S_1] and
// <pad> stay whole.
class WordTokenizer {
 public:
  WordTokenizer();

  static std::vector<std::string> split(const std::string& text);

  // Vocabulary building: unknown words map to [UNK] after freezing.
  int add_token(const std::string& tok);
  void add_text(const std::string& text);
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  int token_id(const std::string& tok) const;  // [UNK] id when absent
  bool has_token(const std::string& tok) const;
  const std::string& token_name(int id) const;
  int vocab_size() const { return static_cast<int>(id_to_token_.size()); }
  int unk_id() const { return unk_id_; }
  int mask_id() const;

  std::vector<int> encode(const std::string& text) const;
  // Tokenizes fragments and reports each token's source column.
  void encode_fragments(const std::vector<Fragment>& frags, std::vector<int>& ids,
                        std::vector<int>& columns) const;

  const std::vector<std::string>& vocabulary() const { return id_to_token_; }
  static WordTokenizer from_vocabulary(const std::vector<std::string>& vocab);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  int unk_id_ = 0;
  bool frozen_ = false;
};

}  // namespace gem
