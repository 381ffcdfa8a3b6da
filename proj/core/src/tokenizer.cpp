#include "gem/tokenizer.hpp"

#include <cctype>
#include <stdexcept>

namespace gem {

std::string soft_token_name(int k) { return "[S_" + std::to_string(k) + "]"; }

namespace {

bool is_boundary_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case '(': case ')': case '[': case ']': case '{': case '}':
    case '"': case '\'':
      return true;
    default:
      return false;
  }
}

// Tokens like "[MASK]", "[S_1]", "<pad>" are kept whole.
bool is_protected(const std::string& piece) {
  if (piece.size() < 3) return false;
  const char first = piece.front();
  const char last = piece.back();
  return (first == '[' && last == ']') || (first == '<' && last == '>');
}

}  // namespace

std::vector<std::string> WordTokenizer::split(const std::string& text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string piece = text.substr(i, j - i);
    i = j;

    if (is_protected(piece)) {
      out.push_back(std::move(piece));
      continue;
    }
    // peel leading punctuation
    size_t begin = 0;
    while (begin < piece.size() && is_boundary_punct(piece[begin]))
      out.push_back(std::string(1, piece[begin++]));
    // find trailing punctuation run
    size_t end = piece.size();
    while (end > begin && is_boundary_punct(piece[end - 1])) --end;
    if (end > begin) out.push_back(piece.substr(begin, end - begin));
    for (size_t p = end; p < piece.size(); ++p) out.push_back(std::string(1, piece[p]));
  }
  return out;
}

WordTokenizer::WordTokenizer() {
  unk_id_ = add_token(kUnkToken);
  add_token(kMaskToken);
  add_token(std::string(kPadMarker));
}

int WordTokenizer::add_token(const std::string& tok) {
  auto it = token_to_id_.find(tok);
  if (it != token_to_id_.end()) return it->second;
  if (frozen_) throw std::logic_error("WordTokenizer: vocabulary is frozen");
  const int id = static_cast<int>(id_to_token_.size());
  id_to_token_.push_back(tok);
  token_to_id_[tok] = id;
  return id;
}

void WordTokenizer::add_text(const std::string& text) {
  for (auto& tok : split(text)) add_token(tok);
}

int WordTokenizer::token_id(const std::string& tok) const {
  auto it = token_to_id_.find(tok);
  return it == token_to_id_.end() ? unk_id_ : it->second;
}

bool WordTokenizer::has_token(const std::string& tok) const {
  return token_to_id_.find(tok) != token_to_id_.end();
}

const std::string& WordTokenizer::token_name(int id) const {
  if (id < 0 || id >= static_cast<int>(id_to_token_.size()))
    throw std::out_of_range("WordTokenizer: token id out of range");
  return id_to_token_[static_cast<size_t>(id)];
}

int WordTokenizer::mask_id() const { return token_id(kMaskToken); }

std::vector<int> WordTokenizer::encode(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& tok : split(text)) ids.push_back(token_id(tok));
  return ids;
}

void WordTokenizer::encode_fragments(const std::vector<Fragment>& frags,
                                     std::vector<int>& ids, std::vector<int>& columns) const {
  ids.clear();
  columns.clear();
  for (const auto& f : frags) {
    for (const auto& tok : split(f.text)) {
      ids.push_back(token_id(tok));
      columns.push_back(f.column);
    }
  }
}

WordTokenizer WordTokenizer::from_vocabulary(const std::vector<std::string>& vocab) {
  WordTokenizer t;
  t.id_to_token_.clear();
  t.token_to_id_.clear();
  for (const auto& tok : vocab) {
    const int id = static_cast<int>(t.id_to_token_.size());
    t.id_to_token_.push_back(tok);
    t.token_to_id_[tok] = id;
  }
  auto it = t.token_to_id_.find(kUnkToken);
  if (it == t.token_to_id_.end())
    throw std::invalid_argument("WordTokenizer: vocabulary lacks " + std::string(kUnkToken));
  t.unk_id_ = it->second;
  t.frozen_ = true;
  return t;
}

}  // namespace gem
