#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace gem {

// Literal substituted for missing or meaningless attribute values so that
// every serialized prompt keeps the same slot structure.
inline constexpr std::string_view kPadMarker = "<pad>";

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Value: payload of an entity attribute. Scalar text, a nested attribute map,
// a list, or an explicit missing marker (nulls are kept, not dropped).
// ---------------------------------------------------------------------------
class Value {
 public:
  enum class Kind { kMissing, kText, kMap, kList };

  Value() = default;

  static Value text(std::string s, bool quoted = true);
  static Value missing();
  static Value map(std::vector<std::pair<std::string, Value>> items);
  static Value list(std::vector<Value> items);

  Kind kind() const { return kind_; }
  bool is_missing() const { return kind_ == Kind::kMissing; }
  bool is_scalar() const { return kind_ == Kind::kText || kind_ == Kind::kMissing; }

  const std::string& text_value() const;
  // False when the source token was a JSON number or bool; the lexeme is then
  // re-emitted raw so the interchange form round-trips.
  bool quoted() const { return quoted_; }

  const std::vector<std::pair<std::string, Value>>& map_items() const;
  const std::vector<Value>& list_items() const;

  // 0 for scalars; maps/lists are 1 + max depth of children.
  int depth() const;

  bool operator==(const Value& other) const;

 private:
  Kind kind_ = Kind::kMissing;
  bool quoted_ = true;
  std::string text_;
  std::vector<std::pair<std::string, Value>> map_;
  std::vector<Value> list_;
};

// ---------------------------------------------------------------------------
// Entity
// ---------------------------------------------------------------------------
enum class EntityShape { kStructured, kSemiStructured, kTextual };

std::string_view to_string(EntityShape shape);
std::optional<EntityShape> shape_from_string(std::string_view s);

struct Entity {
  std::string id;
  EntityShape shape = EntityShape::kTextual;

  std::vector<std::pair<std::string, Value>> attrs;  // structured
  Value tree;                                        // semi_structured
  std::string text;                                  // textual

  bool empty() const;
  // Enforces: exactly the field matching `shape` is populated, keys unique
  // per attribute map, semi-structured depth >= 1.
  void validate() const;
};

// Parses one JSON-lines record {"id": string, "content": object|string}.
// Shape is inferred (nested map -> semi_structured, flat map -> structured,
// bare string -> textual) unless a hint forces a compatible shape.
Entity parse_entity(const std::string& json_line,
                    std::optional<EntityShape> shape_hint = std::nullopt,
                    long line_no = -1);

// Re-serialization to the interchange format. Structured and semi-structured
// content round-trips bit-exactly for canonically formatted input.
std::string entity_content_json(const Entity& e);
std::string entity_record_json(const Entity& e);

// Set of attribute keys at every nesting level; empty for textual entities.
std::set<std::string> collect_keys(const Entity& e);

// ---------------------------------------------------------------------------
// Pairs, augmentation records, dataset
// ---------------------------------------------------------------------------
struct MatchPair {
  std::string left;
  std::string right;
  std::optional<int> label;  // 1 = match, 0 = non-match
};

enum class AugmentationSource { kLlm, kCache, kPadded };

std::string_view to_string(AugmentationSource s);

struct AugmentationRecord {
  std::string entity_id;
  // attribute -> value or kPadMarker, in plan order; covers exactly the
  // planned attribute list.
  std::vector<std::pair<std::string, std::string>> values;
  std::string raw_response;
  AugmentationSource source = AugmentationSource::kPadded;

  const std::string* find(const std::string& attr) const;
  size_t non_pad_count() const;
};

struct Dataset {
  std::vector<Entity> left;
  std::vector<Entity> right;
  std::vector<MatchPair> pairs;
  // Blocking output: entity id -> candidate ids from the opposite source.
  std::map<std::string, std::vector<std::string>> candidates;
  std::unordered_map<std::string, AugmentationRecord> augmentations;

  void rebuild_index();
  const Entity* find_left(const std::string& id) const;
  const Entity* find_right(const std::string& id) const;
  const Entity* find_any(const std::string& id) const;

  // Referential checks: pair ids resolve to opposite sources, candidates only
  // reference the opposite source. Throws ParseError with the offending id.
  void validate() const;

 private:
  std::unordered_map<std::string, size_t> left_idx_;
  std::unordered_map<std::string, size_t> right_idx_;
};

// ---------------------------------------------------------------------------
// File IO (External interfaces: JSON-lines entities/candidates, TSV pairs)
// ---------------------------------------------------------------------------
std::vector<Entity> read_entities(const std::string& path,
                                  std::optional<EntityShape> shape_hint = std::nullopt);
void write_entities(const std::string& path, const std::vector<Entity>& entities);

std::vector<MatchPair> read_pairs(const std::string& path);
void write_pairs(const std::string& path, const std::vector<MatchPair>& pairs);

std::map<std::string, std::vector<std::string>> read_candidates(const std::string& path);
void write_candidates(const std::string& path,
                      const std::map<std::string, std::vector<std::string>>& candidates);

Dataset load_dataset(const std::string& left_path, const std::string& right_path,
                     const std::string& pairs_path,
                     const std::string& candidates_path = "");

}  // namespace gem
