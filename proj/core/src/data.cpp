#include "gem/data.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gem {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Value
// ---------------------------------------------------------------------------

Value Value::text(std::string s, bool quoted) {
  Value v;
  v.kind_ = Kind::kText;
  v.text_ = std::move(s);
  v.quoted_ = quoted;
  return v;
}

Value Value::missing() { return Value{}; }

Value Value::map(std::vector<std::pair<std::string, Value>> items) {
  Value v;
  v.kind_ = Kind::kMap;
  v.map_ = std::move(items);
  return v;
}

Value Value::list(std::vector<Value> items) {
  Value v;
  v.kind_ = Kind::kList;
  v.list_ = std::move(items);
  return v;
}

const std::string& Value::text_value() const {
  if (kind_ != Kind::kText) throw std::logic_error("Value: not a text value");
  return text_;
}

const std::vector<std::pair<std::string, Value>>& Value::map_items() const {
  if (kind_ != Kind::kMap) throw std::logic_error("Value: not a map value");
  return map_;
}

const std::vector<Value>& Value::list_items() const {
  if (kind_ != Kind::kList) throw std::logic_error("Value: not a list value");
  return list_;
}

int Value::depth() const {
  switch (kind_) {
    case Kind::kMissing:
    case Kind::kText:
      return 0;
    case Kind::kMap: {
      int d = 0;
      for (const auto& [k, v] : map_) d = std::max(d, v.depth());
      return 1 + d;
    }
    case Kind::kList: {
      int d = 0;
      for (const auto& v : list_) d = std::max(d, v.depth());
      return 1 + d;
    }
  }
  return 0;
}

bool Value::operator==(const Value& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case Kind::kMissing: return true;
    case Kind::kText: return text_ == other.text_ && quoted_ == other.quoted_;
    case Kind::kMap: return map_ == other.map_;
    case Kind::kList: return list_ == other.list_;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Entity
// ---------------------------------------------------------------------------

std::string_view to_string(EntityShape shape) {
  switch (shape) {
    case EntityShape::kStructured: return "structured";
    case EntityShape::kSemiStructured: return "semi_structured";
    case EntityShape::kTextual: return "textual";
  }
  return "?";
}

std::optional<EntityShape> shape_from_string(std::string_view s) {
  if (s == "structured") return EntityShape::kStructured;
  if (s == "semi_structured" || s == "semi") return EntityShape::kSemiStructured;
  if (s == "textual" || s == "text") return EntityShape::kTextual;
  return std::nullopt;
}

bool Entity::empty() const {
  switch (shape) {
    case EntityShape::kStructured: return attrs.empty();
    case EntityShape::kSemiStructured:
      return tree.is_missing() ||
             (tree.kind() == Value::Kind::kMap && tree.map_items().empty()) ||
             (tree.kind() == Value::Kind::kList && tree.list_items().empty());
    case EntityShape::kTextual: return text.empty();
  }
  return true;
}

namespace {

void check_unique_keys(const std::vector<std::pair<std::string, Value>>& items,
                       const std::string& id) {
  std::set<std::string> seen;
  for (const auto& [k, v] : items) {
    if (!seen.insert(k).second)
      throw ParseError("entity '" + id + "': duplicate key '" + k + "'");
  }
}

void check_tree_keys(const Value& v, const std::string& id) {
  if (v.kind() == Value::Kind::kMap) {
    check_unique_keys(v.map_items(), id);
    for (const auto& [k, c] : v.map_items()) check_tree_keys(c, id);
  } else if (v.kind() == Value::Kind::kList) {
    for (const auto& c : v.list_items()) check_tree_keys(c, id);
  }
}

}  // namespace

void Entity::validate() const {
  const bool has_attrs = !attrs.empty();
  const bool has_tree = !tree.is_missing();
  const bool has_text = !text.empty();
  switch (shape) {
    case EntityShape::kStructured:
      if (has_tree || has_text)
        throw ParseError("entity '" + id + "': structured shape with tree/text populated");
      check_unique_keys(attrs, id);
      for (const auto& [k, v] : attrs)
        if (!v.is_scalar())
          throw ParseError("entity '" + id + "': structured shape with nested value at '" + k + "'");
      break;
    case EntityShape::kSemiStructured:
      if (has_attrs || has_text)
        throw ParseError("entity '" + id + "': semi_structured shape with attrs/text populated");
      if (tree.depth() < 1)
        throw ParseError("entity '" + id + "': semi_structured tree must have depth >= 1");
      check_tree_keys(tree, id);
      break;
    case EntityShape::kTextual:
      if (has_attrs || has_tree)
        throw ParseError("entity '" + id + "': textual shape with attrs/tree populated");
      break;
  }
}

// ---------------------------------------------------------------------------
// JSON parsing / writing
// ---------------------------------------------------------------------------

namespace {

Value value_from_json(const ojson& j) {
  switch (j.type()) {
    case ojson::value_t::string:
      return Value::text(j.get<std::string>(), /*quoted=*/true);
    case ojson::value_t::null:
      return Value::missing();
    case ojson::value_t::object: {
      std::vector<std::pair<std::string, Value>> items;
      items.reserve(j.size());
      for (const auto& [k, v] : j.items()) items.emplace_back(k, value_from_json(v));
      return Value::map(std::move(items));
    }
    case ojson::value_t::array: {
      std::vector<Value> items;
      items.reserve(j.size());
      for (const auto& v : j) items.push_back(value_from_json(v));
      return Value::list(std::move(items));
    }
    default:
      // numbers and bools keep their canonical lexeme, re-emitted raw
      return Value::text(j.dump(), /*quoted=*/false);
  }
}

bool is_flat_object(const ojson& j) {
  for (const auto& [k, v] : j.items()) {
    (void)k;
    if (v.is_object() || v.is_array()) return false;
  }
  return true;
}

void write_json_string(std::string& out, const std::string& s) {
  out += ojson(s).dump();
}

void write_value_json(std::string& out, const Value& v) {
  switch (v.kind()) {
    case Value::Kind::kMissing:
      out += "null";
      break;
    case Value::Kind::kText:
      if (v.quoted()) {
        write_json_string(out, v.text_value());
      } else {
        out += v.text_value();
      }
      break;
    case Value::Kind::kMap: {
      out += '{';
      bool first = true;
      for (const auto& [k, c] : v.map_items()) {
        if (!first) out += ',';
        first = false;
        write_json_string(out, k);
        out += ':';
        write_value_json(out, c);
      }
      out += '}';
      break;
    }
    case Value::Kind::kList: {
      out += '[';
      bool first = true;
      for (const auto& c : v.list_items()) {
        if (!first) out += ',';
        first = false;
        write_value_json(out, c);
      }
      out += ']';
      break;
    }
  }
}

std::string location(long line_no, const std::string& id) {
  std::ostringstream os;
  if (line_no >= 0) os << "line " << line_no;
  if (!id.empty()) os << (line_no >= 0 ? " " : "") << "(id '" << id << "')";
  if (os.str().empty()) os << "record";
  return os.str();
}

}  // namespace

Entity parse_entity(const std::string& json_line, std::optional<EntityShape> shape_hint,
                    long line_no) {
  ojson j = ojson::parse(json_line, nullptr, false);
  if (j.is_discarded())
    throw ParseError("malformed JSON at " + location(line_no, ""));
  if (!j.is_object() || !j.contains("id") || !j.contains("content"))
    throw ParseError("record at " + location(line_no, "") +
                     " must be an object with 'id' and 'content'");
  if (!j["id"].is_string())
    throw ParseError("record at " + location(line_no, "") + ": 'id' must be a string");

  Entity e;
  e.id = j["id"].get<std::string>();
  const ojson& content = j["content"];

  if (content.is_string()) {
    if (shape_hint && *shape_hint != EntityShape::kTextual)
      throw ParseError(location(line_no, e.id) + ": string content cannot be " +
                       std::string(to_string(*shape_hint)));
    e.shape = EntityShape::kTextual;
    e.text = content.get<std::string>();
  } else if (content.is_object()) {
    const bool flat = is_flat_object(content);
    EntityShape shape = flat ? EntityShape::kStructured : EntityShape::kSemiStructured;
    if (shape_hint) {
      if (*shape_hint == EntityShape::kTextual)
        throw ParseError(location(line_no, e.id) + ": object content cannot be textual");
      if (*shape_hint == EntityShape::kStructured && !flat)
        throw ParseError(location(line_no, e.id) +
                         ": nested content cannot be forced structured");
      shape = *shape_hint;
    }
    e.shape = shape;
    if (shape == EntityShape::kStructured) {
      for (const auto& [k, v] : content.items())
        e.attrs.emplace_back(k, value_from_json(v));
    } else {
      e.tree = value_from_json(content);
    }
  } else {
    throw ParseError(location(line_no, e.id) + ": 'content' must be an object or a string");
  }

  e.validate();
  return e;
}

std::string entity_content_json(const Entity& e) {
  std::string out;
  switch (e.shape) {
    case EntityShape::kTextual:
      write_json_string(out, e.text);
      break;
    case EntityShape::kStructured:
      write_value_json(out, Value::map(e.attrs));
      break;
    case EntityShape::kSemiStructured:
      write_value_json(out, e.tree);
      break;
  }
  return out;
}

std::string entity_record_json(const Entity& e) {
  std::string out = "{\"id\":";
  write_json_string(out, e.id);
  out += ",\"content\":";
  out += entity_content_json(e);
  out += '}';
  return out;
}

namespace {

void collect_keys_rec(const Value& v, std::set<std::string>& out) {
  if (v.kind() == Value::Kind::kMap) {
    for (const auto& [k, c] : v.map_items()) {
      out.insert(k);
      collect_keys_rec(c, out);
    }
  } else if (v.kind() == Value::Kind::kList) {
    for (const auto& c : v.list_items()) collect_keys_rec(c, out);
  }
}

}  // namespace

std::set<std::string> collect_keys(const Entity& e) {
  std::set<std::string> keys;
  switch (e.shape) {
    case EntityShape::kStructured:
      for (const auto& [k, v] : e.attrs) keys.insert(k);
      break;
    case EntityShape::kSemiStructured:
      collect_keys_rec(e.tree, keys);
      break;
    case EntityShape::kTextual:
      break;
  }
  return keys;
}

// ---------------------------------------------------------------------------
// AugmentationRecord
// ---------------------------------------------------------------------------

std::string_view to_string(AugmentationSource s) {
  switch (s) {
    case AugmentationSource::kLlm: return "llm";
    case AugmentationSource::kCache: return "cache";
    case AugmentationSource::kPadded: return "padded";
  }
  return "?";
}

const std::string* AugmentationRecord::find(const std::string& attr) const {
  for (const auto& [k, v] : values)
    if (k == attr) return &v;
  return nullptr;
}

size_t AugmentationRecord::non_pad_count() const {
  size_t n = 0;
  for (const auto& [k, v] : values)
    if (v != kPadMarker) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

void Dataset::rebuild_index() {
  left_idx_.clear();
  right_idx_.clear();
  for (size_t i = 0; i < left.size(); ++i) left_idx_[left[i].id] = i;
  for (size_t i = 0; i < right.size(); ++i) right_idx_[right[i].id] = i;
}

const Entity* Dataset::find_left(const std::string& id) const {
  auto it = left_idx_.find(id);
  return it == left_idx_.end() ? nullptr : &left[it->second];
}

const Entity* Dataset::find_right(const std::string& id) const {
  auto it = right_idx_.find(id);
  return it == right_idx_.end() ? nullptr : &right[it->second];
}

const Entity* Dataset::find_any(const std::string& id) const {
  if (const Entity* e = find_left(id)) return e;
  return find_right(id);
}

void Dataset::validate() const {
  for (const auto& p : pairs) {
    const bool l = find_left(p.left) != nullptr;
    const bool r = find_right(p.right) != nullptr;
    if (!l) throw ParseError("pair references unknown left entity '" + p.left + "'");
    if (!r) throw ParseError("pair references unknown right entity '" + p.right + "'");
  }
  for (const auto& [id, cands] : candidates) {
    const bool from_left = find_left(id) != nullptr;
    const bool from_right = find_right(id) != nullptr;
    if (!from_left && !from_right)
      throw ParseError("candidates reference unknown entity '" + id + "'");
    for (const auto& c : cands) {
      const Entity* opp = from_left ? find_right(c) : find_left(c);
      if (opp == nullptr)
        throw ParseError("candidate '" + c + "' of entity '" + id +
                         "' is not in the opposite source");
    }
  }
}

// ---------------------------------------------------------------------------
// File IO
// ---------------------------------------------------------------------------

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open file for writing: " + path);
  return out;
}

}  // namespace

std::vector<Entity> read_entities(const std::string& path,
                                  std::optional<EntityShape> shape_hint) {
  auto in = open_in(path);
  std::vector<Entity> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    out.push_back(parse_entity(line, shape_hint, line_no));
  }
  return out;
}

void write_entities(const std::string& path, const std::vector<Entity>& entities) {
  auto out = open_out(path);
  for (const auto& e : entities) out << entity_record_json(e) << '\n';
}

std::vector<MatchPair> read_pairs(const std::string& path) {
  auto in = open_in(path);
  std::vector<MatchPair> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 2 && cols.size() != 3)
      throw ParseError("pairs file " + path + " line " + std::to_string(line_no) +
                       ": expected 2 or 3 tab-separated columns");
    MatchPair p;
    p.left = cols[0];
    p.right = cols[1];
    if (cols.size() == 3) {
      if (cols[2] != "0" && cols[2] != "1")
        throw ParseError("pairs file " + path + " line " + std::to_string(line_no) +
                         ": label must be 0 or 1, got '" + cols[2] + "'");
      p.label = cols[2] == "1" ? 1 : 0;
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_pairs(const std::string& path, const std::vector<MatchPair>& pairs) {
  auto out = open_out(path);
  for (const auto& p : pairs) {
    out << p.left << '\t' << p.right;
    if (p.label) out << '\t' << *p.label;
    out << '\n';
  }
}

std::map<std::string, std::vector<std::string>> read_candidates(const std::string& path) {
  auto in = open_in(path);
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson j = ojson::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("candidates") ||
        !j["id"].is_string() || !j["candidates"].is_array())
      throw ParseError("candidates file " + path + " line " + std::to_string(line_no) +
                       ": expected {\"id\": string, \"candidates\": [string]}");
    std::vector<std::string> cands;
    for (const auto& c : j["candidates"]) {
      if (!c.is_string())
        throw ParseError("candidates file " + path + " line " + std::to_string(line_no) +
                         ": candidate ids must be strings");
      cands.push_back(c.get<std::string>());
    }
    out[j["id"].get<std::string>()] = std::move(cands);
  }
  return out;
}

void write_candidates(const std::string& path,
                      const std::map<std::string, std::vector<std::string>>& candidates) {
  auto out = open_out(path);
  for (const auto& [id, cands] : candidates) {
    std::string line = "{\"id\":";
    write_json_string(line, id);
    line += ",\"candidates\":[";
    bool first = true;
    for (const auto& c : cands) {
      if (!first) line += ',';
      first = false;
      write_json_string(line, c);
    }
    line += "]}";
    out << line << '\n';
  }
}

Dataset load_dataset(const std::string& left_path, const std::string& right_path,
                     const std::string& pairs_path, const std::string& candidates_path) {
  Dataset d;
  d.left = read_entities(left_path);
  d.right = read_entities(right_path);
  if (!pairs_path.empty()) d.pairs = read_pairs(pairs_path);
  if (!candidates_path.empty()) d.candidates = read_candidates(candidates_path);
  d.rebuild_index();
  d.validate();
  return d;
}

}  // namespace gem
