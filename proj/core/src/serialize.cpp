#include "gem/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gem {

using ojson = nlohmann::ordered_json;

std::string_view to_string(TemplateOrigin o) {
  switch (o) {
    case TemplateOrigin::kManual: return "manual";
    case TemplateOrigin::kParaphrased: return "paraphrased";
    case TemplateOrigin::kBasic: return "basic";
  }
  return "?";
}

std::optional<TemplateOrigin> template_origin_from_string(std::string_view s) {
  if (s == "manual") return TemplateOrigin::kManual;
  if (s == "paraphrased") return TemplateOrigin::kParaphrased;
  if (s == "basic") return TemplateOrigin::kBasic;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Template pattern segmentation
// ---------------------------------------------------------------------------

namespace {

struct PatternPiece {
  std::string literal;  // literal before the slot (maybe empty)
  std::string slot;     // empty for the trailing piece
};

// Splits "{a} is {b}." into [("", a), (" is ", b), (".", "")].
std::vector<PatternPiece> split_pattern(const std::string& pattern) {
  std::vector<PatternPiece> pieces;
  std::string literal;
  size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] == '{') {
      size_t close = pattern.find('}', i + 1);
      if (close == std::string::npos) {
        literal += pattern[i++];
        continue;
      }
      pieces.push_back({literal, pattern.substr(i + 1, close - i - 1)});
      literal.clear();
      i = close + 1;
    } else {
      literal += pattern[i++];
    }
  }
  pieces.push_back({literal, ""});
  return pieces;
}

}  // namespace

void PromptTemplate::validate() const {
  auto pieces = split_pattern(pattern);
  std::vector<std::string> found;
  for (const auto& p : pieces)
    if (!p.slot.empty()) found.push_back(p.slot);
  if (found.size() != slots.size())
    throw ParseError("template '" + name + "': pattern has " + std::to_string(found.size()) +
                     " placeholders but " + std::to_string(slots.size()) + " slots declared");
  for (const auto& s : slots) {
    if (std::count(found.begin(), found.end(), s) != 1)
      throw ParseError("template '" + name + "': slot '" + s +
                       "' must appear exactly once in the pattern");
  }
}

// ---------------------------------------------------------------------------
// Value rendering
// ---------------------------------------------------------------------------

std::string render_value_natural(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::kMissing:
      return std::string(kPadMarker);
    case Value::Kind::kText:
      return v.text_value().empty() ? std::string(kPadMarker) : v.text_value();
    case Value::Kind::kMap: {
      std::string out;
      bool first = true;
      for (const auto& [k, c] : v.map_items()) {
        if (!first) out += ", ";
        first = false;
        out += "the " + k + " is " + render_value_natural(c);
      }
      return out;
    }
    case Value::Kind::kList: {
      std::string out;
      bool first = true;
      for (const auto& c : v.list_items()) {
        if (!first) out += ", ";
        first = false;
        out += render_value_natural(c);
      }
      return out;
    }
  }
  return {};
}

namespace {

std::string render_value_ditto(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::kMissing:
      return std::string(kPadMarker);
    case Value::Kind::kText:
      return v.text_value().empty() ? std::string(kPadMarker) : v.text_value();
    case Value::Kind::kMap: {
      std::string out;
      bool first = true;
      for (const auto& [k, c] : v.map_items()) {
        if (!first) out += ' ';
        first = false;
        out += "[COL] " + k + " [VAL]";
        std::string rendered = render_value_ditto(c);
        if (!rendered.empty()) out += ' ' + rendered;
      }
      return out;
    }
    case Value::Kind::kList: {
      std::string out;
      bool first = true;
      for (const auto& c : v.list_items()) {
        if (!first) out += ", ";
        first = false;
        out += render_value_ditto(c);
      }
      return out;
    }
  }
  return {};
}

// Top-level items of an entity as (key, value) pairs, or nullopt when the
// entity has no keyed top level (textual, or a semi-structured list root).
std::optional<std::vector<std::pair<std::string, Value>>> top_level_items(const Entity& e) {
  if (e.shape == EntityShape::kStructured) return e.attrs;
  if (e.shape == EntityShape::kSemiStructured && e.tree.kind() == Value::Kind::kMap)
    return e.tree.map_items();
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Ditto serialization
// ---------------------------------------------------------------------------

std::vector<Fragment> serialize_ditto_fragments(const Entity& e) {
  std::vector<Fragment> frags;
  if (e.shape == EntityShape::kTextual) {
    if (!e.text.empty()) frags.push_back({e.text, 0});
    return frags;
  }
  auto items = top_level_items(e);
  if (!items) {
    // semi-structured list root: render as a joined list, single column
    std::string r = render_value_ditto(e.tree);
    if (!r.empty()) frags.push_back({r, 0});
    return frags;
  }
  int col = 0;
  for (const auto& [k, v] : *items) {
    std::string piece = (col > 0 ? " " : "");
    piece += "[COL] " + k + " [VAL]";
    std::string rendered = render_value_ditto(v);
    if (!rendered.empty()) piece += ' ' + rendered;
    frags.push_back({piece, col++});
  }
  return frags;
}

// Fragments carry their own separators; the canonical string form is plain
// concatenation.
std::string fragments_to_string(const std::vector<Fragment>& frags) {
  std::string out;
  for (const auto& f : frags) out += f.text;
  return out;
}

std::string serialize_ditto(const Entity& e) {
  return fragments_to_string(serialize_ditto_fragments(e));
}

// ---------------------------------------------------------------------------
// Natural-language serialization
// ---------------------------------------------------------------------------

std::map<std::string, std::string> template_values(const Entity& e, const PromptTemplate& t) {
  std::map<std::string, std::string> out;
  auto items = top_level_items(e);
  if (!items) return out;
  for (const auto& slot : t.slots) {
    for (const auto& [k, v] : *items) {
      if (k == slot) {
        if (!v.is_missing()) out[slot] = render_value_natural(v);
        break;
      }
    }
  }
  return out;
}

std::string fill_template(const PromptTemplate& t,
                          const std::map<std::string, std::string>& values) {
  std::string out;
  for (const auto& piece : split_pattern(t.pattern)) {
    out += piece.literal;
    if (!piece.slot.empty()) {
      auto it = values.find(piece.slot);
      out += it == values.end() ? std::string(kPadMarker) : it->second;
    }
  }
  return out;
}

std::vector<Fragment> serialize_natural_fragments(const Entity& e, const PromptTemplate* t) {
  std::vector<Fragment> frags;
  if (e.shape == EntityShape::kTextual) {
    if (!e.text.empty()) frags.push_back({e.text, 0});
    return frags;
  }
  if (t != nullptr) {
    // Template sentences are one unit; COL spans apply to columnar forms.
    frags.push_back({fill_template(*t, template_values(e, *t)), 0});
    return frags;
  }
  auto items = top_level_items(e);
  if (!items) {
    std::string r = render_value_natural(e.tree);
    if (!r.empty()) frags.push_back({r, 0});
    return frags;
  }
  int col = 0;
  for (const auto& [k, v] : *items) {
    std::string piece = (col > 0 ? ", " : "");
    piece += "the " + k + " is " + render_value_natural(v);
    frags.push_back({piece, col++});
  }
  return frags;
}

std::string serialize_natural(const Entity& e, const PromptTemplate* t) {
  return fragments_to_string(serialize_natural_fragments(e, t));
}

// ---------------------------------------------------------------------------
// Parse-back
// ---------------------------------------------------------------------------

std::optional<std::map<std::string, std::string>> parse_filled(const std::string& text,
                                                               const PromptTemplate& t) {
  auto pieces = split_pattern(t.pattern);
  std::map<std::string, std::string> values;
  size_t pos = 0;
  for (size_t i = 0; i < pieces.size(); ++i) {
    const auto& piece = pieces[i];
    if (!piece.literal.empty()) {
      if (i == 0) {
        if (text.compare(0, piece.literal.size(), piece.literal) != 0) return std::nullopt;
        pos = piece.literal.size();
      } else {
        size_t found = text.find(piece.literal, pos);
        if (found == std::string::npos) return std::nullopt;
        // capture for the slot preceding this literal
        values[pieces[i - 1].slot] = text.substr(pos, found - pos);
        pos = found + piece.literal.size();
      }
    } else if (i > 0) {
      // empty literal between two slots (or before a trailing slot): the
      // previous slot captures nothing here; the trailing piece handles the
      // final capture below
      if (!piece.slot.empty()) values[pieces[i - 1].slot] = "";
    }
    if (piece.slot.empty()) {
      // trailing piece: the slot before it (if any) takes the rest
      if (i > 0 && !pieces[i - 1].slot.empty() && piece.literal.empty()) {
        values[pieces[i - 1].slot] = text.substr(pos);
        pos = text.size();
      }
      break;
    }
  }
  if (pos != text.size()) return std::nullopt;
  for (const auto& s : t.slots)
    if (values.find(s) == values.end()) return std::nullopt;
  return values;
}

// ---------------------------------------------------------------------------
// Augmentation suffix
// ---------------------------------------------------------------------------

std::string augmented_suffix(const AugmentationRecord& rec) {
  std::string out;
  bool first = true;
  for (const auto& [k, v] : rec.values) {
    if (!first) out += ", ";
    first = false;
    out += "the " + k + " is " + (v.empty() ? std::string(kPadMarker) : v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

TemplateRegistry TemplateRegistry::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open template registry: " + path);
  TemplateRegistry reg;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson j = ojson::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw ParseError("registry " + path + " line " + std::to_string(line_no) +
                       ": malformed JSON");
    PromptTemplate t;
    t.name = j.value("name", "");
    t.pattern = j.value("pattern", "");
    if (j.contains("slots"))
      for (const auto& s : j["slots"]) t.slots.push_back(s.get<std::string>());
    auto origin = template_origin_from_string(j.value("origin", "manual"));
    if (!origin)
      throw ParseError("registry " + path + " line " + std::to_string(line_no) +
                       ": unknown origin '" + j.value("origin", "") + "'");
    t.origin = *origin;
    t.validate();
    reg.templates_.push_back(std::move(t));
  }
  return reg;
}

void TemplateRegistry::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write template registry: " + path);
  for (const auto& t : templates_) {
    ojson j;
    j["name"] = t.name;
    j["slots"] = t.slots;
    j["pattern"] = t.pattern;
    j["origin"] = std::string(to_string(t.origin));
    out << j.dump() << '\n';
  }
}

const PromptTemplate* TemplateRegistry::find(const std::string& name) const {
  for (const auto& t : templates_)
    if (t.name == name) return &t;
  return nullptr;
}

void TemplateRegistry::upsert(PromptTemplate t) {
  t.validate();
  for (auto& existing : templates_) {
    if (existing.name == t.name) {
      existing = std::move(t);
      return;
    }
  }
  templates_.push_back(std::move(t));
}

}  // namespace gem
