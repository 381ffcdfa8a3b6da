#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gem/data.hpp"

namespace gem {

enum class TemplateOrigin { kManual, kParaphrased, kBasic };

std::string_view to_string(TemplateOrigin o);
std::optional<TemplateOrigin> template_origin_from_string(std::string_view s);

// A parameterized natural-language sentence with named {slot} placeholders.
struct PromptTemplate {
  std::string name;
  std::vector<std::string> slots;
  std::string pattern;
  TemplateOrigin origin = TemplateOrigin::kManual;

  // Every declared slot appears exactly once in the pattern and vice versa.
  void validate() const;
};

// One serialized piece of an entity plus the top-level attribute (column) it
// came from; used by the COL position-embedding mode.
struct Fragment {
  std::string text;
  int column = 0;
};

std::string fragments_to_string(const std::vector<Fragment>& frags);

// Renders one attribute value in natural form: maps recurse as
// "the k is v, ...", lists join with ", ", missing renders as <pad>.
std::string render_value_natural(const Value& v);

// "[COL] k1 [VAL] v1 ... [COL] kn [VAL] vn", recursive for nested values;
// textual entities pass through unchanged.
std::string serialize_ditto(const Entity& e);
std::vector<Fragment> serialize_ditto_fragments(const Entity& e);

// Natural-language serialization. With a template, slots fill from the
// entity's top-level attributes (absent/missing -> "<pad>"); without one the
// basic rule "the k1 is v1, ..., the kn is vn" applies recursively. Textual
// entities always return their text verbatim.
std::string serialize_natural(const Entity& e, const PromptTemplate* t = nullptr);
std::vector<Fragment> serialize_natural_fragments(const Entity& e,
                                                  const PromptTemplate* t = nullptr);

// Slot values for a template fill, rendered from the entity's top-level
// attributes. Slots with no matching key are omitted (fill pads them).
std::map<std::string, std::string> template_values(const Entity& e, const PromptTemplate& t);

// Fills the template pattern; slots absent from `values` render as <pad>.
std::string fill_template(const PromptTemplate& t,
                          const std::map<std::string, std::string>& values);

// Recovers slot values by anchoring on the template's literal segments with
// non-greedy capture. Returns nullopt when a literal is absent or out of
// order (parse failure is a normal return, not an error).
std::optional<std::map<std::string, std::string>> parse_filled(const std::string& text,
                                                               const PromptTemplate& t);

// Appends the natural serialization of an augmentation record to an already
// serialized entity ("the a1 is v1, ..." with <pad> for absent values).
std::string augmented_suffix(const AugmentationRecord& rec);

// ---------------------------------------------------------------------------
// Template registry, JSON-lines {"name","slots","pattern","origin"}.
// ---------------------------------------------------------------------------
class TemplateRegistry {
 public:
  static TemplateRegistry load(const std::string& path);
  void save(const std::string& path) const;

  const PromptTemplate* find(const std::string& name) const;
  void upsert(PromptTemplate t);
  const std::vector<PromptTemplate>& templates() const { return templates_; }

 private:
  std::vector<PromptTemplate> templates_;
};

}  // namespace gem
