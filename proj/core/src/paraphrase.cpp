#include "gem/paraphrase.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace gem {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// FixtureTranslationBackend
// ---------------------------------------------------------------------------

namespace {

std::map<std::string, std::vector<ScoredText>> read_direction(const ojson& j) {
  std::map<std::string, std::vector<ScoredText>> out;
  for (const auto& [text, cands] : j.items()) {
    std::vector<ScoredText> list;
    for (const auto& c : cands)
      list.push_back({c.at("text").get<std::string>(), c.value("logprob", 0.0)});
    out[text] = std::move(list);
  }
  return out;
}

}  // namespace

FixtureTranslationBackend::FixtureTranslationBackend(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open translation fixture: " + path);
  ojson j = ojson::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw std::runtime_error("malformed translation fixture: " + path);
  pivot_ = j.value("pivot", "de");
  if (j.contains("forward")) forward_ = read_direction(j["forward"]);
  if (j.contains("backward")) backward_ = read_direction(j["backward"]);
}

namespace {

std::vector<ScoredText> take_beam(const std::map<std::string, std::vector<ScoredText>>& table,
                                  const std::string& text, int beam_width) {
  auto it = table.find(text);
  if (it == table.end()) return {};
  std::vector<ScoredText> out = it->second;
  if (static_cast<int>(out.size()) > beam_width) out.resize(static_cast<size_t>(beam_width));
  return out;
}

}  // namespace

std::vector<ScoredText> FixtureTranslationBackend::forward(const std::string& text,
                                                           int beam_width) {
  return take_beam(forward_, text, beam_width);
}

std::vector<ScoredText> FixtureTranslationBackend::backward(const std::string& text,
                                                            int beam_width) {
  return take_beam(backward_, text, beam_width);
}

// ---------------------------------------------------------------------------
// Template mining
// ---------------------------------------------------------------------------

namespace {

size_t count_occurrences(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return 0;
  size_t count = 0;
  size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

// Recovers a template from a back-translated filled sentence by replacing
// each known slot value (longest first) with its placeholder; fails when a
// value is absent or ambiguous.
std::optional<std::string> template_from_sentence(
    const std::string& sentence, const std::vector<std::pair<std::string, std::string>>&
                                     slot_values /* slot, value */) {
  std::string working = sentence;
  std::vector<std::pair<std::string, std::string>> ordered = slot_values;
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return a.second.size() > b.second.size();
  });
  for (const auto& [slot, value] : ordered) {
    if (value.empty()) return std::nullopt;
    if (count_occurrences(working, value) != 1) return std::nullopt;
    const size_t at = working.find(value);
    working.replace(at, value.size(), "\x01" + slot + "\x01");
  }
  // placeholder markers -> brace syntax
  std::string pattern;
  bool inside = false;
  for (char c : working) {
    if (c == '\x01') {
      pattern += inside ? '}' : '{';
      inside = !inside;
    } else {
      pattern += c;
    }
  }
  return pattern;
}

}  // namespace

ParaphraseResult paraphrase_template(const PromptTemplate& t,
                                     const std::vector<Entity>& corpus, int beam_width,
                                     TranslationBackend& backend) {
  t.validate();
  if (beam_width < 1) throw std::invalid_argument("paraphrase_template: beam width must be >= 1");

  ParaphraseResult result;
  result.result = t;
  if (!backend.available()) {
    result.backend_unavailable = true;
    return result;
  }

  std::map<std::string, double> scores;  // pattern -> summed generation probability

  for (const auto& e : corpus) {
    auto values = template_values(e, t);
    std::vector<std::pair<std::string, std::string>> slot_values;
    for (const auto& slot : t.slots) {
      auto it = values.find(slot);
      slot_values.emplace_back(slot,
                               it == values.end() ? std::string(kPadMarker) : it->second);
    }
    const std::string filled = fill_template(t, values);

    for (const auto& pivot : backend.forward(filled, beam_width)) {
      for (const auto& back : backend.backward(pivot.text, beam_width)) {
        ++result.candidates_seen;
        const double prob = std::exp(pivot.logprob + back.logprob);

        auto pattern = template_from_sentence(back.text, slot_values);
        if (!pattern) continue;
        PromptTemplate candidate;
        candidate.name = t.name;
        candidate.slots = t.slots;
        candidate.pattern = *pattern;
        candidate.origin = TemplateOrigin::kParaphrased;
        try {
          candidate.validate();
        } catch (const ParseError&) {
          continue;
        }
        // closure under parse_filled on this entity's values
        auto reparsed = parse_filled(fill_template(candidate, values), candidate);
        if (!reparsed) continue;
        bool round_trip = true;
        for (const auto& [slot, value] : slot_values)
          if ((*reparsed)[slot] != value) round_trip = false;
        if (!round_trip) continue;

        scores[candidate.pattern] += prob;
      }
    }
  }

  result.survivors = scores.size();
  if (scores.empty()) {
    result.fallback = true;
    return result;
  }

  // highest summed score; ties break on lexicographic pattern order (the map
  // iterates patterns in ascending order, so strict > keeps the smaller)
  std::string best_pattern;
  double best_score = -1.0;
  for (const auto& [pattern, score] : scores) {
    if (score > best_score) {
      best_score = score;
      best_pattern = pattern;
    }
  }

  result.result.pattern = best_pattern;
  result.result.origin = TemplateOrigin::kParaphrased;
  result.score = best_score;
  return result;
}

}  // namespace gem
