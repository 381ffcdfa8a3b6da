#include "gem/selector.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace gem {

std::string_view to_string(UncertaintyMetric m) {
  return m == UncertaintyMetric::kNegEntropy ? "neg_entropy" : "max_prob";
}

std::optional<UncertaintyMetric> uncertainty_metric_from_string(std::string_view s) {
  if (s == "neg_entropy" || s == "entropy") return UncertaintyMetric::kNegEntropy;
  if (s == "max_prob" || s == "maxprob") return UncertaintyMetric::kMaxProb;
  return std::nullopt;
}

double pair_confidence(double p_match, UncertaintyMetric metric) {
  if (p_match < 0.0 || p_match > 1.0)
    throw std::invalid_argument("pair_confidence: p_match must be in [0, 1]");
  const double q = 1.0 - p_match;
  if (metric == UncertaintyMetric::kMaxProb) return std::max(p_match, q);
  auto plogp = [](double p) { return p > 0.0 ? p * std::log(p) : 0.0; };
  return plogp(p_match) + plogp(q);
}

double uncertainty_score(const std::vector<double>& candidate_p_match,
                         UncertaintyMetric metric) {
  if (candidate_p_match.empty())
    throw std::invalid_argument("uncertainty_score: empty candidate prediction list");
  double best = -std::numeric_limits<double>::infinity();
  for (double p : candidate_p_match) best = std::max(best, pair_confidence(p, metric));
  return best;
}

std::set<std::string> gate(const std::map<std::string, double>& scores, double tau) {
  std::set<std::string> selected;
  for (const auto& [id, score] : scores)
    if (score < tau) selected.insert(id);
  return selected;
}

void write_scores_csv(const std::string& path, const std::map<std::string, double>& scores,
                      const std::set<std::string>& selected) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scores csv: " + path);
  out << "entity_id,score,selected\n";
  out.precision(17);
  for (const auto& [id, score] : scores)
    out << id << ',' << score << ',' << (selected.count(id) ? 1 : 0) << '\n';
}

std::vector<PredictionRow> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions: " + path);
  std::vector<PredictionRow> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("left") || !j.contains("right") ||
        !j.contains("p_match"))
      throw std::runtime_error("predictions " + path + " line " + std::to_string(line_no) +
                               ": expected {\"left\",\"right\",\"p_match\",\"label\"}");
    PredictionRow row;
    row.left = j["left"].get<std::string>();
    row.right = j["right"].get<std::string>();
    row.p_match = j["p_match"].get<double>();
    row.label = j.value("label", row.p_match >= 0.5 ? 1 : 0);
    out.push_back(std::move(row));
  }
  return out;
}

void write_predictions(const std::string& path, const std::vector<PredictionRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions: " + path);
  out.precision(17);
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["left"] = r.left;
    j["right"] = r.right;
    j["p_match"] = r.p_match;
    j["label"] = r.label;
    out << j.dump() << '\n';
  }
}

std::map<std::string, double> score_entities(
    const std::map<std::string, std::vector<std::string>>& candidates,
    const std::vector<PredictionRow>& predictions, UncertaintyMetric metric,
    std::vector<std::string>* missing) {
  // index predictions by both orientations
  std::map<std::pair<std::string, std::string>, double> by_pair;
  for (const auto& p : predictions) {
    by_pair[{p.left, p.right}] = p.p_match;
    by_pair[{p.right, p.left}] = p.p_match;
  }
  std::map<std::string, double> scores;
  for (const auto& [id, cands] : candidates) {
    std::vector<double> ps;
    for (const auto& c : cands) {
      auto it = by_pair.find({id, c});
      if (it != by_pair.end()) ps.push_back(it->second);
    }
    if (ps.empty()) {
      if (missing != nullptr) missing->push_back(id);
      continue;
    }
    scores[id] = uncertainty_score(ps, metric);
  }
  return scores;
}

}  // namespace gem
