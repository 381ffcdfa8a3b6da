#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gem {

enum class UncertaintyMetric { kNegEntropy, kMaxProb };

std::string_view to_string(UncertaintyMetric m);
std::optional<UncertaintyMetric> uncertainty_metric_from_string(std::string_view s);

struct UncertaintyConfig {
  UncertaintyMetric metric = UncertaintyMetric::kNegEntropy;
  double tau = 0.0;
};

// Confidence of one candidate pair: negative entropy p*ln(p) + (1-p)*ln(1-p)
// (0*ln 0 := 0, range [-ln 2, 0]) or max(p, 1-p) (range [0.5, 1]). Higher
// means more confident.
double pair_confidence(double p_match, UncertaintyMetric metric);

// Score(e) = max over the entity's candidate predictions; errors on an empty
// candidate list.
double uncertainty_score(const std::vector<double>& candidate_p_match,
                         UncertaintyMetric metric);

// Entities whose score falls strictly below tau get augmented.
std::set<std::string> gate(const std::map<std::string, double>& scores, double tau);

// CSV export: entity_id,score,selected (sorted by id).
void write_scores_csv(const std::string& path, const std::map<std::string, double>& scores,
                      const std::set<std::string>& selected);

// Prediction dump rows, JSON-lines {"left","right","p_match","label"}.
struct PredictionRow {
  std::string left;
  std::string right;
  double p_match = 0.0;
  int label = 0;
};

std::vector<PredictionRow> read_predictions(const std::string& path);
void write_predictions(const std::string& path, const std::vector<PredictionRow>& rows);

// Scores for every entity in `candidates` from its candidate-pair
// predictions; entities with no usable prediction are reported in `missing`.
std::map<std::string, double> score_entities(
    const std::map<std::string, std::vector<std::string>>& candidates,
    const std::vector<PredictionRow>& predictions, UncertaintyMetric metric,
    std::vector<std::string>* missing = nullptr);

}  // namespace gem
