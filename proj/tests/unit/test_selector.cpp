#include "doctest.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "gem/selector.hpp"
#include "test_helpers.hpp"

using namespace gem;

TEST_SUITE("selector") {

TEST_CASE("a coin-flip prediction scores -ln 2 under negative entropy") {
  CHECK(uncertainty_score({0.5}, UncertaintyMetric::kNegEntropy) ==
        doctest::Approx(-std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("a degenerate distribution is maximally confident under both metrics") {
  CHECK(uncertainty_score({1.0}, UncertaintyMetric::kNegEntropy) == doctest::Approx(0.0));
  CHECK(uncertainty_score({1.0}, UncertaintyMetric::kMaxProb) == doctest::Approx(1.0));
  CHECK(uncertainty_score({0.0}, UncertaintyMetric::kNegEntropy) == doctest::Approx(0.0));
}

TEST_CASE("the score is the max over candidate predictions") {
  CHECK(uncertainty_score({0.9, 0.6}, UncertaintyMetric::kMaxProb) ==
        doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("an empty candidate list is an error") {
  CHECK_THROWS_AS(uncertainty_score({}, UncertaintyMetric::kMaxProb),
                  std::invalid_argument);
}

TEST_CASE("metric ranges hold for random predictions") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double p = dist(rng);
    const double mp = pair_confidence(p, UncertaintyMetric::kMaxProb);
    CHECK(mp >= 0.5);
    CHECK(mp <= 1.0);
    const double ne = pair_confidence(p, UncertaintyMetric::kNegEntropy);
    CHECK(ne >= -std::log(2.0) - 1e-12);
    CHECK(ne <= 0.0);
  }
}

TEST_CASE("gate boundary behavior at plus/minus infinity") {
  std::map<std::string, double> scores = {{"a", -0.1}, {"b", 0.7}, {"c", 0.99}};
  CHECK(gate(scores, -std::numeric_limits<double>::infinity()).empty());
  CHECK(gate(scores, std::numeric_limits<double>::infinity()).size() == scores.size());
}

TEST_CASE("gate grows monotonically with tau and excludes ties") {
  std::map<std::string, double> scores = {{"a", 0.1}, {"b", 0.5}, {"c", 0.9}};
  size_t prev = 0;
  for (double tau : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.1}) {
    auto selected = gate(scores, tau);
    CHECK(selected.size() >= prev);
    prev = selected.size();
  }
  // strict inequality: score == tau stays unselected
  CHECK(gate(scores, 0.5) == std::set<std::string>{"a"});
}

TEST_CASE("score_entities reads candidate predictions in either orientation") {
  std::map<std::string, std::vector<std::string>> candidates = {
      {"L1", {"R1", "R2"}},
      {"L2", {"R2"}},
      {"L3", {"R3"}},
  };
  std::vector<PredictionRow> preds = {
      {"L1", "R1", 0.9, 1},
      {"R2", "L1", 0.6, 1},  // reversed orientation
      {"L2", "R2", 0.5, 1},
  };
  std::vector<std::string> missing;
  auto scores = score_entities(candidates, preds, UncertaintyMetric::kMaxProb, &missing);
  REQUIRE(scores.count("L1") == 1);
  CHECK(scores["L1"] == doctest::Approx(0.9));
  CHECK(scores["L2"] == doctest::Approx(0.5));
  CHECK(missing == std::vector<std::string>{"L3"});
}

TEST_CASE("prediction dumps round trip") {
  test::TempDir tmp;
  std::vector<PredictionRow> rows = {{"L1", "R1", 0.75, 1}, {"L2", "R2", 0.25, 0}};
  write_predictions(tmp.file("preds.jsonl"), rows);
  auto loaded = read_predictions(tmp.file("preds.jsonl"));
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].left == "L1");
  CHECK(loaded[0].p_match == doctest::Approx(0.75));
  CHECK(loaded[1].label == 0);
}

TEST_CASE("scores csv lists every entity with its selection bit") {
  test::TempDir tmp;
  std::map<std::string, double> scores = {{"a", 0.2}, {"b", 0.8}};
  write_scores_csv(tmp.file("scores.csv"), scores, {"a"});
  std::ifstream in(tmp.file("scores.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "entity_id,score,selected");
  std::getline(in, line);
  CHECK(line.substr(0, 2) == "a,");
  CHECK(line.back() == '1');
  std::getline(in, line);
  CHECK(line.back() == '0');
}

}  // TEST_SUITE
