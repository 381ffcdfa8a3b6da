#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>

#include "gem/trainer.hpp"
#include "test_helpers.hpp"

using namespace gem;

namespace {

TrainerOptions tiny_options(int soft_tokens = 2, int encoder_layers = 0) {
  TrainerOptions opts;
  opts.backbone.hidden_dim = 32;
  opts.backbone.layers = 2;
  opts.backbone.heads = 2;
  opts.backbone.ffn_dim = 64;
  opts.backbone.max_sequence_length = 96;
  opts.soft.aspect_count = soft_tokens;
  opts.soft.encoder_layers = encoder_layers;
  opts.soft.query_dim = 32;
  opts.soft.value_dim = 32;
  opts.soft.soft_dim = 32;
  opts.soft.pe_mode = PeMode::kPos;
  return opts;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("low-resource sampling takes the floor of the ratio") {
  Dataset d;
  for (int i = 0; i < 321; ++i) {
    Entity l = test::structured_entity("L" + std::to_string(i), {{"a", std::to_string(i)}});
    Entity r = test::structured_entity("R" + std::to_string(i), {{"a", std::to_string(i)}});
    d.left.push_back(l);
    d.right.push_back(r);
    d.pairs.push_back({l.id, r.id, i % 2});
  }
  d.rebuild_index();

  Dataset sampled = sample_low_resource(d, 0.1, 7);
  CHECK(sampled.pairs.size() == 32);  // floor(32.1)
  CHECK(sampled.left.size() == d.left.size());
  CHECK(sampled.right.size() == d.right.size());
}

TEST_CASE("ratio 1.0 keeps every pair") {
  Dataset d = test::synth_duplicate_dataset(4, 4, 3);
  Dataset sampled = sample_low_resource(d, 1.0, 7);
  CHECK(sampled.pairs.size() == d.pairs.size());
}

TEST_CASE("the same seed reproduces the same sample") {
  Dataset d = test::synth_duplicate_dataset(20, 20, 4);
  Dataset s1 = sample_low_resource(d, 0.3, 99);
  Dataset s2 = sample_low_resource(d, 0.3, 99);
  REQUIRE(s1.pairs.size() == s2.pairs.size());
  for (size_t i = 0; i < s1.pairs.size(); ++i) {
    CHECK(s1.pairs[i].left == s2.pairs[i].left);
    CHECK(s1.pairs[i].right == s2.pairs[i].right);
  }
  Dataset s3 = sample_low_resource(d, 0.3, 100);
  bool any_diff = false;
  for (size_t i = 0; i < s1.pairs.size(); ++i)
    any_diff = any_diff || s1.pairs[i].left != s3.pairs[i].left;
  CHECK(any_diff);
}

TEST_CASE("an empty sample is an error") {
  Dataset d = test::synth_duplicate_dataset(2, 2, 5);
  CHECK_THROWS_AS(sample_low_resource(d, 0.1, 7), std::invalid_argument);  // floor(0.4)=0
}

TEST_CASE("orthonormal soft embeddings have zero orthogonal loss") {
  Mat emb = Mat::Zero(2, 4);
  emb(0, 0) = 1.0;
  emb(1, 1) = 1.0;
  CHECK(orthogonal_loss(Var::constant(emb), 4).item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("two identical unit rows give sqrt(2)/d_s") {
  Mat emb = Mat::Zero(2, 4);
  emb(0, 0) = 1.0;
  emb(1, 0) = 1.0;
  CHECK(orthogonal_loss(Var::constant(emb), 4).item() ==
        doctest::Approx(std::sqrt(2.0) / 4.0).epsilon(1e-12));
}

TEST_CASE("orthogonal loss is nonnegative") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Mat emb(3, 5);
    for (Eigen::Index r = 0; r < 3; ++r)
      for (Eigen::Index c = 0; c < 5; ++c) emb(r, c) = dist(rng);
    CHECK(orthogonal_loss(Var::constant(emb), 5).item() >= 0.0);
  }
}

TEST_CASE("orthogonal loss gradient matches finite differences") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat emb(2, 3);
  for (Eigen::Index r = 0; r < 2; ++r)
    for (Eigen::Index c = 0; c < 3; ++c) emb(r, c) = dist(rng);
  Var v = Var::param(emb);

  Var loss = orthogonal_loss(v, 3);
  backward(loss);
  Mat analytic = v.grad();

  const double eps = 1e-6;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < 2; ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) {
      const double keep = v.value()(r, c);
      v.value()(r, c) = keep + eps;
      const double up = orthogonal_loss(v, 3).item();
      v.value()(r, c) = keep - eps;
      const double down = orthogonal_loss(v, 3).item();
      v.value()(r, c) = keep;
      const double fd = (up - down) / (2 * eps);
      const double denom = std::max({1.0, std::abs(fd), std::abs(analytic(r, c))});
      worst = std::max(worst, std::abs(fd - analytic(r, c)) / denom);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("lambda zero reduces the loss to plain cross-entropy") {
  Var p = Var::constant(Mat::Constant(1, 1, 0.8));
  Var emb = Var::constant(Mat::Ones(2, 3));
  Var with = compute_loss({p}, {1}, {emb}, 0.0, 3);
  CHECK(with.item() == doctest::Approx(-std::log(0.8)).epsilon(1e-12));
}

TEST_CASE("compute_loss adds the weighted orthogonal term") {
  Var p = Var::constant(Mat::Constant(1, 1, 0.8));
  Mat emb = Mat::Zero(2, 4);
  emb(0, 0) = 1.0;
  emb(1, 0) = 1.0;
  Var loss = compute_loss({p}, {1}, {Var::constant(emb)}, 2.0, 4);
  CHECK(loss.item() ==
        doctest::Approx(-std::log(0.8) + 2.0 * std::sqrt(2.0) / 4.0).epsilon(1e-10));
}

TEST_CASE("metric edge cases") {
  Metrics perfect = compute_metrics(5, 0, 0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  Metrics none = compute_metrics(0, 0, 3);  // predicted all non-match
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);

  Metrics mixed = compute_metrics(2, 1, 1);
  CHECK(mixed.precision == doctest::Approx(2.0 / 3.0));
  CHECK(mixed.recall == doctest::Approx(2.0 / 3.0));
  CHECK(mixed.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("loss on one repeated pair strictly decreases over the first epochs") {
  Dataset d = test::synth_duplicate_dataset(1, 0, 11);

  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 1;
  cfg.low_resource_ratio = 1.0;
  cfg.validation_fraction = 0.0;
  cfg.seed = 3;

  TrainOutcome outcome;
  train(d, cfg, tiny_options(), &outcome);
  REQUIRE(outcome.history.size() == 5);
  for (size_t i = 1; i < outcome.history.size(); ++i)
    CHECK(outcome.history[i].loss < outcome.history[i - 1].loss);
}

TEST_CASE("a few epochs push held-out duplicates above the match threshold") {
  Dataset d = test::synth_duplicate_dataset(24, 24, 31);
  Dataset val = test::synth_duplicate_dataset(8, 8, 55, "v");
  test::merge_entities(d, val);

  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 8;
  cfg.low_resource_ratio = 1.0;
  cfg.validation_fraction = 0.0;
  cfg.seed = 9;

  TrainerOptions opts = tiny_options();
  opts.backbone.ffn_dim = 64;
  opts.pretrain.epochs = 30;  // token-identity warm-up helps the tiny backbone
  opts.validation_pairs = val.pairs;

  TrainOutcome outcome;
  MatchModel model = train(d, cfg, opts, &outcome);
  CHECK(outcome.best_validation.f1 > 0.8);  // generalizes, not just memorizes

  // held-out duplicates: unseen combinations of seen vocabulary
  Dataset held = test::synth_duplicate_dataset(8, 0, 77, "h");
  PromptBuilder builder(model.tokenizer, model.matcher_config,
                        model.soft_config.aspect_count,
                        model.backbone_config.max_sequence_length);
  int above = 0;
  for (const auto& pair : held.pairs) {
    PromptInstance inst = builder.build(*held.find_left(pair.left),
                                        *held.find_right(pair.right));
    if (predict(model, inst).p_match > 0.5) ++above;
  }
  CHECK(above >= 6);  // 8 held-out duplicate pairs, allow stragglers
}

TEST_CASE("metrics csv and checkpoint round trip") {
  Dataset d = test::synth_duplicate_dataset(6, 6, 13);
  test::TempDir tmp;

  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 2e-3;
  cfg.batch_size = 6;
  cfg.low_resource_ratio = 1.0;
  cfg.validation_fraction = 0.0;
  cfg.seed = 5;

  TrainerOptions opts = tiny_options();
  opts.metrics_csv_path = tmp.file("metrics.csv");
  opts.checkpoint_path = tmp.file("checkpoint.bin");

  TrainOutcome outcome;
  MatchModel model = train(d, cfg, opts, &outcome);

  std::ifstream csv(opts.metrics_csv_path);
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header == "epoch,loss,precision,recall,f1");
  int rows = 0;
  std::string line;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);

  MatchModel loaded = load_checkpoint(opts.checkpoint_path);
  PromptBuilder builder(model.tokenizer, model.matcher_config,
                        model.soft_config.aspect_count,
                        model.backbone_config.max_sequence_length);
  PromptInstance inst = builder.build(d.left[0], d.right[0]);
  CHECK(predict(model, inst).p_match == predict(loaded, inst).p_match);
}

TEST_CASE("training without labeled pairs is an error") {
  Dataset d = test::synth_duplicate_dataset(2, 2, 17);
  for (auto& p : d.pairs) p.label.reset();
  TrainConfig cfg;
  CHECK_THROWS_AS(train(d, cfg, tiny_options()), std::invalid_argument);
}

TEST_CASE("the shipped defaults match the documented recipe") {
  TrainConfig cfg;
  CHECK(cfg.epochs == 30);
  CHECK(cfg.learning_rate == 2e-5);
  CHECK(cfg.batch_size == 24);
  CHECK(cfg.ortho_lambda == 1.0);
  CHECK(cfg.low_resource_ratio == 0.10);

  SoftPromptConfig soft;  // default preset
  CHECK(soft.aspect_count == 4);
  CHECK(soft.encoder_layers == 0);
  CHECK(soft.query_dim == 768);
  CHECK(soft.value_dim == 768);
}

TEST_CASE("the grid driver enumerates configurations and reports the best") {
  Dataset d = test::synth_duplicate_dataset(6, 6, 41);

  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 6;
  cfg.low_resource_ratio = 1.0;
  cfg.validation_fraction = 0.0;
  cfg.seed = 5;

  GridResult grid = grid_search(d, cfg, tiny_options(), {1, 2}, {0}, {PeMode::kPos});
  REQUIRE(grid.points.size() == 2);
  CHECK(grid.points[0].soft.aspect_count == 1);
  CHECK(grid.points[1].soft.aspect_count == 2);
  CHECK(grid.best_index < grid.points.size());
  double best = -1;
  for (const auto& p : grid.points) best = std::max(best, p.outcome.best_validation.f1);
  CHECK(grid.points[grid.best_index].outcome.best_validation.f1 == best);
}

TEST_CASE("validate rejects out-of-range hyperparameters") {
  TrainConfig cfg;
  cfg.low_resource_ratio = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.low_resource_ratio = 0.5;
  cfg.ortho_lambda = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

}  // TEST_SUITE
