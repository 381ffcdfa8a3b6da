#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gem/checkpoint.hpp"
#include "gem/matcher.hpp"

namespace gem {

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 2e-5;
  int batch_size = 24;
  double ortho_lambda = 1.0;       // weight of the orthogonal regularizer
  double low_resource_ratio = 0.10;
  std::uint64_t seed = 13;
  double weight_decay = 0.01;
  double validation_fraction = 0.10;  // of the training pairs, when no file ships

  void validate() const;
};

// Self-supervised masked-token warm-up for the mini backbone: the stand-in
// for consuming pretrained weights when none are shipped. Uses only the
// unlabeled serialized entities.
struct PretrainConfig {
  int epochs = 0;  // 0 disables the warm-up
  double learning_rate = 1e-3;
  int batch_size = 8;
  double mask_fraction = 0.15;
  std::uint64_t seed = 13;
};

// Returns the final-epoch average masked-token loss.
double pretrain_mlm(MiniLm& backbone, const WordTokenizer& tokenizer,
                    const std::vector<std::vector<int>>& sequences,
                    const PretrainConfig& cfg);

// floor(ratio * |pairs|) pairs sampled uniformly without replacement,
// deterministic per seed; entity collections untouched.
Dataset sample_low_resource(const Dataset& d, double ratio, std::uint64_t seed);

// ‖Emb·Embᵀ − I‖_F / d_s for one entity's soft embeddings (K x d_s).
Var orthogonal_loss(const Var& soft_embeddings, int soft_dim);

// L = L_CE + lambda * L_ortho, with binary cross-entropy over p_match and the
// orthogonal term averaged over the entities in the batch.
Var compute_loss(const std::vector<Var>& p_match, const std::vector<int>& labels,
                 const std::vector<Var>& soft_embeddings, double lambda, int soft_dim);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Positive-class precision/recall/F1; F1 = 0 when P + R = 0.
Metrics compute_metrics(long tp, long fp, long fn);
Metrics evaluate(MatchModel& model, const Dataset& d);
Metrics evaluate(MatchModel& model, const Dataset& d, const std::vector<MatchPair>& pairs);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  Metrics validation;
};

struct TrainOutcome {
  int best_epoch = 0;
  Metrics best_validation;
  std::vector<EpochLog> history;
};

struct TrainerOptions {
  BackboneConfig backbone;
  SoftPromptConfig soft;
  MatcherConfig matcher;
  PretrainConfig pretrain;                          // warm-up when epochs > 0
  const PromptTemplate* prompt_template = nullptr;  // kTemplate serialization
  std::vector<MatchPair> validation_pairs;          // optional explicit split
  std::string metrics_csv_path;                     // per-epoch CSV when set
  std::string checkpoint_path;                      // best-F1 archive when set
  bool log_to_stderr = false;
};

// Prompt+LM tuning: every backbone and prompt parameter updates; the best
// validation-F1 parameter snapshot is restored before returning.
MatchModel train(const Dataset& d, const TrainConfig& cfg, const TrainerOptions& opts,
                 TrainOutcome* outcome = nullptr);

void write_metrics_csv(const std::string& path, const std::vector<EpochLog>& history);

// Hyperparameter enumeration over K / N / position-embedding modes.
struct GridPoint {
  SoftPromptConfig soft;
  TrainOutcome outcome;
};
struct GridResult {
  std::vector<GridPoint> points;
  size_t best_index = 0;
};
GridResult grid_search(const Dataset& d, const TrainConfig& cfg, const TrainerOptions& base,
                       const std::vector<int>& aspect_counts = {1, 2, 4, 8},
                       const std::vector<int>& encoder_layer_counts = {0, 1, 2},
                       const std::vector<PeMode>& pe_modes = {PeMode::kPos});

}  // namespace gem
