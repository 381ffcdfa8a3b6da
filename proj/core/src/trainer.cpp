#include "gem/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <new>
#include <numeric>
#include <sstream>

namespace gem {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (learning_rate <= 0) throw std::invalid_argument("TrainConfig: learning rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch size must be >= 1");
  if (ortho_lambda < 0) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
  if (low_resource_ratio <= 0 || low_resource_ratio > 1)
    throw std::invalid_argument("TrainConfig: low-resource ratio must be in (0, 1]");
  if (validation_fraction < 0 || validation_fraction >= 1)
    throw std::invalid_argument("TrainConfig: validation fraction must be in [0, 1)");
}

Dataset sample_low_resource(const Dataset& d, double ratio, std::uint64_t seed) {
  if (ratio <= 0 || ratio > 1)
    throw std::invalid_argument("sample_low_resource: ratio must be in (0, 1]");
  if (d.pairs.empty()) throw std::invalid_argument("sample_low_resource: no labeled pairs");

  const size_t keep = static_cast<size_t>(
      std::floor(ratio * static_cast<double>(d.pairs.size())));
  if (keep == 0)
    throw std::invalid_argument("sample_low_resource: sampled pair set is empty (ratio " +
                                std::to_string(ratio) + " of " +
                                std::to_string(d.pairs.size()) + " pairs)");

  std::vector<size_t> indices(d.pairs.size());
  std::iota(indices.begin(), indices.end(), 0);
  Rng rng(seed);
  std::shuffle(indices.begin(), indices.end(), rng);
  indices.resize(keep);
  std::sort(indices.begin(), indices.end());  // keep the original pair order

  Dataset out;
  out.left = d.left;
  out.right = d.right;
  out.candidates = d.candidates;
  out.augmentations = d.augmentations;
  out.pairs.reserve(keep);
  for (size_t i : indices) out.pairs.push_back(d.pairs[i]);
  out.rebuild_index();
  return out;
}

Var orthogonal_loss(const Var& soft_embeddings, int soft_dim) {
  if (soft_dim <= 0) throw std::invalid_argument("orthogonal_loss: soft_dim must be > 0");
  const Eigen::Index k = soft_embeddings.rows();
  Var gram = matmul(soft_embeddings, transpose(soft_embeddings));
  Var deviation = sub(gram, Var::constant(Mat::Identity(k, k)));
  Var frob = sqrt_scalar(sum(cmul(deviation, deviation)));
  return scale(frob, 1.0 / static_cast<double>(soft_dim));
}

Var compute_loss(const std::vector<Var>& p_match, const std::vector<int>& labels,
                 const std::vector<Var>& soft_embeddings, double lambda, int soft_dim) {
  if (p_match.empty()) throw std::invalid_argument("compute_loss: empty batch");
  if (p_match.size() != labels.size())
    throw std::invalid_argument("compute_loss: predictions/labels size mismatch");

  Var ce = Var::scalar(0.0);
  for (size_t i = 0; i < p_match.size(); ++i) {
    const Var& p = p_match[i];
    Var term = labels[i] == 1 ? log_clamped(p) : log_clamped(sconst_sub(1.0, p));
    ce = ssub(ce, term);
  }
  Var loss = scale(ce, 1.0 / static_cast<double>(p_match.size()));

  if (lambda > 0 && !soft_embeddings.empty()) {
    Var ortho = Var::scalar(0.0);
    for (const auto& emb : soft_embeddings)
      ortho = sadd(ortho, orthogonal_loss(emb, soft_dim));
    ortho = scale(ortho, 1.0 / static_cast<double>(soft_embeddings.size()));
    loss = sadd(loss, scale(ortho, lambda));
  }
  return loss;
}

double pretrain_mlm(MiniLm& backbone, const WordTokenizer& tokenizer,
                    const std::vector<std::vector<int>>& sequences,
                    const PretrainConfig& cfg) {
  if (cfg.epochs <= 0 || sequences.empty()) return 0.0;
  const int mask_id = tokenizer.mask_id();
  const int max_len = backbone.max_sequence_length();

  Rng rng(cfg.seed);
  AdamW optimizer(backbone.parameters(), cfg.learning_rate);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<size_t> order(sequences.size());
  std::iota(order.begin(), order.end(), 0);

  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    epoch_loss = 0.0;
    size_t steps = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Var> losses;
      for (size_t s = start; s < end; ++s) {
        std::vector<int> ids = sequences[order[s]];
        if (static_cast<int>(ids.size()) > max_len) ids.resize(max_len);
        if (ids.empty()) continue;
        std::vector<int> positions;
        std::vector<int> targets;
        std::vector<int> masked = ids;
        for (size_t i = 0; i < ids.size(); ++i) {
          if (coin(rng) < cfg.mask_fraction) {
            positions.push_back(static_cast<int>(i));
            targets.push_back(ids[i]);
            masked[i] = mask_id;
          }
        }
        if (positions.empty()) {  // always learn from something
          const size_t i = rng() % ids.size();
          positions.push_back(static_cast<int>(i));
          targets.push_back(ids[i]);
          masked[i] = mask_id;
        }
        Var embedded = gather_rows(backbone.token_embeddings(), masked);
        Var hidden = backbone.sequence_hidden(embedded);
        Var probs = softmax_rows(backbone.logits_at(hidden, positions));
        for (size_t i = 0; i < positions.size(); ++i) {
          Var row = slice_rows(probs, static_cast<Eigen::Index>(i), 1);
          Var picked = gather_cols_row(row, {targets[i]});
          losses.push_back(scale(log_clamped(picked), -1.0));
        }
      }
      if (losses.empty()) continue;
      Var total = losses[0];
      for (size_t i = 1; i < losses.size(); ++i) total = sadd(total, losses[i]);
      Var loss = scale(total, 1.0 / static_cast<double>(losses.size()));
      backward(loss);
      optimizer.step();
      optimizer.zero_grad();
      epoch_loss += loss.item();
      ++steps;
    }
    if (steps > 0) epoch_loss /= static_cast<double>(steps);
  }
  return epoch_loss;
}

Metrics compute_metrics(long tp, long fp, long fn) {
  Metrics m;
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

namespace {

struct PreparedPairs {
  std::vector<PromptInstance> instances;
  std::vector<int> labels;
};

PreparedPairs prepare_pairs(const Dataset& d, const std::vector<MatchPair>& pairs,
                            const PromptBuilder& builder, bool require_labels) {
  PreparedPairs out;
  for (const auto& p : pairs) {
    if (!p.label.has_value()) {
      if (require_labels) continue;
      continue;
    }
    const Entity* a = d.find_left(p.left);
    const Entity* b = d.find_right(p.right);
    if (a == nullptr || b == nullptr)
      throw std::invalid_argument("pair references unknown entity: " + p.left + " / " +
                                  p.right);
    PromptInstance inst = builder.build(*a, *b);
    inst.label = p.label;
    out.instances.push_back(std::move(inst));
    out.labels.push_back(*p.label);
  }
  return out;
}

Metrics evaluate_prepared(MatchModel& model, const PreparedPairs& prepared) {
  long tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < prepared.instances.size(); ++i) {
    MatchPrediction pred = predict(model, prepared.instances[i]);
    const int gold = prepared.labels[i];
    if (pred.label == 1 && gold == 1) ++tp;
    if (pred.label == 1 && gold == 0) ++fp;
    if (pred.label == 0 && gold == 1) ++fn;
  }
  return compute_metrics(tp, fp, fn);
}

PromptBuilder make_builder(const MatchModel& model, const Dataset& d) {
  return PromptBuilder(model.tokenizer, model.matcher_config,
                       model.soft_config.aspect_count,
                       model.backbone_config.max_sequence_length,
                       d.augmentations.empty() ? nullptr : &d.augmentations);
}

}  // namespace

Metrics evaluate(MatchModel& model, const Dataset& d, const std::vector<MatchPair>& pairs) {
  PromptBuilder builder = make_builder(model, d);
  PreparedPairs prepared = prepare_pairs(d, pairs, builder, true);
  return evaluate_prepared(model, prepared);
}

Metrics evaluate(MatchModel& model, const Dataset& d) { return evaluate(model, d, d.pairs); }

void write_metrics_csv(const std::string& path, const std::vector<EpochLog>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics csv: " + path);
  out << "epoch,loss,precision,recall,f1\n";
  for (const auto& e : history)
    out << e.epoch << ',' << e.loss << ',' << e.validation.precision << ','
        << e.validation.recall << ',' << e.validation.f1 << '\n';
}

MatchModel train(const Dataset& d, const TrainConfig& cfg, const TrainerOptions& opts,
                 TrainOutcome* outcome) {
  cfg.validate();

  std::vector<MatchPair> labeled;
  for (const auto& p : d.pairs)
    if (p.label.has_value()) labeled.push_back(p);
  if (labeled.empty()) throw std::invalid_argument("train: no labeled pairs");

  Rng rng(cfg.seed);

  MatcherConfig matcher_cfg = opts.matcher;
  if (opts.prompt_template != nullptr) {
    matcher_cfg.serialization = SerializationMode::kTemplate;
    matcher_cfg.serialization_template = *opts.prompt_template;
  }

  // --- vocabulary ----------------------------------------------------------
  WordTokenizer tokenizer;
  for (const auto& w : {"the", "keyword", "is", "to", "."}) tokenizer.add_token(w);
  for (int k = 1; k <= opts.soft.aspect_count; ++k) tokenizer.add_token(soft_token_name(k));
  for (const auto& w : matcher_cfg.match_words) tokenizer.add_text(w);
  for (const auto& w : matcher_cfg.mismatch_words) tokenizer.add_text(w);
  {
    PromptBuilder vocab_builder(tokenizer, matcher_cfg, opts.soft.aspect_count,
                                opts.backbone.max_sequence_length,
                                d.augmentations.empty() ? nullptr : &d.augmentations);
    for (const auto& e : d.left)
      tokenizer.add_text(fragments_to_string(vocab_builder.serialize_entity(e)));
    for (const auto& e : d.right)
      tokenizer.add_text(fragments_to_string(vocab_builder.serialize_entity(e)));
  }
  tokenizer.freeze();

  // --- model ---------------------------------------------------------------
  MatchModel model;
  model.tokenizer = std::move(tokenizer);
  model.backbone_config = opts.backbone;
  model.backbone_config.vocab_size = model.tokenizer.vocab_size();
  model.soft_config = opts.soft;
  model.soft_config.validate();
  model.matcher_config = std::move(matcher_cfg);
  model.backbone = MiniLm(model.backbone_config, rng);
  model.soft = SoftPromptState(model.soft_config, model.backbone_config.hidden_dim, rng);
  model.resolve_label_words();

  PromptBuilder builder = make_builder(model, d);

  // --- backbone warm-up ------------------------------------------------------
  if (opts.pretrain.epochs > 0) {
    std::vector<std::vector<int>> corpus;
    corpus.reserve(d.left.size() + d.right.size());
    auto add_sequences = [&](const std::vector<Entity>& entities) {
      for (const auto& e : entities) {
        std::vector<int> ids;
        std::vector<int> cols;
        model.tokenizer.encode_fragments(builder.serialize_entity(e), ids, cols);
        if (!ids.empty()) corpus.push_back(std::move(ids));
      }
    };
    add_sequences(d.left);
    add_sequences(d.right);
    const double mlm_loss = pretrain_mlm(model.backbone, model.tokenizer, corpus,
                                         opts.pretrain);
    if (opts.log_to_stderr)
      std::cerr << "mlm warm-up " << opts.pretrain.epochs << " epochs over "
                << corpus.size() << " sequences, final loss " << mlm_loss << "\n";
  }

  // --- train / validation split --------------------------------------------
  std::vector<MatchPair> train_pairs = labeled;
  std::vector<MatchPair> val_pairs = opts.validation_pairs;
  if (val_pairs.empty() && cfg.validation_fraction > 0) {
    std::vector<size_t> indices(train_pairs.size());
    std::iota(indices.begin(), indices.end(), 0);
    std::shuffle(indices.begin(), indices.end(), rng);
    const size_t n_val = static_cast<size_t>(
        std::floor(cfg.validation_fraction * static_cast<double>(train_pairs.size())));
    std::vector<MatchPair> tr, va;
    for (size_t i = 0; i < indices.size(); ++i)
      (i < n_val ? va : tr).push_back(train_pairs[indices[i]]);
    if (!va.empty() && !tr.empty()) {
      train_pairs = std::move(tr);
      val_pairs = std::move(va);
    }
  }
  if (val_pairs.empty()) val_pairs = train_pairs;

  PreparedPairs train_set = prepare_pairs(d, train_pairs, builder, true);
  PreparedPairs val_set = prepare_pairs(d, val_pairs, builder, true);
  if (train_set.instances.empty()) throw std::invalid_argument("train: no usable pairs");

  AdamW optimizer(model.parameters(), cfg.learning_rate, cfg.weight_decay);

  TrainOutcome log;
  double best_f1 = -1.0;
  std::vector<Mat> best_values;
  auto named = named_parameters(model);

  try {
    std::vector<size_t> order(train_set.instances.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double epoch_loss = 0.0;
      size_t seen = 0;

      for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const size_t end = std::min(order.size(), start + cfg.batch_size);
        std::vector<Var> p_batch;
        std::vector<int> y_batch;
        std::vector<Var> soft_batch;
        for (size_t i = start; i < end; ++i) {
          const PromptInstance& inst = train_set.instances[order[i]];
          PairForward fwd = forward_pair(model, inst);
          p_batch.push_back(fwd.p_match);
          y_batch.push_back(train_set.labels[order[i]]);
          if (fwd.left_soft.defined()) soft_batch.push_back(fwd.left_soft);
          if (fwd.right_soft.defined()) soft_batch.push_back(fwd.right_soft);
        }
        Var loss = compute_loss(p_batch, y_batch, soft_batch, cfg.ortho_lambda,
                                model.soft_config.soft_dim);
        const double loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
          std::ostringstream os;
          os << "train: non-finite loss at epoch " << epoch << " batch " << (start / cfg.batch_size)
             << " (loss=" << loss_value << ", lr=" << cfg.learning_rate << ")";
          throw std::runtime_error(os.str());
        }
        backward(loss);
        optimizer.step();
        optimizer.zero_grad();
        epoch_loss += loss_value * static_cast<double>(end - start);
        seen += end - start;
      }
      epoch_loss /= static_cast<double>(seen);

      Metrics val = evaluate_prepared(model, val_set);
      log.history.push_back({epoch, epoch_loss, val});
      if (opts.log_to_stderr)
        std::cerr << "epoch " << epoch << " loss " << epoch_loss << " val F1 " << val.f1
                  << "\n";

      if (val.f1 > best_f1) {
        best_f1 = val.f1;
        log.best_epoch = epoch;
        log.best_validation = val;
        best_values.clear();
        best_values.reserve(named.size());
        for (const auto& [name, var] : named) best_values.push_back(var.value());
      }
    }
  } catch (const std::bad_alloc&) {
    throw std::runtime_error(
        "train: out of memory; reduce batch_size or the backbone dimensions");
  }

  // retain the best-F1 parameters
  if (!best_values.empty())
    for (size_t i = 0; i < named.size(); ++i) named[i].second.value() = best_values[i];

  if (!opts.metrics_csv_path.empty()) write_metrics_csv(opts.metrics_csv_path, log.history);
  if (!opts.checkpoint_path.empty()) save_checkpoint(opts.checkpoint_path, model);
  if (outcome != nullptr) *outcome = log;
  return model;
}

GridResult grid_search(const Dataset& d, const TrainConfig& cfg, const TrainerOptions& base,
                       const std::vector<int>& aspect_counts,
                       const std::vector<int>& encoder_layer_counts,
                       const std::vector<PeMode>& pe_modes) {
  GridResult result;
  double best = -1.0;
  for (int k : aspect_counts) {
    for (int n : encoder_layer_counts) {
      for (PeMode mode : pe_modes) {
        TrainerOptions opts = base;
        opts.soft.aspect_count = k;
        opts.soft.encoder_layers = n;
        opts.soft.pe_mode = mode;
        opts.metrics_csv_path.clear();
        opts.checkpoint_path.clear();
        TrainOutcome outcome;
        train(d, cfg, opts, &outcome);
        result.points.push_back({opts.soft, outcome});
        if (outcome.best_validation.f1 > best) {
          best = outcome.best_validation.f1;
          result.best_index = result.points.size() - 1;
        }
      }
    }
  }
  return result;
}

}  // namespace gem
