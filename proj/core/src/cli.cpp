#include "gem/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"

#include "gem/augment.hpp"
#include "gem/checkpoint.hpp"
#include "gem/config.hpp"
#include "gem/cost.hpp"
#include "gem/paraphrase.hpp"
#include "gem/selector.hpp"
#include "gem/trainer.hpp"

namespace gem {

namespace fs = std::filesystem;

namespace {

// Every flag writes through to the run configuration so that flags override
// config-file values and each option keeps a file equivalent.
class OptionBinder {
 public:
  OptionBinder(CLI::App& app, RunConfig& cfg) : app_(app), cfg_(cfg) {}

  void bind(const std::string& flag, const std::string& key, const std::string& help) {
    app_.add_option_function<std::string>(
        flag, [this, key](const std::string& v) { cfg_.override_value(key, v); }, help);
  }

  void bind_flag(const std::string& flag, const std::string& key, const std::string& help) {
    app_.add_flag_callback(
        flag, [this, key]() { cfg_.override_value(key, "true"); }, help);
  }

 private:
  CLI::App& app_;
  RunConfig& cfg_;
};

int parse_app(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("gem");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
  return -1;  // parsed, keep going
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  fs::path dir = cfg.get("out_dir", ".");
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v == nullptr ? std::string() : std::string(v);
}

// ---------------------------------------------------------------------------
// shared loaders
// ---------------------------------------------------------------------------

Dataset load_dataset_from_config(const RunConfig& cfg, bool pairs_required) {
  std::string pairs;
  if (pairs_required)
    pairs = cfg.require_file("train_pairs");
  else if (cfg.has("train_pairs"))
    pairs = cfg.require_file("train_pairs");
  std::string candidates;
  if (cfg.has("candidates")) candidates = cfg.require_file("candidates");
  return load_dataset(cfg.require_file("left_entities"), cfg.require_file("right_entities"),
                      pairs, candidates);
}

PromptTemplate lookup_template(const RunConfig& cfg, const std::string& name) {
  TemplateRegistry registry = TemplateRegistry::load(cfg.require_file("registry"));
  const PromptTemplate* t = registry.find(name);
  if (t == nullptr)
    throw ConfigError("template '" + name + "' not found in registry " +
                      cfg.get("registry"));
  return *t;
}

MatcherConfig matcher_config_from(const RunConfig& cfg) {
  MatcherConfig mc;
  const std::string tmpl = cfg.get("template", "basic");
  if (tmpl == "basic") {
    mc.serialization = SerializationMode::kNaturalBasic;
  } else if (tmpl == "ditto") {
    mc.serialization = SerializationMode::kDitto;
  } else {
    mc.serialization = SerializationMode::kTemplate;
    mc.serialization_template = lookup_template(cfg, tmpl);
  }
  mc.use_soft_tokens = cfg.get_bool("use_soft_tokens", true);
  if (cfg.has("match_words")) mc.match_words = cfg.get_list("match_words");
  if (cfg.has("mismatch_words")) mc.mismatch_words = cfg.get_list("mismatch_words");
  return mc;
}

SoftPromptConfig soft_config_from(const RunConfig& cfg, int hidden_dim) {
  SoftPromptConfig sc;
  sc.aspect_count = cfg.get_int("soft_tokens", 4);
  sc.encoder_layers = cfg.get_int("encoder_layers", 0);
  sc.query_dim = cfg.get_int("query_dim", hidden_dim);
  sc.value_dim = cfg.get_int("value_dim", hidden_dim);
  sc.soft_dim = cfg.get_int("soft_dim", hidden_dim);
  sc.encoder_heads = cfg.get_int("encoder_heads", 2);
  sc.max_positions = cfg.get_int("max_positions", 512);
  sc.max_columns = cfg.get_int("max_columns", 64);
  const std::string pe = cfg.get("pe_mode", "POS");
  auto mode = pe_mode_from_string(pe);
  if (!mode) throw ConfigError("unknown pe_mode '" + pe + "' (COL, POS, NONE)");
  sc.pe_mode = *mode;
  if (sc.soft_dim != hidden_dim)
    throw ConfigError("soft_dim must equal the backbone hidden_dim for injection (" +
                      std::to_string(sc.soft_dim) + " vs " + std::to_string(hidden_dim) +
                      ")");
  return sc;
}

BackboneConfig backbone_config_from(const RunConfig& cfg) {
  BackboneConfig bc;
  bc.hidden_dim = cfg.get_int("hidden_dim", 64);
  bc.layers = cfg.get_int("backbone_layers", 2);
  bc.heads = cfg.get_int("backbone_heads", 2);
  bc.ffn_dim = cfg.get_int("ffn_dim", 4 * bc.hidden_dim);
  bc.max_sequence_length = cfg.get_int("max_sequence_length", 160);
  bc.tie_lm_head = cfg.get_bool("tie_lm_head", true);
  return bc;
}

PretrainConfig pretrain_config_from(const RunConfig& cfg) {
  PretrainConfig pc;
  pc.epochs = cfg.get_int("pretrain_epochs", 0);
  pc.learning_rate = cfg.get_double("pretrain_learning_rate", 1e-3);
  pc.batch_size = cfg.get_int("pretrain_batch_size", 8);
  pc.mask_fraction = cfg.get_double("pretrain_mask_fraction", 0.15);
  pc.seed = cfg.seed();
  return pc;
}

TrainConfig train_config_from(const RunConfig& cfg) {
  TrainConfig tc;
  tc.epochs = cfg.get_int("epochs", 30);
  tc.learning_rate = cfg.get_double("learning_rate", 2e-5);
  tc.batch_size = cfg.get_int("batch_size", 24);
  tc.ortho_lambda = cfg.get_double("lambda", 1.0);
  tc.low_resource_ratio = cfg.get_double("low_resource_ratio", 0.10);
  tc.seed = cfg.seed();
  tc.weight_decay = cfg.get_double("weight_decay", 0.01);
  tc.validation_fraction = cfg.get_double("validation_fraction", 0.10);
  return tc;
}

std::unique_ptr<LlmClient> llm_client_from(const RunConfig& cfg) {
  const std::string kind = cfg.get("llm_client", "stub");
  if (kind == "stub")
    return std::make_unique<StubLlmClient>(cfg.require_file("llm_fixture"),
                                           cfg.get("llm_model", "stub"));
  if (kind == "http") {
    HttpLlmOptions opts;
    opts.endpoint = cfg.get("llm_endpoint", env_or_empty("GEM_LLM_ENDPOINT"));
    if (opts.endpoint.empty())
      throw ConfigError("http client needs llm_endpoint or GEM_LLM_ENDPOINT");
    opts.api_key = env_or_empty(cfg.get("llm_api_key_env", "GEM_LLM_API_KEY").c_str());
    opts.model = cfg.get("llm_model", "gpt-3.5-turbo");
    opts.max_attempts = cfg.get_int("llm_max_attempts", 3);
    opts.backoff_base_ms = cfg.get_int("llm_backoff_ms", 250);
    opts.min_interval_ms = cfg.get_int("llm_min_interval_ms", 0);
    return std::make_unique<HttpLlmClient>(opts);
  }
  throw ConfigError("unknown llm_client '" + kind + "' (stub, http)");
}

AugmentStats run_augmentation(const RunConfig& cfg, Dataset& d, AugmentPolicy policy,
                              const std::set<std::string>& selected) {
  const std::string mode_str = cfg.get("augment_mode", "source");
  auto mode = plan_mode_from_string(mode_str);
  if (!mode) throw ConfigError("unknown augment_mode '" + mode_str + "'");

  std::vector<std::string> attrs = cfg.get_list("augment_attrs");
  if (*mode == PlanMode::kSourceLevel && attrs.empty() &&
      cfg.get("augment_attrs_preset") == "wdc")
    attrs = kWdcProductAttributes;
  AttributePlan plan = select_attributes(d, *mode, attrs);
  for (const auto& id : plan.skipped)
    std::cerr << "warning: entity '" << id << "' has no candidates; skipped from the plan\n";

  auto client = llm_client_from(cfg);
  AugmentationCache cache(cfg.get("cache_file"));

  AugmentOptions opts;
  opts.policy = policy;
  opts.selected = selected;
  opts.concurrency = cfg.get_int("concurrency", 1);
  if (cfg.has("meaningless_values")) opts.meaningless = cfg.get_list("meaningless_values");

  AugmentStats stats = augment_dataset(d, plan, *client, cache, opts);
  std::cout << "augmented " << (stats.from_llm + stats.from_cache) << "/" << stats.planned
            << " entities (llm " << stats.from_llm << ", cache " << stats.from_cache
            << ", gated-out " << stats.gated_padded << ", failures " << stats.failures
            << "), client calls " << client->call_count() << ", coverage "
            << stats.coverage() << "\n";
  return stats;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_ingest(const std::vector<std::string>& args, RunConfig cfg) {
  CLI::App app{"Validate and normalize a dataset"};
  OptionBinder bind(app, cfg);
  bind.bind("--left", "left_entities", "left-source entities (JSON lines)");
  bind.bind("--right", "right_entities", "right-source entities (JSON lines)");
  bind.bind("--pairs", "train_pairs", "labeled pairs (TSV)");
  bind.bind("--candidates", "candidates", "blocking candidates (JSON lines)");
  bind.bind("--out-dir", "out_dir", "output directory");
  bind.bind("--config", "config", "config file (already applied)");
  if (int rc = parse_app(app, args); rc >= 0) return rc;

  Dataset d = load_dataset_from_config(cfg, false);
  write_entities(out_path(cfg, "left.normalized.jsonl"), d.left);
  write_entities(out_path(cfg, "right.normalized.jsonl"), d.right);
  if (!d.pairs.empty()) write_pairs(out_path(cfg, "pairs.normalized.tsv"), d.pairs);
  if (!d.candidates.empty())
    write_candidates(out_path(cfg, "candidates.normalized.jsonl"), d.candidates);

  size_t labeled = 0, positives = 0;
  for (const auto& p : d.pairs)
    if (p.label) {
      ++labeled;
      positives += static_cast<size_t>(*p.label);
    }
  nlohmann::ordered_json stats;
  stats["left_entities"] = d.left.size();
  stats["right_entities"] = d.right.size();
  stats["pairs"] = d.pairs.size();
  stats["labeled_pairs"] = labeled;
  stats["positive_pairs"] = positives;
  stats["entities_with_candidates"] = d.candidates.size();
  std::ofstream(out_path(cfg, "stats.json")) << stats.dump(2) << '\n';
  std::cout << stats.dump(2) << "\n";
  return 0;
}

int cmd_serialize(const std::vector<std::string>& args, RunConfig cfg) {
  CLI::App app{"Serialize entities to token text, one line per entity"};
  OptionBinder bind(app, cfg);
  bind.bind("--entity-file", "entities", "entities to serialize (JSON lines)");
  bind.bind("--template", "template", "basic, ditto, or a registry template name");
  bind.bind("--registry", "registry", "template registry (JSON lines)");
  bind.bind("--augment-records", "augment_records", "augmentation records to append");
  bind.bind("--out", "serialize_out", "output file (default: stdout)");
  bind.bind("--config", "config", "config file (already applied)");
  if (int rc = parse_app(app, args); rc >= 0) return rc;

  std::vector<Entity> entities = read_entities(cfg.require_file("entities"));
  MatcherConfig mc = matcher_config_from(cfg);

  std::unordered_map<std::string, AugmentationRecord> records;
  if (cfg.has("augment_records"))
    records = read_augmentation_records(cfg.require_file("augment_records"));

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (cfg.has("serialize_out")) {
    file.open(cfg.get("serialize_out"));
    if (!file) throw std::runtime_error("cannot write " + cfg.get("serialize_out"));
    out = &file;
  }
  for (const auto& e : entities) {
    auto it = records.find(e.id);
    const AugmentationRecord* rec = it == records.end() ? nullptr : &it->second;
    *out << fragments_to_string(serialize_entity_fragments(e, mc, rec)) << '\n';
  }
  return 0;
}

int cmd_paraphrase(const std::vector<std::string>& args, RunConfig cfg) {
  CLI::App app{"Mine a back-translated paraphrase of a registry template"};
  OptionBinder bind(app, cfg);
  bind.bind("--template", "template", "registry template name");
  bind.bind("--corpus", "corpus", "entities used to fill the template");
  bind.bind("--beam", "beam", "beam width k_b (default 3)");
  bind.bind("--registry", "registry", "template registry (JSON lines)");
  bind.bind("--translation-fixture", "translation_fixture", "offline translation fixture");
  bind.bind("--out-registry", "out_registry", "registry to write (default: in place)");
  bind.bind("--config", "config", "config file (already applied)");
  if (int rc = parse_app(app, args); rc >= 0) return rc;

  const std::string name = cfg.require("template");
  PromptTemplate base = lookup_template(cfg, name);
  std::vector<Entity> corpus = read_entities(cfg.require_file("corpus"));
  FixtureTranslationBackend backend(cfg.require_file("translation_fixture"));
  const int beam = cfg.get_int("beam", 3);

  ParaphraseResult res = paraphrase_template(base, corpus, beam, backend);
  if (res.backend_unavailable) {
    std::cerr << "warning: translation backend unavailable; keeping the manual template\n";
  } else if (res.fallback) {
    std::cerr << "warning: no paraphrase candidate survived parsing ("
              << res.candidates_seen << " candidates); keeping the manual template\n";
  } else {
    TemplateRegistry registry = TemplateRegistry::load(cfg.require_file("registry"));
    PromptTemplate mined = res.result;
    mined.name = name + "-paraphrased";
    registry.upsert(mined);
    registry.save(cfg.get("out_registry", cfg.get("registry")));
    std::cout << "paraphrased '" << name << "' (score " << res.score << ", "
              << res.survivors << " survivors of " << res.candidates_seen
              << " candidates):\n"
              << mined.pattern << "\n";
  }
  return 0;
}

int cmd_train(const std::vector<std::string>& args, RunConfig cfg) {
  CLI::App app{"Prompt+LM tuning on a labeled pair file"};
  OptionBinder bind(app, cfg);
  bind.bind("--left", "left_entities", "left-source entities");
  bind.bind("--right", "right_entities", "right-source entities");
  bind.bind("--pairs", "train_pairs", "labeled training pairs (TSV)");
  bind.bind("--valid-pairs", "valid_pairs", "validation pairs (TSV)");
  bind.bind("--candidates", "candidates", "blocking candidates");
  bind.bind("--template", "template", "basic, ditto, or registry template name");
  bind.bind("--registry", "registry", "template registry");
  bind.bind("--epochs", "epochs", "training epochs (default 30)");
  bind.bind("--learning-rate", "learning_rate", "AdamW learning rate (default 2e-5)");
  bind.bind("--batch-size", "batch_size", "batch size (default 24)");
  bind.bind("--lambda", "lambda", "orthogonal-loss weight (default 1)");
  bind.bind("--ratio", "low_resource_ratio", "low-resource sampling ratio (default 0.1)");
  bind.bind("--soft-tokens", "soft_tokens", "aspect count K (default 4)");
  bind.bind("--encoder-layers", "encoder_layers", "soft encoder layers N (default 0)");
  bind.bind("--pe-mode", "pe_mode", "position embeddings: COL, POS, NONE");
  bind.bind("--pretrain-epochs", "pretrain_epochs", "masked-token warm-up epochs (default 0)");
  bind.bind("--seed", "seed", "run seed");
  bind.bind("--out-dir", "out_dir", "output directory");
  bind.bind_flag("--grid", "grid", "enumerate K/N/pe-mode and report the best");
  bind.bind_flag("--augment", "augment", "augment entities before training");
  bind.bind("--config", "config", "config file (already applied)");
  if (int rc = parse_app(app, args); rc >= 0) return rc;

  Dataset d = load_dataset_from_config(cfg, true);
  TrainConfig tc = train_config_from(cfg);
  if (tc.low_resource_ratio < 1.0) d = sample_low_resource(d, tc.low_resource_ratio, tc.seed);

  if (cfg.get_bool("augment", false))
    run_augmentation(cfg, d, AugmentPolicy::kAll, {});  // train-time: augment everything

  TrainerOptions opts;
  opts.backbone = backbone_config_from(cfg);
  opts.soft = soft_config_from(cfg, opts.backbone.hidden_dim);
  opts.matcher = matcher_config_from(cfg);
  opts.pretrain = pretrain_config_from(cfg);
  opts.metrics_csv_path = out_path(cfg, "metrics.csv");
  opts.checkpoint_path = out_path(cfg, "checkpoint.bin");
  opts.log_to_stderr = true;
  if (cfg.has("valid_pairs")) opts.validation_pairs = read_pairs(cfg.require_file("valid_pairs"));

  if (cfg.get_bool("grid", false)) {
    GridResult grid = grid_search(d, tc, opts);
    std::cout << "K,N,pe_mode,best_epoch,val_f1\n";
    for (const auto& p : grid.points)
      std::cout << p.soft.aspect_count << ',' << p.soft.encoder_layers << ','
                << to_string(p.soft.pe_mode) << ',' << p.outcome.best_epoch << ','
                << p.outcome.best_validation.f1 << "\n";
    const GridPoint& best = grid.points[grid.best_index];
    std::cout << "best: K=" << best.soft.aspect_count << " N=" << best.soft.encoder_layers
              << " pe=" << to_string(best.soft.pe_mode) << " F1 "
              << best.outcome.best_validation.f1 << "\n";
    opts.soft = best.soft;
  }

  TrainOutcome outcome;
  train(d, tc, opts, &outcome);
  std::cout << "trained " << outcome.history.size() << " epochs; best epoch "
            << outcome.best_epoch << " val P " << outcome.best_validation.precision << " R "
            << outcome.best_validation.recall << " F1 " << outcome.best_validation.f1
            << "\ncheckpoint: " << opts.checkpoint_path
            << "\nmetrics: " << opts.metrics_csv_path << "\n";
  return 0;
}

int cmd_eval(const std::vector<std::string>& args, RunConfig cfg) {
  CLI::App app{"Evaluate a checkpoint and dump predictions"};
  OptionBinder bind(app, cfg);
  bind.bind("--checkpoint", "checkpoint", "trained checkpoint archive");
  bind.bind("--left", "left_entities", "left-source entities");
  bind.bind("--right", "right_entities", "right-source entities");
  bind.bind("--pairs", "test_pairs", "labeled pairs to score (TSV)");
  bind.bind("--augment-records", "augment_records", "augmentation records to apply");
  bind.bind("--predictions-out", "predictions_out", "prediction dump path");
  bind.bind("--attention-out", "attention_out", "aspect-attention JSON lines dump");
  bind.bind("--attention-limit", "attention_limit", "pairs to export (default 8)");
  bind.bind("--out-dir", "out_dir", "output directory");
  bind.bind("--config", "config", "config file (already applied)");
  if (int rc = parse_app(app, args); rc >= 0) return rc;

  MatchModel model = load_checkpoint(cfg.require_file("checkpoint"));
  Dataset d = load_dataset(cfg.require_file("left_entities"),
                           cfg.require_file("right_entities"),
                           cfg.require_file("test_pairs"));
  if (cfg.has("augment_records"))
    d.augmentations = read_augmentation_records(cfg.require_file("augment_records"));

  PromptBuilder builder(model.tokenizer, model.matcher_config,
                        model.soft_config.aspect_count,
                        model.backbone_config.max_sequence_length,
                        d.augmentations.empty() ? nullptr : &d.augmentations);

  std::vector<PredictionRow> rows;
  long tp = 0, fp = 0, fn = 0;
  std::ofstream attention_file;
  long attention_left = cfg.get_int("attention_limit", 8);
  if (cfg.has("attention_out")) {
    attention_file.open(cfg.get("attention_out"));
    if (!attention_file)
      throw std::runtime_error("cannot write " + cfg.get("attention_out"));
  }

  for (const auto& pair : d.pairs) {
    const Entity* a = d.find_left(pair.left);
    const Entity* b = d.find_right(pair.right);
    if (a == nullptr || b == nullptr)
      throw std::runtime_error("pair references unknown entity: " + pair.left + " / " +
                               pair.right);
    PromptInstance inst = builder.build(*a, *b);
    PairForward fwd = forward_pair(model, inst);
    const double p = fwd.p_match.item();
    const int label = p >= 0.5 ? 1 : 0;
    rows.push_back({pair.left, pair.right, p, label});
    if (pair.label) {
      if (label == 1 && *pair.label == 1) ++tp;
      if (label == 1 && *pair.label == 0) ++fp;
      if (label == 0 && *pair.label == 1) ++fn;
    }
    if (attention_file.is_open() && attention_left > 0 && fwd.left_attention.size() > 0) {
      --attention_left;
      auto token_names = [&](const std::vector<int>& ids) {
        std::vector<std::string> names;
        for (int id : ids) names.push_back(model.tokenizer.token_name(id));
        return names;
      };
      nlohmann::ordered_json j;
      j["left"] = pair.left;
      j["right"] = pair.right;
      j["left_attention"] = nlohmann::ordered_json::parse(
          attention_to_json(token_names(inst.left_entity_tokens), fwd.left_attention));
      j["right_attention"] = nlohmann::ordered_json::parse(
          attention_to_json(token_names(inst.right_entity_tokens), fwd.right_attention));
      attention_file << j.dump() << '\n';
    }
  }

  write_predictions(cfg.get("predictions_out", out_path(cfg, "predictions.jsonl")), rows);
  Metrics m = compute_metrics(tp, fp, fn);
  std::cout << "pairs " << rows.size() << " P " << m.precision << " R " << m.recall << " F1 "
            << m.f1 << "\n";
  return 0;
}

int cmd_augment(const std::vector<std::string>& args, RunConfig cfg) {
  CLI::App app{"LLM information augmentation with caching"};
  OptionBinder bind(app, cfg);
  bind.bind("--left", "left_entities", "left-source entities");
  bind.bind("--right", "right_entities", "right-source entities");
  bind.bind("--candidates", "candidates", "blocking candidates (instance mode)");
  bind.bind("--mode", "augment_mode", "source or instance");
  bind.bind("--attrs", "augment_attrs", "comma-separated attribute list (source mode)");
  bind.bind("--policy", "augment_policy", "all or gated");
  bind.bind("--threshold", "threshold", "uncertainty threshold tau (gated)");
  bind.bind("--metric", "uncertainty_metric", "neg_entropy or max_prob");
  bind.bind("--predictions", "predictions", "prediction dump for gating scores");
  bind.bind("--selected", "selected_file", "explicit selected-id list (gated)");
  bind.bind("--client", "llm_client", "stub or http");
  bind.bind("--fixture", "llm_fixture", "stub-client fixture file");
  bind.bind("--cache", "cache_file", "response cache path");
  bind.bind("--concurrency", "concurrency", "max in-flight requests");
  bind.bind("--out", "augment_out", "records output (JSON lines)");
  bind.bind("--out-dir", "out_dir", "output directory");
  bind.bind("--config", "config", "config file (already applied)");
  if (int rc = parse_app(app, args); rc >= 0) return rc;

  Dataset d = load_dataset_from_config(cfg, false);

  const std::string policy_str = cfg.get("augment_policy", "all");
  auto policy = augment_policy_from_string(policy_str);
  if (!policy) throw ConfigError("unknown augment_policy '" + policy_str + "'");

  std::set<std::string> selected;
  if (*policy == AugmentPolicy::kGated) {
    if (cfg.has("selected_file")) {
      std::ifstream in(cfg.require_file("selected_file"));
      std::string id;
      while (std::getline(in, id))
        if (!id.empty()) selected.insert(id);
    } else if (cfg.has("threshold")) {
      auto metric = uncertainty_metric_from_string(cfg.get("uncertainty_metric", "neg_entropy"));
      if (!metric) throw ConfigError("unknown uncertainty_metric");
      auto predictions = read_predictions(cfg.require_file("predictions"));
      if (d.candidates.empty())
        throw ConfigError("gating from --threshold needs --candidates");
      auto scores = score_entities(d.candidates, predictions, *metric);
      selected = gate(scores, cfg.get_double("threshold", 0.0));
      std::cout << "gated " << selected.size() << "/" << scores.size()
                << " entities below tau\n";
    } else {
      throw ConfigError("gated policy requires --selected or --threshold (with --predictions)");
    }
  }

  run_augmentation(cfg, d, *policy, selected);
  write_augmentation_records(cfg.get("augment_out", out_path(cfg, "augmentation.jsonl")),
                             d.augmentations);
  return 0;
}

int cmd_gate(const std::vector<std::string>& args, RunConfig cfg) {
  CLI::App app{"Uncertainty-gated selection of entities to augment"};
  OptionBinder bind(app, cfg);
  bind.bind("--predictions", "predictions", "prediction dump (JSON lines)");
  bind.bind("--candidates", "candidates", "blocking candidates (JSON lines)");
  bind.bind("--metric", "uncertainty_metric", "neg_entropy or max_prob");
  bind.bind("--tau", "threshold", "uncertainty threshold");
  bind.bind("--scores-out", "scores_out", "scores CSV path");
  bind.bind("--selected-out", "selected_out", "selected-id list path");
  bind.bind("--out-dir", "out_dir", "output directory");
  bind.bind("--config", "config", "config file (already applied)");
  if (int rc = parse_app(app, args); rc >= 0) return rc;

  auto metric = uncertainty_metric_from_string(cfg.get("uncertainty_metric", "neg_entropy"));
  if (!metric) throw ConfigError("unknown uncertainty_metric");
  if (!cfg.has("threshold")) throw ConfigError("missing required option 'threshold' (--tau)");
  const double tau = cfg.get_double("threshold", 0.0);

  auto predictions = read_predictions(cfg.require_file("predictions"));
  auto candidates = read_candidates(cfg.require_file("candidates"));
  std::vector<std::string> missing;
  auto scores = score_entities(candidates, predictions, *metric, &missing);
  for (const auto& id : missing)
    std::cerr << "warning: no predictions for entity '" << id << "'; not scored\n";

  auto selected = gate(scores, tau);
  write_scores_csv(cfg.get("scores_out", out_path(cfg, "scores.csv")), scores, selected);
  std::ofstream sel(cfg.get("selected_out", out_path(cfg, "selected.txt")));
  for (const auto& id : selected) sel << id << '\n';

  std::cout << "selected " << selected.size() << "/" << scores.size() << " entities ("
            << (scores.empty() ? 0.0
                               : static_cast<double>(selected.size()) /
                                     static_cast<double>(scores.size()))
            << ") below tau=" << tau << " with metric " << to_string(*metric) << "\n";
  return 0;
}

int cmd_estimate_cost(const std::vector<std::string>& args, RunConfig cfg) {
  CLI::App app{"Token and fee comparison: augmentation vs direct LLM inference"};
  OptionBinder bind(app, cfg);
  bind.bind("--params", "params", "cost parameter file (key = value)");
  bind.bind("--entities", "entities_per_source", "N, entities per source");
  bind.bind("--pairs-per-entity", "pairs_per_entity", "N_k, key-value pairs per entity");
  bind.bind("--augmented-attrs", "augmented_attrs", "O_k, requested attributes per entity");
  bind.bind("--tokens-per-pair", "tokens_per_pair", "L, tokens per key-value pair");
  bind.bind("--blocking-fanout", "blocking_fanout", "B, candidates per entity");
  bind.bind("--base-rate", "base_rate", "currency per 1k tokens, base model");
  bind.bind("--finetuned-rate", "finetuned_rate", "currency per 1k tokens, fine-tuned model");
  bind.bind("--config", "config", "config file (already applied)");
  if (int rc = parse_app(app, args); rc >= 0) return rc;

  if (cfg.has("params")) {
    RunConfig params = RunConfig::from_file(cfg.require_file("params"));
    for (const auto& [k, v] : params.entries())
      if (!cfg.has(k)) cfg.override_value(k, v);
  }

  CostParams p;
  p.entities_per_source = static_cast<std::uint64_t>(cfg.get_int("entities_per_source", 0));
  p.pairs_per_entity = static_cast<std::uint64_t>(cfg.get_int("pairs_per_entity", 0));
  p.augmented_attrs = static_cast<std::uint64_t>(cfg.get_int("augmented_attrs", 0));
  p.tokens_per_pair = static_cast<std::uint64_t>(cfg.get_int("tokens_per_pair", 0));
  p.blocking_fanout = static_cast<std::uint64_t>(cfg.get_int("blocking_fanout", 0));
  if (cfg.has("base_rate")) p.base_rate = TokenRate::parse(cfg.get("base_rate"));
  if (cfg.has("finetuned_rate")) p.finetuned_rate = TokenRate::parse(cfg.get("finetuned_rate"));

  SavingsReport r = savings(p);
  std::cout << "strategy        tokens        rate($/1k)  cost\n"
            << "augmentation    " << r.augmentation_tokens << "  " << p.base_rate.to_string()
            << "  " << r.augmentation_cost << "\n"
            << "direct          " << r.direct_tokens << "  " << p.finetuned_rate.to_string()
            << "  " << r.direct_cost << "\n"
            << "token difference d = " << r.token_difference << "\n";
  if (r.direct_tokens > 0) {
    const double pct = 100.0 * static_cast<double>(r.token_difference) /
                       static_cast<double>(r.direct_tokens);
    std::cout << "token reduction " << pct << "%\n";
  }
  return 0;
}

void print_usage() {
  std::cout << "usage: gem <command> [options]\n\ncommands:\n"
            << "  ingest         validate and normalize a dataset\n"
            << "  serialize      render entities as token text\n"
            << "  paraphrase     mine a back-translated template paraphrase\n"
            << "  train          prompt+LM tuning on labeled pairs\n"
            << "  eval           evaluate a checkpoint, dump predictions\n"
            << "  augment        LLM information augmentation with caching\n"
            << "  gate           uncertainty-gated augmentation selection\n"
            << "  estimate-cost  token/fee comparison vs direct inference\n"
            << "\nrun 'gem <command> --help' for options; every flag has a\n"
            << "config-file equivalent (--config FILE, key = value lines).\n";
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    print_usage();
    return args.empty() ? 2 : 0;
  }
  const std::string cmd = args[0];
  std::vector<std::string> rest(args.begin() + 1, args.end());

  // the config file loads first so that explicit flags override its values
  RunConfig cfg;
  for (size_t i = 0; i + 1 < rest.size(); ++i) {
    if (rest[i] == "--config") {
      cfg = RunConfig::from_file(rest[i + 1]);
      break;
    }
  }

  try {
    if (cmd == "ingest") return cmd_ingest(rest, std::move(cfg));
    if (cmd == "serialize") return cmd_serialize(rest, std::move(cfg));
    if (cmd == "paraphrase") return cmd_paraphrase(rest, std::move(cfg));
    if (cmd == "train") return cmd_train(rest, std::move(cfg));
    if (cmd == "eval") return cmd_eval(rest, std::move(cfg));
    if (cmd == "augment") return cmd_augment(rest, std::move(cfg));
    if (cmd == "gate") return cmd_gate(rest, std::move(cfg));
    if (cmd == "estimate-cost") return cmd_estimate_cost(rest, std::move(cfg));
    std::cerr << "unknown command '" << cmd << "'\n";
    print_usage();
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gem
