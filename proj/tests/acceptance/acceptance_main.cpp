// Acceptance suite: each criterion prints one [PASS]/[FAIL]/[SKIP] line.
// Run a single criterion with `gem_acceptance <n>` (ctest does), or all with
// no arguments. Exit codes: 0 pass, 1 fail, 77 skip.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "gem/augment.hpp"
#include "gem/cost.hpp"
#include "gem/selector.hpp"
#include "gem/serialize.hpp"
#include "gem/soft_prompt.hpp"
#include "gem/trainer.hpp"

using namespace gem;
namespace fs = std::filesystem;

namespace {

struct Checker {
  bool ok = true;
  bool skipped = false;
  std::ostringstream log;

  void check(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      log << "      failed: " << what << "\n";
    }
  }
  void near(double actual, double expected, double tol, const std::string& what) {
    check(std::abs(actual - expected) <= tol,
          what + " (got " + std::to_string(actual) + ", want " + std::to_string(expected) +
              " +/- " + std::to_string(tol) + ")");
  }
  void skip(const std::string& why) {
    skipped = true;
    log << "      skipped: " << why << "\n";
  }
};

std::string repo_path(const std::string& name) {
  return std::string(GEM_REPO_DIR) + "/" + name;
}
std::string fixture_path(const std::string& name) {
  return std::string(GEM_TEST_DATA_DIR) + "/" + name;
}

Mat random_mat(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = dist(rng);
  return m;
}

// --------------------------------------------------------------------------
// 1. Template goldens: every implemented registry row fills to the expected
//    sentence character-exactly.
// --------------------------------------------------------------------------
void criterion_1(Checker& c) {
  TemplateRegistry reg = TemplateRegistry::load(repo_path("data/templates.jsonl"));
  c.check(reg.templates().size() == 20, "registry holds 20 templates");

  struct Golden {
    const char* name;
    std::map<std::string, std::string> values;
    const char* expected;
  };
  const std::map<std::string, std::string> academic = {{"title", "attention is all you need"},
                                                       {"author", "vaswani"},
                                                       {"venue", "neurips"},
                                                       {"year", "2017"}};
  const std::map<std::string, std::string> movie = {
      {"title", "heat"},           {"director", "michael mann"},
      {"actors", "al pacino, robert de niro"}, {"year", "1995"},
      {"ratings", "8.3"},          {"information", "crime film"}};
  const std::map<std::string, std::string> product_kv = {
      {"category", "laptop"},
      {"brand", "lenovo"},
      {"identifiers", "x1c-2019"},
      {"keyvaluepairs", "the ram is 16GB, the ssd is 512GB"},
      {"price", "$1299"}};
  const std::map<std::string, std::string> location = {
      {"name", "central cafe"}, {"postalcode", "10117"},          {"latitude", "52.52"},
      {"longitude", "13.40"},   {"position", "downtown"},         {"address", "unter den linden 14"}};
  const std::map<std::string, std::string> wdc = {{"title", "seagate ironwolf 4tb"},
                                                  {"brand", "seagate"},
                                                  {"price", "119"},
                                                  {"pricecurrency", "USD"},
                                                  {"description", "nas hard drive"}};
  const std::map<std::string, std::string> google = {
      {"title", "ipod nano"}, {"manufacturer", "apple"}, {"price", "$149"}};
  const std::map<std::string, std::string> restaurant_a = {{"title", "la taqueria"},
                                                           {"address", "2889 mission st"},
                                                           {"phone", "415-285-7117"},
                                                           {"category", "mexican"}};
  const std::map<std::string, std::string> restaurant_b = {{"addr", "2889 mission st"},
                                                           {"city", "san francisco"},
                                                           {"phone", "415-285-7117"},
                                                           {"type", "mexican"},
                                                           {"class", "5"}};
  const std::map<std::string, std::string> music = {
      {"song_name", "hey jude"},          {"artist_name", "the beatles"},
      {"album_name", "past masters"},     {"genre", "rock"},
      {"price", "$1.29"},                 {"copyright", "1968 apple records"},
      {"time", "7:11"},                   {"released", "august 26, 1968"}};
  const std::map<std::string, std::string> walmart = {{"title", "hp 61 ink"},
                                                      {"category", "printer supplies"},
                                                      {"brand", "hp"},
                                                      {"modelno", "ch561wn"},
                                                      {"price", "$14.99"}};

  const std::vector<Golden> goldens = {
      {"semi-homo", academic,
       "The attention is all you need is authored by vaswani and is published in neurips "
       "in the year 2017."},
      {"semi-homo-paraphrased", academic,
       "The paper entitled attention is all you need is written by vaswani and is "
       "published in neurips in 2017."},
      {"semi-rel", movie,
       "The heat is directed by michael mann, including al pacino, robert de niro. It was "
       "released in 1995 and has received ratings of 8.3. It includes crime film."},
      {"semi-rel-paraphrased", movie,
       "The heat is made by michael mann, featuring al pacino, robert de niro. It debuted "
       "in 1995 and has earned ratings of 8.3. It encompasses crime film."},
      {"semi-text", product_kv,
       "This laptop product is from lenovo priced at $1299. It is identified by x1c-2019 "
       "and has key value pairs of the ram is 16GB, the ssd is 512GB."},
      {"semi-text-paraphrased", product_kv,
       "This laptop product is priced by lenovo $1299, it is identified by x1c-2019 and "
       "has key value pairs of the ram is 16GB, the ssd is 512GB."},
      {"geo-heter", location,
       "The central cafe is located at unter den linden 14, with latitude 52.52 and "
       "longitude 13.40. The position is downtown, and the postal code is 10117."},
      {"geo-heter-paraphrased", location,
       "The central cafe is located in the unter den linden 14 with the width 52.52 and "
       "the length 13.40, the position is downtown and the postcode is 10117."},
      {"wdc", wdc,
       "The seagate ironwolf 4tb from seagate. It is priced at 119 USD. It includes nas "
       "hard drive."},
      {"wdc-paraphrased", wdc,
       "The seagate ironwolf 4tb from seagate, costs 119 USD. It includes nas hard "
       "drive."},
      {"google-amazon", google,
       "The ipod nano is a product manufactured by apple and is priced at $149."},
      {"google-amazon-paraphrased", google,
       "The ipod nano is a product produced by apple and valued at $149."},
      {"rel-heter-left", restaurant_a,
       "The la taqueria is a mexican restaurant located at 2889 mission st. The phone "
       "number is 415-285-7117."},
      {"rel-heter-left-paraphrased", restaurant_a,
       "The la taqueria is a mexican restaurant at the 2889 mission st, the telephone "
       "number is 415-285-7117."},
      {"rel-heter-right", restaurant_b,
       "This mexican restaurant offers a diverse 5 different types of dishes, located in "
       "san francisco at 2889 mission st. The phone number is 415-285-7117."},
      {"rel-heter-right-paraphrased", restaurant_b,
       "This mexican restaurant offers a diverse 5 different types of dishes, located in "
       "san francisco at 2889 mission st. The telephone number is 415-285-7117."},
      {"itunes-amazon", music,
       "The hey jude is performed by the beatles and is featured on the album past "
       "masters. It falls under the genre of rock with a price of $1.29. The song is "
       "protected by 1968 apple records and has a duration of 7:11. It was released on "
       "august 26, 1968."},
      {"itunes-amazon-paraphrased", music,
       "The hey jude is played by the beatles and is included on the album past masters, "
       "which falls under the genre of rock with a price of $1.29. The song is protected "
       "by 1968 apple records and has a length of 7:11. It was released on august 26, "
       "1968."},
      {"walmart-amazon", walmart,
       "The hp 61 ink is a printer supplies from hp with model number ch561wn, priced at "
       "$14.99."},
      {"walmart-amazon-paraphrased", walmart,
       "The hp 61 ink is a printer supplies from hp with model number ch561wn, priced at "
       "$14.99."},
  };

  for (const auto& g : goldens) {
    const PromptTemplate* t = reg.find(g.name);
    c.check(t != nullptr, std::string("registry has ") + g.name);
    if (t == nullptr) continue;
    const std::string filled = fill_template(*t, g.values);
    c.check(filled == g.expected,
            std::string(g.name) + " golden mismatch:\n        got  " + filled +
                "\n        want " + g.expected);
  }
}

// --------------------------------------------------------------------------
// 2. Cost-model reproduction.
// --------------------------------------------------------------------------
void criterion_2(Checker& c) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    CostParams p;
    p.entities_per_source = 1 + rng() % 5000;
    p.pairs_per_entity = 1 + rng() % 30;
    p.augmented_attrs = p.pairs_per_entity;  // O_k = N_k
    p.tokens_per_pair = 1 + rng() % 50;
    p.blocking_fanout = 5;
    SavingsReport r = savings(p);
    c.check(5 * r.augmentation_tokens == 2 * r.direct_tokens,
            "augmentation uses 40% of direct tokens");
    c.check(r.is_exact_reduction_percent(60), "token reduction is exactly 60%");
  }
  for (int trial = 0; trial < 1000; ++trial) {
    CostParams p;
    p.entities_per_source = rng() % 10000;
    p.pairs_per_entity = rng() % 50;
    p.augmented_attrs = rng() % 50;
    p.tokens_per_pair = rng() % 64;
    p.blocking_fanout = rng() % 12;
    SavingsReport r = savings(p);
    c.check(r.token_difference == static_cast<long long>(r.direct_tokens) -
                                      static_cast<long long>(r.augmentation_tokens),
            "d = direct - augmentation identity");
  }
}

// --------------------------------------------------------------------------
// 3. Orthogonal-loss properties.
// --------------------------------------------------------------------------
void criterion_3(Checker& c) {
  {
    Mat emb = Mat::Zero(2, 4);
    emb(0, 0) = 1.0;
    emb(1, 1) = 1.0;
    c.near(orthogonal_loss(Var::constant(emb), 4).item(), 0.0, 1e-8,
           "orthonormal rows give zero loss");
    const double angle = 0.7;
    Mat rotated = Mat::Zero(2, 4);
    rotated(0, 0) = std::cos(angle);
    rotated(0, 1) = std::sin(angle);
    rotated(1, 0) = -std::sin(angle);
    rotated(1, 1) = std::cos(angle);
    c.near(orthogonal_loss(Var::constant(rotated), 4).item(), 0.0, 1e-8,
           "rotated orthonormal rows give zero loss");
  }
  {
    Mat emb = Mat::Zero(2, 4);
    emb(0, 0) = 1.0;
    emb(1, 0) = 1.0;
    c.near(orthogonal_loss(Var::constant(emb), 4).item(), std::sqrt(2.0) / 4.0, 1e-8,
           "identical unit rows give sqrt(2)/4");
  }
  {
    std::mt19937_64 rng(7);
    Var emb = Var::param(random_mat(2, 3, rng));
    Var loss = orthogonal_loss(emb, 3);
    backward(loss);
    Mat analytic = emb.grad();
    const double eps = 1e-6;
    double worst = 0.0;
    for (Eigen::Index r = 0; r < 2; ++r) {
      for (Eigen::Index col = 0; col < 3; ++col) {
        const double keep = emb.value()(r, col);
        emb.value()(r, col) = keep + eps;
        const double up = orthogonal_loss(emb, 3).item();
        emb.value()(r, col) = keep - eps;
        const double down = orthogonal_loss(emb, 3).item();
        emb.value()(r, col) = keep;
        const double fd = (up - down) / (2 * eps);
        const double denom = std::max({1.0, std::abs(fd), std::abs(analytic(r, col))});
        worst = std::max(worst, std::abs(fd - analytic(r, col)) / denom);
      }
    }
    c.check(worst < 1e-4, "orthogonal-loss gradient within 1e-4 of finite differences");
  }
}

// --------------------------------------------------------------------------
// 4. Aspect attention.
// --------------------------------------------------------------------------
void criterion_4(Checker& c) {
  std::mt19937_64 seeds(11);
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(seeds());
    SoftPromptConfig cfg;
    cfg.aspect_count = 1 + static_cast<int>(seeds() % 6);
    cfg.encoder_layers = 0;
    cfg.query_dim = 3 + static_cast<int>(seeds() % 6);
    cfg.value_dim = 3 + static_cast<int>(seeds() % 6);
    cfg.soft_dim = cfg.value_dim;
    cfg.pe_mode = PeMode::kNone;
    SoftPromptState state(cfg, 5, rng);
    Var encoded = Var::constant(random_mat(1 + seeds() % 10, 5, seeds, 2.0));
    AspectExtraction out = extract_aspects(encoded, cfg, state);
    for (Eigen::Index k = 0; k < out.attention.rows(); ++k)
      c.check(std::abs(out.attention.value().row(k).sum() - 1.0) <= 1e-6,
              "attention row sums to 1");
  }
  {
    Rng rng(3);
    SoftPromptConfig cfg;
    cfg.aspect_count = 1;
    cfg.encoder_layers = 0;
    cfg.query_dim = 1;
    cfg.value_dim = 1;
    cfg.soft_dim = 1;
    cfg.pe_mode = PeMode::kNone;
    SoftPromptState state(cfg, 1, rng);
    state.key_proj.weight.value() = Mat::Constant(1, 1, 1.0);
    state.key_proj.bias.value().setZero();
    state.value_proj.weight.value() = Mat::Constant(1, 1, 3.0);
    state.value_proj.bias.value().setZero();
    state.aspects.value() = Mat::Constant(1, 1, std::log(2.0));
    Mat e(2, 1);
    e << 1.0, 0.0;
    AspectExtraction out = extract_aspects(Var::constant(e), cfg, state);
    c.near(out.attention.value()(0, 0), 2.0 / 3.0, 1e-6, "hand example weight 2/3");
    c.near(out.attention.value()(0, 1), 1.0 / 3.0, 1e-6, "hand example weight 1/3");
    c.near(out.pooled.value()(0, 0), 2.0, 1e-6, "hand example pooled output 2.0");
  }
  {
    Rng rng(5);
    SoftPromptConfig cfg;
    cfg.aspect_count = 3;
    cfg.encoder_layers = 0;
    cfg.query_dim = 4;
    cfg.value_dim = 4;
    cfg.soft_dim = 4;
    cfg.pe_mode = PeMode::kNone;
    SoftPromptState state(cfg, 4, rng);
    state.aspects.value().setZero();
    std::mt19937_64 r2(6);
    Var encoded = Var::constant(random_mat(7, 4, r2));
    AspectExtraction out = extract_aspects(encoded, cfg, state);
    Mat values = state.value_proj.forward(encoded).value();
    Mat mean = values.colwise().mean();
    for (Eigen::Index k = 0; k < 3; ++k)
      c.check((out.pooled.value().row(k) - mean.row(0)).cwiseAbs().maxCoeff() <= 1e-9,
              "zero queries return the value mean");
  }
}

// --------------------------------------------------------------------------
// 5. Verbalizer.
// --------------------------------------------------------------------------
void criterion_5(Checker& c) {
  c.check(verbalize({0.07, 0.07, 0.07}, {0.07, 0.07, 0.07}) == 0.5,
          "equal six-word scores give exactly 0.5");
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(1e-6, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> m = {dist(rng), dist(rng), dist(rng)};
    std::vector<double> n = {dist(rng), dist(rng), dist(rng)};
    const double scale = dist(rng) * 20 + 1e-3;
    std::vector<double> ms = m, ns = n;
    for (auto& v : ms) v *= scale;
    for (auto& v : ns) v *= scale;
    c.check(std::abs(verbalize(ms, ns) - verbalize(m, n)) <= 1e-9,
            "positive rescaling invariance");
    c.check(std::abs(verbalize(n, m) - (1.0 - verbalize(m, n))) <= 1e-12,
            "set swap maps p to 1-p");
  }
}

// --------------------------------------------------------------------------
// 6. Uncertainty gating.
// --------------------------------------------------------------------------
void criterion_6(Checker& c) {
  std::map<std::string, double> scores = {{"a", -0.6}, {"b", -0.3}, {"c", -0.05}};
  c.check(gate(scores, -std::numeric_limits<double>::infinity()).empty(),
          "tau=-inf selects nothing");
  c.check(gate(scores, std::numeric_limits<double>::infinity()).size() == scores.size(),
          "tau=+inf selects everything");
  size_t prev = 0;
  for (double tau = -0.7; tau <= 0.01; tau += 0.05) {
    const size_t n = gate(scores, tau).size();
    c.check(n >= prev, "selected set grows with tau");
    prev = n;
  }
  c.near(uncertainty_score({0.5}, UncertaintyMetric::kNegEntropy), -std::log(2.0), 1e-9,
         "(0.5,0.5) negative entropy is -ln 2");
  c.near(uncertainty_score({0.9, 0.6}, UncertaintyMetric::kMaxProb), 0.9, 1e-12,
         "max over candidates returns 0.9");
}

// --------------------------------------------------------------------------
// 7. Augmenter offline with the stub client.
// --------------------------------------------------------------------------
void criterion_7(Checker& c) {
  const std::vector<std::string> attrs = {"color", "speed", "release year"};
  fs::path tmp = fs::temp_directory_path() /
                 ("gem_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(tmp);
  const std::string cache_path = (tmp / "cache.jsonl").string();

  auto make_dataset = []() {
    return load_dataset(fixture_path("entities_left.jsonl"),
                        fixture_path("entities_right.jsonl"), fixture_path("pairs.tsv"),
                        fixture_path("candidates.jsonl"));
  };

  {
    Dataset d = make_dataset();
    StubLlmClient client(fixture_path("stub_llm.jsonl"));
    AugmentationCache cache(cache_path);
    AttributePlan plan = select_attributes(d, PlanMode::kSourceLevel, attrs);
    AugmentStats stats = augment_dataset(d, plan, client, cache);
    c.check(stats.planned == d.left.size() + d.right.size(), "every entity planned");
    for (const auto& [id, rec] : d.augmentations) {
      bool keys_match = rec.values.size() == attrs.size();
      for (size_t i = 0; keys_match && i < attrs.size(); ++i)
        keys_match = rec.values[i].first == attrs[i];
      c.check(keys_match, "record key set equals the attribute plan for " + id);
    }
    bool l3_all_pad = true;
    for (const auto& [k, v] : d.augmentations.at("L3").values)
      l3_all_pad = l3_all_pad && v == kPadMarker;
    c.check(l3_all_pad, "non-JSON fixture yields an all-pad record");
  }
  {
    Dataset d = make_dataset();
    StubLlmClient client(fixture_path("stub_llm.jsonl"));
    AugmentationCache cache(cache_path);
    AttributePlan plan = select_attributes(d, PlanMode::kSourceLevel, attrs);
    AugmentStats stats = augment_dataset(d, plan, client, cache);
    c.check(client.call_count() == 0, "second run makes zero client calls");
    c.check(stats.from_cache == stats.planned, "cache hit rate is 100%");
  }
  std::error_code ec;
  fs::remove_all(tmp, ec);
}

// --------------------------------------------------------------------------
// 8. Desk-scale end-to-end on ITUNES-AMAZON. Requires external artifacts
//    (the benchmark files), so the criterion skips when GEM_E2E_DATA_DIR is
//    unset. Layout: left.jsonl right.jsonl train_pairs.tsv test_pairs.tsv
//    [valid_pairs.tsv].
// --------------------------------------------------------------------------
void criterion_8(Checker& c) {
  const char* dir_env = std::getenv("GEM_E2E_DATA_DIR");
  if (dir_env == nullptr || std::string(dir_env).empty()) {
    c.skip(
        "GEM_E2E_DATA_DIR is unset; the ITUNES-AMAZON benchmark and a pretrained "
        "backbone are downloads this environment does not ship");
    return;
  }
  const fs::path dir(dir_env);
  for (const char* name : {"left.jsonl", "right.jsonl", "train_pairs.tsv", "test_pairs.tsv"})
    if (!fs::exists(dir / name)) {
      c.check(false, std::string("missing ") + name + " under GEM_E2E_DATA_DIR");
      return;
    }

  const auto started = std::chrono::steady_clock::now();

  Dataset d = load_dataset((dir / "left.jsonl").string(), (dir / "right.jsonl").string(),
                           (dir / "train_pairs.tsv").string());
  c.check(d.pairs.size() == 321, "ITUNES-AMAZON ships 321 labeled pairs");
  Dataset sampled = sample_low_resource(d, 0.1, 13);
  c.check(sampled.pairs.size() == 32, "10% low-resource sample is 32 pairs");

  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 2e-3;  // scaled to the desk-scale backbone
  cfg.batch_size = 4;
  cfg.ortho_lambda = 1.0;
  cfg.low_resource_ratio = 0.1;
  cfg.validation_fraction = 0.0;  // 32 pairs: a 3-pair split is too noisy
  cfg.seed = 13;

  TrainerOptions opts;
  opts.backbone.hidden_dim = 64;
  opts.backbone.layers = 2;
  opts.backbone.heads = 2;
  opts.backbone.ffn_dim = 256;
  opts.backbone.max_sequence_length = 192;
  opts.pretrain.epochs = 20;  // masked-token warm-up over the unlabeled entities
  opts.pretrain.learning_rate = 1e-3;
  opts.soft.aspect_count = 4;  // default preset
  opts.soft.encoder_layers = 0;
  opts.soft.query_dim = 64;
  opts.soft.value_dim = 64;
  opts.soft.soft_dim = 64;
  opts.soft.pe_mode = PeMode::kPos;
  TemplateRegistry reg = TemplateRegistry::load(repo_path("data/templates.jsonl"));
  const PromptTemplate* tmpl = reg.find("itunes-amazon");
  opts.prompt_template = tmpl;
  if (fs::exists(dir / "valid_pairs.tsv"))
    opts.validation_pairs = read_pairs((dir / "valid_pairs.tsv").string());

  TrainOutcome outcome;
  MatchModel model = train(sampled, cfg, opts, &outcome);
  c.check(static_cast<int>(outcome.history.size()) <= 30, "at most 30 epochs");

  Dataset test = sampled;
  test.pairs = read_pairs((dir / "test_pairs.tsv").string());
  test.rebuild_index();
  Metrics m = evaluate(model, test);
  c.check(m.f1 >= 0.90, "test F1 >= 0.90 (got " + std::to_string(m.f1) + ")");

  const double hours =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() /
      3600.0;
  c.check(hours <= 3.0, "CPU runtime within 3 hours");
}

// --------------------------------------------------------------------------
// 9. Overfit sanity: loss on one repeated pair strictly decreases.
// --------------------------------------------------------------------------
void criterion_9(Checker& c) {
  Dataset d;
  Entity left;
  left.id = "L0";
  left.shape = EntityShape::kStructured;
  left.attrs = {{"title", Value::text("acme drive 450")},
                {"manufacturer", Value::text("acme")}};
  Entity right = left;
  right.id = "R0";
  d.left.push_back(left);
  d.right.push_back(right);
  d.pairs.push_back({"L0", "R0", 1});
  d.rebuild_index();

  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 1;
  cfg.low_resource_ratio = 1.0;
  cfg.validation_fraction = 0.0;
  cfg.seed = 3;

  TrainerOptions opts;
  opts.backbone.hidden_dim = 32;
  opts.backbone.layers = 2;
  opts.backbone.heads = 2;
  opts.backbone.ffn_dim = 64;
  opts.backbone.max_sequence_length = 96;
  opts.soft.aspect_count = 2;
  opts.soft.encoder_layers = 0;
  opts.soft.query_dim = 32;
  opts.soft.value_dim = 32;
  opts.soft.soft_dim = 32;
  opts.soft.pe_mode = PeMode::kPos;

  TrainOutcome outcome;
  train(d, cfg, opts, &outcome);
  c.check(outcome.history.size() == 5, "five epochs logged");
  for (size_t i = 1; i < outcome.history.size(); ++i)
    c.check(outcome.history[i].loss < outcome.history[i - 1].loss,
            "loss strictly decreases at epoch " + std::to_string(i + 1));
}

struct Criterion {
  int number;
  const char* title;
  std::function<void(Checker&)> run;
  double budget_seconds;  // 0 = unbounded
};

const std::vector<Criterion> kCriteria = {
    {1, "template goldens fill character-exactly", criterion_1, 1.0},
    {2, "cost model: exact 60% saving and d = direct - augmentation", criterion_2, 1.0},
    {3, "orthogonal-loss values and gradients", criterion_3, 5.0},
    {4, "aspect attention rows, hand example, zero-query mean", criterion_4, 5.0},
    {5, "verbalizer symmetry and rescaling invariance", criterion_5, 0.0},
    {6, "uncertainty gating boundaries and monotonicity", criterion_6, 0.0},
    {7, "offline augmentation with stub client and cache", criterion_7, 0.0},
    {8, "desk-scale end-to-end on ITUNES-AMAZON", criterion_8, 0.0},
    {9, "overfit sanity on one repeated pair", criterion_9, 0.0},
};

// 0 pass, 1 fail, 77 skip
int run_criterion(const Criterion& criterion) {
  Checker checker;
  const auto started = std::chrono::steady_clock::now();
  try {
    criterion.run(checker);
  } catch (const std::exception& e) {
    checker.check(false, std::string("exception: ") + e.what());
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (criterion.budget_seconds > 0)
    checker.check(seconds < criterion.budget_seconds,
                  "runtime " + std::to_string(seconds) + "s within " +
                      std::to_string(criterion.budget_seconds) + "s");

  const char* verdict = checker.skipped ? "SKIP" : checker.ok ? "PASS" : "FAIL";
  std::printf("[%s] criterion %d: %s (%.2fs)\n", verdict, criterion.number, criterion.title,
              seconds);
  std::string details = checker.log.str();
  if (!details.empty()) std::fputs(details.c_str(), stdout);
  return checker.skipped ? 77 : checker.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) {
    const int wanted = std::atoi(argv[1]);
    for (const auto& criterion : kCriteria)
      if (criterion.number == wanted) return run_criterion(criterion);
    std::fprintf(stderr, "unknown criterion %s (1-9)\n", argv[1]);
    return 2;
  }
  int failures = 0;
  for (const auto& criterion : kCriteria) {
    const int rc = run_criterion(criterion);
    if (rc == 1) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
