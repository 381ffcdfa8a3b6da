#include "gem/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace gem {

namespace {

constexpr char kMagic[8] = {'G', 'E', 'M', 'C', 'K', 'P', 'T', '1'};

using ojson = nlohmann::ordered_json;

void collect_layer(std::vector<std::pair<std::string, Var>>& out, const std::string& prefix,
                   const TransformerLayer& layer) {
  auto lin = [&](const std::string& name, const Linear& l) {
    out.emplace_back(prefix + "." + name + ".weight", l.weight);
    out.emplace_back(prefix + "." + name + ".bias", l.bias);
  };
  auto norm = [&](const std::string& name, const LayerNorm& n) {
    out.emplace_back(prefix + "." + name + ".gamma", n.gamma);
    out.emplace_back(prefix + "." + name + ".beta", n.beta);
  };
  lin("query", layer.query);
  lin("key", layer.key);
  lin("value", layer.value);
  lin("out", layer.out);
  lin("ffn_in", layer.ffn_in);
  lin("ffn_out", layer.ffn_out);
  norm("norm_attn", layer.norm_attn);
  norm("norm_ffn", layer.norm_ffn);
}

ojson soft_config_json(const SoftPromptConfig& c) {
  ojson j;
  j["aspect_count"] = c.aspect_count;
  j["encoder_layers"] = c.encoder_layers;
  j["query_dim"] = c.query_dim;
  j["value_dim"] = c.value_dim;
  j["soft_dim"] = c.soft_dim;
  j["pe_mode"] = std::string(to_string(c.pe_mode));
  j["encoder_heads"] = c.encoder_heads;
  j["max_positions"] = c.max_positions;
  j["max_columns"] = c.max_columns;
  return j;
}

SoftPromptConfig soft_config_from_json(const ojson& j) {
  SoftPromptConfig c;
  c.aspect_count = j.at("aspect_count").get<int>();
  c.encoder_layers = j.at("encoder_layers").get<int>();
  c.query_dim = j.at("query_dim").get<int>();
  c.value_dim = j.at("value_dim").get<int>();
  c.soft_dim = j.at("soft_dim").get<int>();
  c.pe_mode = *pe_mode_from_string(j.at("pe_mode").get<std::string>());
  c.encoder_heads = j.at("encoder_heads").get<int>();
  c.max_positions = j.at("max_positions").get<int>();
  c.max_columns = j.at("max_columns").get<int>();
  return c;
}

}  // namespace

std::vector<std::pair<std::string, Var>> named_parameters(const MatchModel& model) {
  std::vector<std::pair<std::string, Var>> out;
  const MiniLm& backbone = model.backbone;
  out.emplace_back("backbone.token_table", backbone.token_table());
  out.emplace_back("backbone.position_table", backbone.position_table());
  for (size_t i = 0; i < backbone.encoder().size(); ++i)
    collect_layer(out, "backbone.layer" + std::to_string(i), backbone.encoder()[i]);
  out.emplace_back("backbone.final_norm.gamma", backbone.final_norm().gamma);
  out.emplace_back("backbone.final_norm.beta", backbone.final_norm().beta);
  if (model.backbone_config.tie_lm_head) {
    out.emplace_back("backbone.lm_bias", backbone.lm_bias());
  } else {
    out.emplace_back("backbone.lm_head.weight", backbone.lm_head().weight);
    out.emplace_back("backbone.lm_head.bias", backbone.lm_head().bias);
  }

  out.emplace_back("soft.aspects", model.soft.aspects);
  out.emplace_back("soft.key_proj.weight", model.soft.key_proj.weight);
  out.emplace_back("soft.key_proj.bias", model.soft.key_proj.bias);
  out.emplace_back("soft.value_proj.weight", model.soft.value_proj.weight);
  out.emplace_back("soft.value_proj.bias", model.soft.value_proj.bias);
  for (size_t i = 0; i < model.soft.encoder.size(); ++i)
    collect_layer(out, "soft.layer" + std::to_string(i), model.soft.encoder[i]);
  out.emplace_back("soft.post.weight", model.soft.post.weight);
  out.emplace_back("soft.post.bias", model.soft.post.bias);
  out.emplace_back("soft.post_norm.gamma", model.soft.post_norm.gamma);
  out.emplace_back("soft.post_norm.beta", model.soft.post_norm.beta);
  out.emplace_back("soft.position_embeddings", model.soft.position_embeddings);
  out.emplace_back("soft.column_embeddings", model.soft.column_embeddings);
  return out;
}

void save_checkpoint(const std::string& path, const MatchModel& model) {
  auto named = named_parameters(model);

  ojson header;
  ojson backbone;
  backbone["vocab_size"] = model.backbone_config.vocab_size;
  backbone["hidden_dim"] = model.backbone_config.hidden_dim;
  backbone["layers"] = model.backbone_config.layers;
  backbone["heads"] = model.backbone_config.heads;
  backbone["ffn_dim"] = model.backbone_config.ffn_dim;
  backbone["max_sequence_length"] = model.backbone_config.max_sequence_length;
  backbone["tie_lm_head"] = model.backbone_config.tie_lm_head;
  header["backbone"] = backbone;
  header["soft"] = soft_config_json(model.soft_config);

  ojson matcher;
  matcher["serialization"] = std::string(to_string(model.matcher_config.serialization));
  matcher["template_name"] = model.matcher_config.serialization_template.name;
  matcher["template_slots"] = model.matcher_config.serialization_template.slots;
  matcher["template_pattern"] = model.matcher_config.serialization_template.pattern;
  matcher["template_origin"] =
      std::string(to_string(model.matcher_config.serialization_template.origin));
  matcher["use_soft_tokens"] = model.matcher_config.use_soft_tokens;
  matcher["match_words"] = model.matcher_config.match_words;
  matcher["mismatch_words"] = model.matcher_config.mismatch_words;
  matcher["score_first_piece"] = model.matcher_config.score_first_piece;
  header["matcher"] = matcher;

  header["vocabulary"] = model.tokenizer.vocabulary();

  ojson tensors = ojson::array();
  for (const auto& [name, var] : named) {
    ojson t;
    t["name"] = name;
    t["rows"] = var.rows();
    t["cols"] = var.cols();
    tensors.push_back(std::move(t));
  }
  header["tensors"] = tensors;

  const std::string header_str = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = header_str.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, var] : named) {
    const Mat& m = var.value();
    // row-major write keeps the manifest human-auditable
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double v = m(r, c);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

MatchModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a gem checkpoint: " + path);
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_str(len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("truncated checkpoint header: " + path);

  ojson header = ojson::parse(header_str);

  MatchModel model;
  const auto& b = header.at("backbone");
  model.backbone_config.vocab_size = b.at("vocab_size").get<int>();
  model.backbone_config.hidden_dim = b.at("hidden_dim").get<int>();
  model.backbone_config.layers = b.at("layers").get<int>();
  model.backbone_config.heads = b.at("heads").get<int>();
  model.backbone_config.ffn_dim = b.at("ffn_dim").get<int>();
  model.backbone_config.max_sequence_length = b.at("max_sequence_length").get<int>();
  model.backbone_config.tie_lm_head = b.value("tie_lm_head", true);
  model.soft_config = soft_config_from_json(header.at("soft"));

  const auto& m = header.at("matcher");
  model.matcher_config.serialization =
      *serialization_mode_from_string(m.at("serialization").get<std::string>());
  model.matcher_config.serialization_template.name = m.at("template_name").get<std::string>();
  model.matcher_config.serialization_template.slots =
      m.at("template_slots").get<std::vector<std::string>>();
  model.matcher_config.serialization_template.pattern =
      m.at("template_pattern").get<std::string>();
  model.matcher_config.serialization_template.origin =
      *template_origin_from_string(m.at("template_origin").get<std::string>());
  model.matcher_config.use_soft_tokens = m.at("use_soft_tokens").get<bool>();
  model.matcher_config.match_words = m.at("match_words").get<std::vector<std::string>>();
  model.matcher_config.mismatch_words =
      m.at("mismatch_words").get<std::vector<std::string>>();
  model.matcher_config.score_first_piece = m.at("score_first_piece").get<bool>();

  model.tokenizer =
      WordTokenizer::from_vocabulary(header.at("vocabulary").get<std::vector<std::string>>());

  Rng rng(0);  // shapes only; values are overwritten below
  model.backbone = MiniLm(model.backbone_config, rng);
  model.soft = SoftPromptState(model.soft_config, model.backbone_config.hidden_dim, rng);
  model.resolve_label_words();

  auto named = named_parameters(model);
  const auto& tensors = header.at("tensors");
  if (tensors.size() != named.size())
    throw std::runtime_error("checkpoint tensor count mismatch: " + path);
  for (size_t i = 0; i < named.size(); ++i) {
    const auto& t = tensors[i];
    if (t.at("name").get<std::string>() != named[i].first)
      throw std::runtime_error("checkpoint tensor order mismatch at '" + named[i].first + "'");
    const Eigen::Index rows = t.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = t.at("cols").get<Eigen::Index>();
    Mat& dst = named[i].second.value();
    if (rows != dst.rows() || cols != dst.cols())
      throw std::runtime_error("checkpoint tensor shape mismatch at '" + named[i].first + "'");
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        dst(r, c) = v;
      }
  }
  if (!in) throw std::runtime_error("truncated checkpoint tensors: " + path);
  return model;
}

}  // namespace gem
