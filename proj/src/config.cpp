#include "argus/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace argus {

using ordered_json = nlohmann::ordered_json;

namespace {

void check_keys(const ordered_json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (k == a) ok = true;
    if (!ok) throw std::invalid_argument("config: unknown key '" + k + "' in " + where);
  }
}

void parse_embedding(const ordered_json& j, EmbeddingConfig& c) {
  check_keys(j, {"table_rows", "sub_dim", "item_lookups", "max_len", "hash_seed"}, "embedding");
  c.table_rows = j.value("table_rows", c.table_rows);
  c.sub_dim = j.value("sub_dim", c.sub_dim);
  c.item_lookups = j.value("item_lookups", c.item_lookups);
  c.max_len = j.value("max_len", c.max_len);
  c.hash_seed = j.value("hash_seed", c.hash_seed);
}

void parse_encoder(const ordered_json& j, EncoderConfig& c) {
  check_keys(j, {"n_layers", "width", "n_heads", "ff_mult", "dropout", "max_len"}, "encoder");
  c.n_layers = j.value("n_layers", c.n_layers);
  c.width = j.value("width", c.width);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.ff_mult = j.value("ff_mult", c.ff_mult);
  c.dropout = j.value("dropout", c.dropout);
  c.max_len = j.value("max_len", c.max_len);
}

void parse_eval(const ordered_json& j, EvalConfig& c) {
  check_keys(j,
             {"seq_len", "n_uniform", "n_inbatch", "sketch_depth", "sketch_width", "latency",
              "pair_window", "listen_tiebreak", "pa_baseline"},
             "eval");
  c.seq_len = j.value("seq_len", c.seq_len);
  c.n_uniform = j.value("n_uniform", c.n_uniform);
  c.n_inbatch = j.value("n_inbatch", c.n_inbatch);
  c.sketch_depth = j.value("sketch_depth", c.sketch_depth);
  c.sketch_width = j.value("sketch_width", c.sketch_width);
  c.latency = j.value("latency", c.latency);
  c.pair_window = j.value("pair_window", c.pair_window);
  c.listen_tiebreak = j.value("listen_tiebreak", c.listen_tiebreak);
  c.pa_baseline = j.value("pa_baseline", c.pa_baseline);
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  RunConfig c;
  check_keys(j,
             {"out_dir", "events_path", "header_path", "world_path", "seed", "deterministic",
              "world", "model", "batch_size", "warmup_steps", "pretrain_seq_len",
              "finetune_seq_len", "train_neg_uniform", "train_neg_inbatch", "sketch_depth",
              "sketch_width", "adam", "backbone_lr_start", "backbone_lr_peak", "head_lr_start",
              "head_lr_end", "latency", "pair_window", "listen_tiebreak", "holdout_days",
              "eval", "log_every"},
             "top level");
  c.out_dir = j.value("out_dir", c.out_dir);
  c.events_path = j.value("events_path", c.events_path);
  c.header_path = j.value("header_path", c.header_path);
  c.world_path = j.value("world_path", c.world_path);
  c.seed = j.value("seed", c.seed);
  c.deterministic = j.value("deterministic", c.deterministic);
  if (j.contains("world")) c.world = WorldConfig::from_json(j.at("world").dump());
  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, {"embedding", "encoder"}, "model");
    if (m.contains("embedding")) parse_embedding(m.at("embedding"), c.model.embedding);
    if (m.contains("encoder")) parse_encoder(m.at("encoder"), c.model.encoder);
  }
  c.batch_size = j.value("batch_size", c.batch_size);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.pretrain_seq_len = j.value("pretrain_seq_len", c.pretrain_seq_len);
  c.finetune_seq_len = j.value("finetune_seq_len", c.finetune_seq_len);
  c.train_neg_uniform = j.value("train_neg_uniform", c.train_neg_uniform);
  c.train_neg_inbatch = j.value("train_neg_inbatch", c.train_neg_inbatch);
  c.sketch_depth = j.value("sketch_depth", c.sketch_depth);
  c.sketch_width = j.value("sketch_width", c.sketch_width);
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    check_keys(a, {"beta1", "beta2", "eps", "clip_norm"}, "adam");
    c.adam.beta1 = a.value("beta1", c.adam.beta1);
    c.adam.beta2 = a.value("beta2", c.adam.beta2);
    c.adam.eps = a.value("eps", c.adam.eps);
    c.adam.clip_norm = a.value("clip_norm", c.adam.clip_norm);
  }
  c.backbone_lr_start = j.value("backbone_lr_start", c.backbone_lr_start);
  c.backbone_lr_peak = j.value("backbone_lr_peak", c.backbone_lr_peak);
  c.head_lr_start = j.value("head_lr_start", c.head_lr_start);
  c.head_lr_end = j.value("head_lr_end", c.head_lr_end);
  c.latency = j.value("latency", c.latency);
  c.pair_window = j.value("pair_window", c.pair_window);
  c.listen_tiebreak = j.value("listen_tiebreak", c.listen_tiebreak);
  c.holdout_days = j.value("holdout_days", c.holdout_days);
  if (j.contains("eval")) parse_eval(j.at("eval"), c.eval);
  c.log_every = j.value("log_every", c.log_every);
  c.validate();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return from_json_text(ss.str());
}

std::string RunConfig::to_json() const {
  ordered_json j;
  j["out_dir"] = out_dir;
  j["events_path"] = events_path;
  j["header_path"] = header_path;
  j["world_path"] = world_path;
  j["seed"] = seed;
  j["deterministic"] = deterministic;
  j["world"] = ordered_json::parse(world.to_json());
  j["model"]["embedding"] = {{"table_rows", model.embedding.table_rows},
                             {"sub_dim", model.embedding.sub_dim},
                             {"item_lookups", model.embedding.item_lookups},
                             {"max_len", model.embedding.max_len},
                             {"hash_seed", model.embedding.hash_seed}};
  j["model"]["encoder"] = {{"n_layers", model.encoder.n_layers},
                           {"width", model.encoder.width},
                           {"n_heads", model.encoder.n_heads},
                           {"ff_mult", model.encoder.ff_mult},
                           {"dropout", model.encoder.dropout},
                           {"max_len", model.encoder.max_len}};
  j["batch_size"] = batch_size;
  j["warmup_steps"] = warmup_steps;
  j["pretrain_seq_len"] = pretrain_seq_len;
  j["finetune_seq_len"] = finetune_seq_len;
  j["train_neg_uniform"] = train_neg_uniform;
  j["train_neg_inbatch"] = train_neg_inbatch;
  j["sketch_depth"] = sketch_depth;
  j["sketch_width"] = sketch_width;
  j["adam"] = {{"beta1", adam.beta1},
               {"beta2", adam.beta2},
               {"eps", adam.eps},
               {"clip_norm", adam.clip_norm}};
  j["backbone_lr_start"] = backbone_lr_start;
  j["backbone_lr_peak"] = backbone_lr_peak;
  j["head_lr_start"] = head_lr_start;
  j["head_lr_end"] = head_lr_end;
  j["latency"] = latency;
  j["pair_window"] = pair_window;
  j["listen_tiebreak"] = listen_tiebreak;
  j["holdout_days"] = holdout_days;
  j["eval"] = {{"seq_len", eval.seq_len},
               {"n_uniform", eval.n_uniform},
               {"n_inbatch", eval.n_inbatch},
               {"sketch_depth", eval.sketch_depth},
               {"sketch_width", eval.sketch_width},
               {"latency", eval.latency},
               {"pair_window", eval.pair_window},
               {"listen_tiebreak", eval.listen_tiebreak},
               {"pa_baseline", eval.pa_baseline}};
  j["log_every"] = log_every;
  return j.dump(2);
}

std::string RunConfig::digest() const {
  return std::to_string(hash_string(to_json(), 0xc0f1));
}

void RunConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be positive");
  if (pretrain_seq_len < 2 || finetune_seq_len < 2)
    throw std::invalid_argument("config: sequence lengths must be at least 2");
  if (train_neg_uniform + train_neg_inbatch < 1)
    throw std::invalid_argument("config: need at least one training negative");
  if (eval.n_uniform + eval.n_inbatch < 1)
    throw std::invalid_argument("config: need at least one evaluation negative");
  if (warmup_steps < 0) throw std::invalid_argument("config: warmup_steps must be nonnegative");
  if (holdout_days < 1) throw std::invalid_argument("config: holdout_days must be positive");
  if (pretrain_seq_len > model.embedding.max_len || finetune_seq_len > model.embedding.max_len ||
      eval.seq_len > model.embedding.max_len)
    throw std::invalid_argument("config: sequence length exceeds embedding max_len");
  if (pretrain_seq_len > model.encoder.max_len || finetune_seq_len > model.encoder.max_len ||
      eval.seq_len > model.encoder.max_len)
    throw std::invalid_argument("config: sequence length exceeds encoder max_len");
}

ScheduleConfig RunConfig::schedule(int total_steps) const {
  ScheduleConfig s;
  s.warmup_steps = std::min(warmup_steps, total_steps);
  s.total_steps = total_steps;
  s.backbone_start = backbone_lr_start;
  s.backbone_peak = backbone_lr_peak;
  s.head_start = head_lr_start;
  s.head_end = head_lr_end;
  return s;
}

}  // namespace argus
