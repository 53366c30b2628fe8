#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "argus/checkpoint.hpp"
#include "argus/config.hpp"
#include "argus/trainer.hpp"

using namespace argus;
namespace fs = std::filesystem;

namespace {

RunConfig toy_config(const std::string& out_dir, uint64_t seed) {
  RunConfig cfg;
  cfg.out_dir = out_dir;
  cfg.seed = seed;
  cfg.world.n_users = 40;
  cfg.world.n_items = 80;
  cfg.world.n_days = 10;
  cfg.world.seed = seed;
  cfg.model.embedding.table_rows = 512;
  cfg.model.embedding.sub_dim = 8;
  cfg.model.embedding.max_len = 64;
  cfg.model.encoder.n_layers = 1;
  cfg.model.encoder.width = 16;
  cfg.model.encoder.n_heads = 2;
  cfg.model.encoder.max_len = 64;
  cfg.batch_size = 8;
  cfg.warmup_steps = 4;
  cfg.pretrain_seq_len = 32;
  cfg.finetune_seq_len = 64;
  cfg.train_neg_uniform = 16;
  cfg.train_neg_inbatch = 16;
  cfg.sketch_width = 512;
  cfg.holdout_days = 3;
  cfg.eval.seq_len = 32;
  cfg.eval.n_uniform = 32;
  cfg.eval.n_inbatch = 32;
  cfg.log_every = 0;
  return cfg;
}

std::string fresh_dir(const std::string& name) {
  std::string dir = "trainer_test_" + name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  return std::vector<char>(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config: defaults parse, unknown keys rejected, json round-trip") {
  RunConfig defaults = RunConfig::from_json_text("{}");
  CHECK(defaults.batch_size == 32);
  CHECK(defaults.warmup_steps == 300);
  CHECK(defaults.pretrain_seq_len == 128);
  CHECK(defaults.finetune_seq_len == 512);
  CHECK(defaults.train_neg_uniform == 128);
  CHECK(defaults.latency == 86400);
  CHECK(defaults.eval.n_uniform == 512);
  CHECK(defaults.adam.clip_norm == 1.0);

  CHECK_THROWS_AS(RunConfig::from_json_text("{\"batchsize\": 3}"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_json_text("{\"model\": {\"encoders\": {}}}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_json_text("{\"batch_size\": 0}"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_json_text("{\"pretrain_seq_len\": 4096}"),
                  std::invalid_argument);

  RunConfig cfg = toy_config("x", 3);
  RunConfig back = RunConfig::from_json_text(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.digest() == cfg.digest());
  back.seed = 99;
  CHECK(back.digest() != cfg.digest());
}

TEST_CASE("config schedule mapping clamps warmup to short runs") {
  RunConfig cfg;
  cfg.warmup_steps = 300;
  ScheduleConfig s = cfg.schedule(50);
  CHECK(s.warmup_steps == 50);
  CHECK(s.total_steps == 50);
  CHECK(lr_schedule(0, false, s) == doctest::Approx(1e-5));
}

TEST_CASE("checkpoint round-trip restores parameters, moments and sketch") {
  std::string dir = fresh_dir("ckpt");
  ModelConfig mc;
  mc.embedding.table_rows = 64;
  mc.embedding.sub_dim = 4;
  mc.embedding.max_len = 16;
  mc.encoder.n_layers = 1;
  mc.encoder.width = 8;
  mc.encoder.n_heads = 2;
  mc.encoder.max_len = 16;
  Model model(mc, 7);
  AdamOptimizer opt(model.params(), {});
  // take a step so the moments are nontrivial
  Rng rng(5);
  for (const auto& p : model.params().all())
    for (double& g : p->t.g) g = rng.gaussian();
  opt.step(1e-3, 1e-3);
  CountMinSketch sketch(2, 32, 9);
  for (int i = 0; i < 50; ++i) sketch.insert("i" + std::to_string(i % 7));

  std::string path = dir + "/model.ckpt";
  save_checkpoint(path, model, 42, &opt, &sketch);

  Model other(mc, 8);  // different init
  AdamOptimizer opt2(other.params(), {});
  CountMinSketch sketch2(2, 32, 9);
  CheckpointExtras extras = load_checkpoint(path, other, &opt2, &sketch2);
  CHECK(extras.step == 42);
  CHECK(extras.has_optimizer);
  CHECK(extras.has_sketch);
  const auto& a = model.params().all();
  const auto& b = other.params().all();
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i]->t.v == b[i]->t.v);
  CHECK(opt2.steps_taken() == 1);
  CHECK(opt2.slots()[0].m == opt.slots()[0].m);
  CHECK(sketch2.estimate("i3") == sketch.estimate("i3"));
  CHECK(sketch2.total() == sketch.total());

  // digest mismatch refuses to load
  ModelConfig mc2 = mc;
  mc2.encoder.width = 16;
  mc2.encoder.n_heads = 2;
  Model wrong(mc2, 7);
  CHECK_THROWS_AS(load_checkpoint(path, wrong), std::runtime_error);
  CHECK(peek_checkpoint_digest(path) == mc.digest());
}

TEST_CASE("pipeline: generate, pretrain improves loss, evaluate is checkpoint-stable") {
  std::string dir = fresh_dir("pipeline");
  RunConfig cfg = toy_config(dir, 11);
  generate_dataset(cfg);
  CHECK(fs::exists(dir + "/events.jsonl"));
  CHECK(fs::exists(dir + "/header.json"));
  CHECK(fs::exists(dir + "/world.json"));

  TrainResult pre = pretrain(cfg);
  CHECK(pre.steps > 3);
  CHECK(pre.skipped_steps == 0);
  CHECK(fs::exists(pre.checkpoint_path));

  // temperature stayed inside its clamp
  Model model(cfg.model, 0);
  load_checkpoint(pre.checkpoint_path, model);
  double e_tau = std::exp(model.temperature()->v[0]);
  CHECK(e_tau >= 0.01);
  CHECK(e_tau <= 100.0);

  MetricsReport r1 = evaluate_run(cfg, pre.checkpoint_path);
  MetricsReport r2 = evaluate_run(cfg, pre.checkpoint_path);
  CHECK(r1.to_json() == r2.to_json());
  CHECK(fs::exists(dir + "/report.json"));
  CHECK(fs::exists(dir + "/report.txt"));
  CHECK(fs::exists(dir + "/scores.txt"));
  CHECK(r1.n_steps > 0);

  TrainResult ft = finetune(cfg, pre.checkpoint_path);
  CHECK(ft.pairs > 0);
  CHECK(ft.steps > 0);
  CHECK(fs::exists(ft.checkpoint_path));
  MetricsReport fr = evaluate_run(cfg, ft.checkpoint_path);
  CHECK(fr.n_pairs > 0);

  fs::remove_all(dir);
}

TEST_CASE("pretraining lowers the loss (median of 3 seeds)") {
  int improved = 0;
  for (uint64_t seed : {101, 202, 303}) {
    std::string dir = fresh_dir("improve" + std::to_string(seed));
    RunConfig cfg = toy_config(dir, seed);
    cfg.world.n_users = 80;
    cfg.world.n_days = 12;
    generate_dataset(cfg);
    TrainResult r = pretrain(cfg);
    REQUIRE(r.losses.size() >= 8);
    size_t q = std::max<size_t>(1, r.losses.size() / 4);
    double early = 0, late = 0;
    for (size_t i = 0; i < q; ++i) {
      early += r.losses[i];
      late += r.losses[r.losses.size() - 1 - i];
    }
    if (late < early) ++improved;
    fs::remove_all(dir);
  }
  CHECK(improved >= 2);
}

TEST_CASE("pretraining is bit-deterministic under a fixed seed") {
  std::string d1 = fresh_dir("det1");
  std::string d2 = fresh_dir("det2");
  RunConfig c1 = toy_config(d1, 23);
  c1.world.n_users = 20;
  c1.world.n_days = 8;
  RunConfig c2 = c1;
  c2.out_dir = d2;
  generate_dataset(c1);
  generate_dataset(c2);
  CHECK(slurp(d1 + "/events.jsonl") == slurp(d2 + "/events.jsonl"));
  TrainResult r1 = pretrain(c1);
  TrainResult r2 = pretrain(c2);
  CHECK(slurp(r1.checkpoint_path) == slurp(r2.checkpoint_path));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("finetune reports an explicit error when the data has no pairs") {
  std::string dir = fresh_dir("nopairs");
  // craft a log whose feedback is identical everywhere: no rank differences
  std::vector<UserSequence> seqs(2);
  for (int u = 0; u < 2; ++u) {
    seqs[u].user_id = "u" + std::to_string(u);
    for (int t = 0; t < 40; ++t) {
      Interaction ev;
      ev.user_id = seqs[u].user_id;
      ev.ts = static_cast<int64_t>(t) * 3600;
      ev.surface = "radio";
      ev.device = "ios";
      ev.item_id = "i" + std::to_string(t % 5);
      ev.feedback = {0, 0, 1};
      ev.is_impression = true;
      seqs[u].interactions.push_back(ev);
    }
  }
  save_events(dir + "/events.jsonl", seqs);
  DatasetHeader header;
  header.n_users = 2;
  header.n_items = 5;
  header.n_days = 2;
  for (int i = 0; i < 5; ++i) header.item_ids.push_back("i" + std::to_string(i));
  header.save(dir + "/header.json");

  RunConfig cfg = toy_config(dir, 3);
  cfg.holdout_days = 1;
  CHECK_THROWS_WITH_AS(static_cast<void>(finetune(cfg, "")),
                       doctest::Contains("no impression pairs"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("impression scores depend on history only through the aligned state") {
  // mutate an interaction that happens after every aligned state but before
  // the scored impressions: the two-tower scores must not move
  ModelConfig mc;
  mc.embedding.table_rows = 256;
  mc.embedding.sub_dim = 8;
  mc.embedding.max_len = 64;
  mc.encoder.n_layers = 1;
  mc.encoder.width = 16;
  mc.encoder.n_heads = 2;
  mc.encoder.max_len = 64;
  Model model(mc, 77);

  auto make_split = [&](const std::string& mutated_item) {
    TemporalSplit split;
    UserSequence train_seq;
    train_seq.user_id = "u0";
    HoldoutSequence hs;
    hs.user_id = "u0";
    for (int t = 0; t < 10; ++t) {
      Interaction ev;
      ev.user_id = "u0";
      ev.ts = static_cast<int64_t>(t) * 1000;  // all well before the holdout day
      ev.surface = "radio";
      ev.device = "ios";
      ev.item_id = "i" + std::to_string(t % 6);
      ev.feedback = {t % 2, 0, t % 4};
      ev.is_impression = true;
      hs.context.push_back(ev);
      train_seq.interactions.push_back(ev);
    }
    // first target is organic and mutable; the rest are impressions whose
    // alignment limit (ts - one day) predates every target
    int64_t day = 2 * 86400;
    Interaction organic;
    organic.user_id = "u0";
    organic.ts = day;
    organic.surface = "search";
    organic.device = "ios";
    organic.item_id = mutated_item;
    organic.feedback = {1, 0, 3};
    organic.is_impression = false;
    hs.targets.push_back(organic);
    for (int i = 0; i < 3; ++i) {
      Interaction imp;
      imp.user_id = "u0";
      imp.ts = day + 100 + i;
      imp.surface = "radio";
      imp.device = "ios";
      imp.item_id = "i" + std::to_string(i);
      imp.feedback = {i % 2, 0, i};
      imp.is_impression = true;
      hs.targets.push_back(imp);
    }
    split.train.push_back(train_seq);
    split.test.push_back(hs);
    return split;
  };

  DatasetHeader header;
  header.n_users = 1;
  header.n_items = 6;
  header.n_days = 3;
  for (int i = 0; i < 6; ++i) header.item_ids.push_back("i" + std::to_string(i));

  EvalConfig ec;
  ec.seq_len = 32;
  ec.n_uniform = 16;
  ec.n_inbatch = 16;
  ec.pa_baseline = "constant";
  ec.seed = 9;
  EvalOutput a = evaluate_model(model, make_split("i1"), header, nullptr, ec);
  EvalOutput b = evaluate_model(model, make_split("i5"), header, nullptr, ec);
  REQUIRE(a.scores.size() == 3);
  REQUIRE(b.scores.size() == 3);
  for (size_t i = 0; i < a.scores.size(); ++i) {
    CHECK(a.scores[i].item_id == b.scores[i].item_id);
    CHECK(a.scores[i].score == b.scores[i].score);
  }
  // sanity: mutating pre-alignment history does move the scores
  auto c_split = make_split("i1");
  c_split.test[0].context[3].item_id = "i5";
  EvalOutput c = evaluate_model(model, c_split, header, nullptr, ec);
  bool moved = false;
  for (size_t i = 0; i < a.scores.size(); ++i)
    if (c.scores[i].score != a.scores[i].score) moved = true;
  CHECK(moved);
}
