#include "argus/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "argus/checkpoint.hpp"
#include "argus/negatives.hpp"
#include "argus/objectives.hpp"
#include "argus/optimizer.hpp"
#include "argus/world.hpp"

namespace argus {

namespace {

namespace fs = std::filesystem;

std::string events_path(const RunConfig& cfg) {
  return cfg.events_path.empty() ? cfg.out_dir + "/events.jsonl" : cfg.events_path;
}

std::string header_path(const RunConfig& cfg) {
  return cfg.header_path.empty() ? cfg.out_dir + "/header.json" : cfg.header_path;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << text;
}

void echo_config(const RunConfig& cfg, const std::string& stage) {
  fs::create_directories(cfg.out_dir);
  write_text(cfg.out_dir + "/config." + stage + ".json", cfg.to_json());
}

struct Dataset {
  std::vector<UserSequence> sequences;
  DatasetHeader header;
  TemporalSplit split;
};

Dataset load_dataset(const RunConfig& cfg) {
  Dataset d;
  d.header = DatasetHeader::load(header_path(cfg));
  d.sequences = load_events(events_path(cfg));
  int64_t cutoff = static_cast<int64_t>(d.header.n_days - cfg.holdout_days) * 86400;
  if (cutoff <= 0) throw std::runtime_error("holdout window covers the whole dataset");
  d.split = temporal_split(d.sequences, cutoff, static_cast<int64_t>(cfg.holdout_days) * 86400);
  return d;
}

}  // namespace

void generate_dataset(const RunConfig& cfg) {
  echo_config(cfg, "generate");
  GenerateResult gen = generate(cfg.world);
  save_events(cfg.out_dir + "/events.jsonl", gen.sequences);
  gen.header.save(cfg.out_dir + "/header.json");
  gen.world.save(cfg.out_dir + "/world.json");
}

TrainResult pretrain(const RunConfig& cfg) {
  echo_config(cfg, "pretrain");
  Dataset data = load_dataset(cfg);
  std::vector<Chunk> chunks = chunk_sequences(data.split.train, cfg.pretrain_seq_len);
  if (chunks.empty()) throw std::runtime_error("pretrain: no training chunks");

  Rng order_rng(hash_combine(cfg.seed, 0x0d3a));
  std::vector<size_t> order(chunks.size());
  std::iota(order.begin(), order.end(), 0);
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[order_rng.next_below(i)]);

  Model model(cfg.model, hash_combine(cfg.seed, 0x1417));
  AdamOptimizer opt(model.params(), cfg.adam);
  CountMinSketch sketch(cfg.sketch_depth, cfg.sketch_width, hash_combine(cfg.seed, 0x5e7c));
  Rng neg_rng(hash_combine(cfg.seed, 0x4e9));
  DropoutRng drop(hash_combine(cfg.seed, 0xd209));

  int total_steps = static_cast<int>((chunks.size() + cfg.batch_size - 1) / cfg.batch_size);
  ScheduleConfig sched = cfg.schedule(total_steps);
  TrainResult res;

  for (int step = 0; step < total_steps; ++step) {
    std::vector<Chunk> batch;
    for (int b = 0; b < cfg.batch_size; ++b) {
      size_t idx = static_cast<size_t>(step) * cfg.batch_size + b;
      if (idx >= order.size()) break;
      batch.push_back(chunks[order[idx]]);
    }
    std::vector<BatchPositive> positives = batch_positives(batch);
    for (const auto& p : positives) sketch.insert(p.item_id);
    NegativeBatch negs = draw_negatives(positives, data.header.item_ids, cfg.train_neg_uniform,
                                        cfg.train_neg_inbatch, sketch, neg_rng);
    Graph g;
    PretrainLoss loss = pretrain_loss(g, model, batch, negs, true, drop);
    model.params().zero_grads();
    g.backward(loss.total);
    opt.step(lr_schedule(step, false, sched), lr_schedule(step, true, sched));

    double lv = loss.total->v[0];
    if (step == 0) res.first_loss = lv;
    res.last_loss = lv;
    res.losses.push_back(lv);
    if (cfg.log_every > 0 && (step % cfg.log_every == 0 || step == total_steps - 1))
      std::fprintf(stderr, "pretrain step %d/%d loss %.4f (next-item %.4f, feedback %.4f)\n",
                   step + 1, total_steps, lv, loss.nip, loss.fp);
  }
  res.steps = opt.steps_taken();
  res.skipped_steps = opt.steps_skipped();
  res.checkpoint_path = cfg.out_dir + "/pretrain.ckpt";
  save_checkpoint(res.checkpoint_path, model, opt.steps_taken(), &opt, &sketch);
  return res;
}

TrainResult finetune(const RunConfig& cfg, const std::string& init_ckpt) {
  echo_config(cfg, "finetune");
  Dataset data = load_dataset(cfg);
  Model model(cfg.model, hash_combine(cfg.seed, 0x1417));
  if (!init_ckpt.empty()) load_checkpoint(init_ckpt, model);

  std::vector<Chunk> chunks = chunk_sequences(data.split.train, cfg.finetune_seq_len);
  if (chunks.empty()) throw std::runtime_error("finetune: no training chunks");
  Rng order_rng(hash_combine(cfg.seed, 0xf1d3));
  std::vector<size_t> order(chunks.size());
  std::iota(order.begin(), order.end(), 0);
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[order_rng.next_below(i)]);

  AdamOptimizer opt(model.params(), cfg.adam);
  DropoutRng drop(hash_combine(cfg.seed, 0xd210));
  int total_steps = static_cast<int>((chunks.size() + cfg.batch_size - 1) / cfg.batch_size);
  ScheduleConfig sched = cfg.schedule(total_steps);
  TrainResult res;
  int64_t chunks_with_pairs = 0;

  for (int step = 0; step < total_steps; ++step) {
    Graph g;
    Tensor loss_sum = nullptr;
    int64_t batch_pairs = 0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      size_t idx = static_cast<size_t>(step) * cfg.batch_size + b;
      if (idx >= order.size()) break;
      const Chunk& chunk = chunks[order[idx]];
      const std::vector<Interaction>& evs = chunk.interactions;
      auto pairs = build_impression_pairs(evs, cfg.pair_window, cfg.listen_tiebreak);
      if (pairs.empty()) continue;
      ++chunks_with_pairs;

      ChunkForward fwd = model.forward_chunk(g, evs, true, drop);
      // states with the trainable initial state at row 0; aligned index s maps
      // to row s + 1
      std::vector<Tensor> sp{model.initial_state(), fwd.states};
      Tensor states_plus = concat_rows(g, std::span<const Tensor>(sp.data(), 2));

      std::vector<int64_t> state_ts;
      for (const auto& ev : evs) state_ts.push_back(ev.ts);
      std::vector<int> pos_rows, neg_rows;
      std::vector<std::string> pos_ids, neg_ids;
      for (const auto& pr : pairs) {
        pos_rows.push_back(pr.pos);
        neg_rows.push_back(pr.neg);
        pos_ids.push_back(evs[pr.pos].item_id);
        neg_ids.push_back(evs[pr.neg].item_id);
      }
      auto aligned_rows = [&](const std::vector<int>& rows) {
        std::vector<int64_t> ts;
        for (int r : rows) ts.push_back(evs[r].ts);
        auto aligned = align_impressions(state_ts, ts, cfg.latency);
        std::vector<int> idxs;
        for (const auto& a : aligned) idxs.push_back(a.state + 1);
        return idxs;
      };
      Tensor h_pos = gather_rows(g, states_plus, aligned_rows(pos_rows));
      Tensor h_neg = gather_rows(g, states_plus, aligned_rows(neg_rows));
      Tensor s_pos = two_tower_score(g, h_pos, model.embed_items(g, pos_ids));
      Tensor s_neg = two_tower_score(g, h_neg, model.embed_items(g, neg_ids));
      Tensor pl = sum_all(g, finetune_pair_loss(g, s_pos, s_neg));
      loss_sum = loss_sum ? add(g, loss_sum, pl) : pl;
      batch_pairs += static_cast<int64_t>(pairs.size());
    }
    if (!loss_sum) continue;  // no pairs in this batch
    Tensor loss = scale(g, loss_sum, 1.0 / static_cast<double>(batch_pairs));
    model.params().zero_grads();
    g.backward(loss);
    opt.step(lr_schedule(step, false, sched), lr_schedule(step, true, sched));
    res.pairs += batch_pairs;

    double lv = loss->v[0];
    if (res.steps == 0) res.first_loss = lv;
    res.last_loss = lv;
    res.losses.push_back(lv);
    res.steps = opt.steps_taken();
    if (cfg.log_every > 0 && (step % cfg.log_every == 0 || step == total_steps - 1))
      std::fprintf(stderr, "finetune step %d/%d pair loss %.4f (%lld pairs)\n", step + 1,
                   total_steps, lv, static_cast<long long>(batch_pairs));
  }
  if (res.pairs == 0)
    throw std::runtime_error(
        "finetune: no impression pairs found (chunks: " + std::to_string(chunks.size()) +
        ", chunks with pairs: " + std::to_string(chunks_with_pairs) +
        "); check the pair window and feedback ranks");
  res.skipped_steps = opt.steps_skipped();
  res.checkpoint_path = cfg.out_dir + "/finetune.ckpt";
  save_checkpoint(res.checkpoint_path, model, opt.steps_taken(), &opt, nullptr);
  return res;
}

MetricsReport evaluate_run(const RunConfig& cfg, const std::string& ckpt) {
  echo_config(cfg, "evaluate");
  Dataset data = load_dataset(cfg);
  Model model(cfg.model, hash_combine(cfg.seed, 0x1417));
  if (!ckpt.empty()) load_checkpoint(ckpt, model);

  World world;
  const World* world_ptr = nullptr;
  std::string wp = cfg.world_path.empty() ? cfg.out_dir + "/world.json" : cfg.world_path;
  if (fs::exists(wp)) {
    world = World::load(wp);
    world_ptr = &world;
  }
  if (cfg.eval.pa_baseline == "oracle-relevance" && !world_ptr)
    throw std::runtime_error("evaluate: oracle baseline requires world state at " + wp);

  EvalConfig ec = cfg.eval;
  ec.seed = cfg.seed;
  EvalOutput out = evaluate_model(model, data.split, data.header, world_ptr, ec);

  write_text(cfg.out_dir + "/report.json", out.report.to_json());
  write_text(cfg.out_dir + "/report.txt", out.report.render_table());
  std::ostringstream scores;
  for (const auto& s : out.scores)
    scores << s.user_id << " " << s.ts << " " << s.item_id << " " << s.score << "\n";
  write_text(cfg.out_dir + "/scores.txt", scores.str());
  return out.report;
}

}  // namespace argus
