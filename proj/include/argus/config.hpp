#pragma once

// One JSON document configures every stage. Every field has a default;
// desk-scale values are the defaults, the paper-scale counterparts are noted
// next to each field.

#include <cstdint>
#include <string>

#include "argus/evaluation.hpp"
#include "argus/model.hpp"
#include "argus/optimizer.hpp"
#include "argus/world.hpp"

namespace argus {

struct RunConfig {
  std::string out_dir = "out";
  std::string events_path;  // JSONL interaction log
  std::string header_path;  // dataset header JSON
  std::string world_path;   // optional ground-truth world state
  uint64_t seed = 1;
  bool deterministic = false;

  WorldConfig world;  // generate stage
  ModelConfig model;

  int batch_size = 32;        // full scale: 4096 pre-train / 2048 fine-tune
  int warmup_steps = 300;     // full scale: 3000
  int pretrain_seq_len = 128; // full scale: 512
  int finetune_seq_len = 512; // full scale: 2048

  int train_neg_uniform = 128;  // full scale: 8192
  int train_neg_inbatch = 128;  // full scale: 8192
  int sketch_depth = 4;
  int sketch_width = 4096;

  AdamConfig adam;
  double backbone_lr_start = 1e-5;
  double backbone_lr_peak = 1e-4;
  double head_lr_start = 1e-3;
  double head_lr_end = 1e-4;

  int64_t latency = 86400;  // one simulated day
  int pair_window = 2;
  bool listen_tiebreak = false;
  int holdout_days = 7;

  EvalConfig eval;  // eval negatives at full scale: 8192 + 8192
  int log_every = 20;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
  std::string to_json() const;
  std::string digest() const;

  void validate() const;
  ScheduleConfig schedule(int total_steps) const;
};

}  // namespace argus
