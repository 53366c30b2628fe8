#pragma once

// Stage drivers: dataset generation, single-epoch pre-training, one-pass
// two-tower fine-tuning, and holdout evaluation. Each writes its artifacts
// and the resolved config into the configured output directory.

#include <cstdint>
#include <string>
#include <vector>

#include "argus/config.hpp"
#include "argus/evaluation.hpp"

namespace argus {

struct TrainResult {
  std::string checkpoint_path;
  int64_t steps = 0;
  int64_t skipped_steps = 0;
  double first_loss = 0.0;
  double last_loss = 0.0;
  std::vector<double> losses;  // one value per optimizer step
  int64_t pairs = 0;           // fine-tuning only
};

// Writes events.jsonl, header.json and world.json under out_dir.
void generate_dataset(const RunConfig& cfg);

TrainResult pretrain(const RunConfig& cfg);

// init_ckpt empty: random initialization (the from-scratch ablation).
TrainResult finetune(const RunConfig& cfg, const std::string& init_ckpt);

// Writes report.json, report.txt and scores.txt under out_dir.
MetricsReport evaluate_run(const RunConfig& cfg, const std::string& ckpt);

}  // namespace argus
