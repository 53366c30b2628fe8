#pragma once

// Adam with global gradient-norm clipping and the two-group learning-rate
// schedule: backbone warms up linearly then stays constant, heads stay
// constant through warmup then decay linearly.

#include <cstdint>
#include <vector>

#include "argus/params.hpp"

namespace argus {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;
};

struct ScheduleConfig {
  int warmup_steps = 300;
  int total_steps = 1;
  double backbone_start = 1e-5;
  double backbone_peak = 1e-4;
  double head_start = 1e-3;
  double head_end = 1e-4;
};

// group: false = backbone, true = head. Steps past total clamp to the final
// value.
double lr_schedule(int step, bool head_group, const ScheduleConfig& cfg);

// Scales all gradients so the global L2 norm is at most max_norm; returns the
// pre-clip norm.
double clip_global_norm(ParamStore& params, double max_norm);

class AdamOptimizer {
 public:
  AdamOptimizer(ParamStore& params, const AdamConfig& cfg);

  // Clips, then applies one Adam update with per-group learning rates. A step
  // with any non-finite gradient is skipped entirely and counted.
  void step(double lr_backbone, double lr_head);

  int64_t steps_taken() const { return t_; }
  int64_t steps_skipped() const { return skipped_; }

  // moment state for checkpointing, index-aligned with params.all()
  struct Slot {
    std::vector<double> m;
    std::vector<double> v;
  };
  const std::vector<Slot>& slots() const { return slots_; }
  void restore(const std::vector<Slot>& slots, int64_t t, int64_t skipped);

 private:
  ParamStore& params_;
  AdamConfig cfg_;
  std::vector<Slot> slots_;
  int64_t t_ = 0;
  int64_t skipped_ = 0;
};

}  // namespace argus
