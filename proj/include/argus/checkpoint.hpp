#pragma once

// Self-describing binary checkpoint: named parameter tensors with shapes, an
// architecture digest, optimizer moments and the negative-sampling sketch.
//
// Layout (little-endian):
//   magic "ARGUSCK1"
//   u32 digest length, digest bytes
//   i64 step
//   u32 tensor count, then per tensor: u32 name length, name bytes,
//     i32 rows, i32 cols, rows*cols f64 values
//   u8 has_optimizer; if set: i64 steps taken, i64 steps skipped, then per
//     tensor (same order): numel f64 first moments, numel f64 second moments
//   u8 has_sketch; if set: i32 depth, i32 width, u64 seed, u64 total,
//     depth*width u64 counters

#include <cstdint>
#include <string>

#include "argus/model.hpp"
#include "argus/negatives.hpp"
#include "argus/optimizer.hpp"

namespace argus {

void save_checkpoint(const std::string& path, const Model& model, int64_t step,
                     const AdamOptimizer* opt = nullptr, const CountMinSketch* sketch = nullptr);

struct CheckpointExtras {
  int64_t step = 0;
  bool has_optimizer = false;
  bool has_sketch = false;
};

// Loads tensors into the model (digest and shapes must match); restores the
// optimizer and sketch when both the file and the caller provide them.
CheckpointExtras load_checkpoint(const std::string& path, Model& model,
                                 AdamOptimizer* opt = nullptr, CountMinSketch* sketch = nullptr);

// Digest stored in a checkpoint file, for mismatch diagnostics.
std::string peek_checkpoint_digest(const std::string& path);

}  // namespace argus
