#pragma once

// Mixed uniform + in-batch negative sampling for the sampled softmax, with a
// count-min sketch estimating the in-batch sampling distribution for logQ
// correction. Uniform negatives get an exact analytic logQ.

#include <cstdint>
#include <string>
#include <vector>

#include "argus/tensor.hpp"

namespace argus {

class CountMinSketch {
 public:
  CountMinSketch(int depth, int width, uint64_t seed);

  void insert(const std::string& item_id);
  // Minimum over rows; never underestimates the true count.
  uint64_t estimate(const std::string& item_id) const;
  // log(max(estimate, 1) / total inserts); requires a nonempty sketch.
  double log_q(const std::string& item_id) const;

  uint64_t total() const { return total_; }
  int depth() const { return depth_; }
  int width() const { return width_; }
  uint64_t seed() const { return seed_; }

  const std::vector<uint64_t>& counters() const { return counters_; }
  void restore(const std::vector<uint64_t>& counters, uint64_t total);

 private:
  size_t cell(int row, const std::string& item_id) const;

  int depth_;
  int width_;
  uint64_t seed_;
  std::vector<uint64_t> counters_;  // depth x width, row-major
  uint64_t total_ = 0;
};

// One training positive, identified by its position in the effective batch.
struct BatchPositive {
  int chunk = -1;
  int pos = -1;
  std::string item_id;
};

struct Negative {
  std::string item_id;
  double log_q = 0.0;
  bool in_batch = false;
  // provenance of in-batch draws, for own-positive exclusion by position
  int src_chunk = -1;
  int src_pos = -1;
};

struct NegativeBatch {
  std::vector<Negative> items;
};

// Uniform negatives are i.i.d. over the catalog with logQ = -log(|catalog|);
// in-batch negatives are drawn (with replacement) from the batch positives
// with logQ from the sketch over the training-positive stream.
NegativeBatch draw_negatives(const std::vector<BatchPositive>& positives,
                             const std::vector<std::string>& catalog, int n_uniform,
                             int n_inbatch, const CountMinSketch& sketch, Rng& rng);

}  // namespace argus
