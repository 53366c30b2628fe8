#include "argus/negatives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace argus {

CountMinSketch::CountMinSketch(int depth, int width, uint64_t seed)
    : depth_(depth), width_(width), seed_(seed) {
  if (depth < 1 || width < 1) throw std::invalid_argument("CountMinSketch: bad dimensions");
  counters_.assign(static_cast<size_t>(depth) * width, 0);
}

size_t CountMinSketch::cell(int row, const std::string& item_id) const {
  uint64_t h = hash_string(item_id, hash_combine(seed_, static_cast<uint64_t>(row)));
  return static_cast<size_t>(row) * width_ + h % width_;
}

void CountMinSketch::insert(const std::string& item_id) {
  for (int r = 0; r < depth_; ++r) ++counters_[cell(r, item_id)];
  ++total_;
}

uint64_t CountMinSketch::estimate(const std::string& item_id) const {
  uint64_t best = UINT64_MAX;
  for (int r = 0; r < depth_; ++r) best = std::min(best, counters_[cell(r, item_id)]);
  return best;
}

double CountMinSketch::log_q(const std::string& item_id) const {
  if (total_ == 0) throw std::runtime_error("CountMinSketch::log_q: empty sketch");
  uint64_t est = std::max<uint64_t>(estimate(item_id), 1);
  return std::log(static_cast<double>(est) / static_cast<double>(total_));
}

void CountMinSketch::restore(const std::vector<uint64_t>& counters, uint64_t total) {
  if (counters.size() != counters_.size())
    throw std::invalid_argument("CountMinSketch::restore: size mismatch");
  counters_ = counters;
  total_ = total;
}

NegativeBatch draw_negatives(const std::vector<BatchPositive>& positives,
                             const std::vector<std::string>& catalog, int n_uniform,
                             int n_inbatch, const CountMinSketch& sketch, Rng& rng) {
  if (catalog.empty()) throw std::invalid_argument("draw_negatives: empty catalog");
  if (n_inbatch > 0 && positives.empty())
    throw std::invalid_argument("draw_negatives: in-batch negatives need at least one positive");
  NegativeBatch batch;
  batch.items.reserve(n_uniform + n_inbatch);
  double uniform_log_q = -std::log(static_cast<double>(catalog.size()));
  for (int i = 0; i < n_uniform; ++i) {
    Negative n;
    n.item_id = catalog[rng.next_below(catalog.size())];
    n.log_q = uniform_log_q;
    n.in_batch = false;
    batch.items.push_back(std::move(n));
  }
  for (int i = 0; i < n_inbatch; ++i) {
    const BatchPositive& src = positives[rng.next_below(positives.size())];
    Negative n;
    n.item_id = src.item_id;
    n.log_q = sketch.log_q(src.item_id);
    n.in_batch = true;
    n.src_chunk = src.chunk;
    n.src_pos = src.pos;
    batch.items.push_back(std::move(n));
  }
  return batch;
}

}  // namespace argus
