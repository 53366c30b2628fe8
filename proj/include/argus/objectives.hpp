#pragma once

// Training objectives: logQ-corrected sampled-softmax next-item loss,
// factorized feedback cross-entropy, their combination for pre-training, and
// the latency-aligned pairwise logistic loss for two-tower fine-tuning.

#include <cstdint>
#include <utility>
#include <vector>

#include "argus/model.hpp"
#include "argus/negatives.hpp"
#include "argus/tensor.hpp"

namespace argus {

// Effective temperature scale e^tau clamp, fixed by design.
inline constexpr double kTempLo = 0.01;
inline constexpr double kTempHi = 100.0;

// Cosine similarity of each query row against each item row, divided by
// clamp(e^tau). queries [R x H], items [N x H] -> [R x N].
Tensor similarity(Graph& g, Tensor queries, Tensor items, Tensor tau);

// Per-step sampled-softmax loss [R x 1]. pos_items row r is the positive for
// query row r; all queries share the negative set. masked entries (row, neg
// index) are a step's own positive appearing among in-batch negatives and are
// excluded from the denominator.
Tensor nip_loss(Graph& g, Tensor queries, Tensor pos_items, Tensor neg_items,
                const std::vector<double>& neg_log_q, Tensor tau,
                const std::vector<std::pair<int, int>>& masked = {});

// Sum over feedback factors of categorical cross-entropy, per step [T x 1].
Tensor fp_loss(Graph& g, const std::vector<Tensor>& logits_per_factor,
               const std::vector<std::vector<int>>& labels_per_factor);

struct PretrainLoss {
  Tensor total;      // scalar: mean over chunks of (mean nip + mean fp)
  double nip = 0.0;  // batch-mean components for logging
  double fp = 0.0;
};

// Forward + both losses for a batch of chunks sharing one negative set. Every
// step is a prediction target; the first step's previous state is the
// trainable initial state.
PretrainLoss pretrain_loss(Graph& g, const Model& model, const std::vector<Chunk>& batch,
                           const NegativeBatch& negatives, bool train, DropoutRng& drop);

// Positions of a batch's positive items, for sketch insertion and in-batch
// negative drawing.
std::vector<BatchPositive> batch_positives(const std::vector<Chunk>& batch);

struct AlignedImpression {
  int impression = 0;  // index into the impression list
  int state = -1;      // index into the state list; -1 = initial-state sentinel
  int64_t latency = 0;
};

// Each impression is matched to the latest state with
// state_ts <= imp_ts - latency. States must be sorted by timestamp.
std::vector<AlignedImpression> align_impressions(const std::vector<int64_t>& state_ts,
                                                 const std::vector<int64_t>& impression_ts,
                                                 int64_t latency);

// Raw dot product per row, [R x 1]. No normalization, no temperature.
Tensor two_tower_score(Graph& g, Tensor states, Tensor items);

// log(1 + e^-(s_pos - s_neg)) per row, [R x 1], via stable log-sum-exp.
Tensor finetune_pair_loss(Graph& g, Tensor s_pos, Tensor s_neg);

}  // namespace argus
