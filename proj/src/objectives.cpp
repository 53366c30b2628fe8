#include "argus/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace argus {

Tensor similarity(Graph& g, Tensor queries, Tensor items, Tensor tau) {
  Tensor cos = matmul_nt(g, row_normalize(g, queries), row_normalize(g, items));
  return apply_temperature(g, cos, tau, kTempLo, kTempHi);
}

Tensor nip_loss(Graph& g, Tensor queries, Tensor pos_items, Tensor neg_items,
                const std::vector<double>& neg_log_q, Tensor tau,
                const std::vector<std::pair<int, int>>& masked) {
  if (queries->rows != pos_items->rows)
    throw std::invalid_argument("nip_loss: query/positive row mismatch");
  if (static_cast<int>(neg_log_q.size()) != neg_items->rows)
    throw std::invalid_argument("nip_loss: logQ count does not match negatives");
  if (neg_items->rows < 1) throw std::invalid_argument("nip_loss: need at least one negative");

  Tensor nq = row_normalize(g, queries);
  Tensor f_pos = apply_temperature(g, rowwise_dot(g, nq, row_normalize(g, pos_items)), tau,
                                   kTempLo, kTempHi);
  Tensor f_neg = apply_temperature(g, matmul_nt(g, nq, row_normalize(g, neg_items)), tau,
                                   kTempLo, kTempHi);
  check_finite(f_pos, "next-item positive score");
  check_finite(f_neg, "next-item negative score");

  int R = queries->rows;
  int N = neg_items->rows;
  std::vector<double> corr(static_cast<size_t>(R) * N);
  for (int r = 0; r < R; ++r)
    for (int n = 0; n < N; ++n) corr[static_cast<size_t>(r) * N + n] = -neg_log_q[n];
  for (const auto& [r, n] : masked) {
    if (r < 0 || r >= R || n < 0 || n >= N)
      throw std::invalid_argument("nip_loss: mask entry out of range");
    corr[static_cast<size_t>(r) * N + n] = -1e30;
  }
  Tensor neg_logits = add(g, f_neg, g.constant(R, N, corr));

  std::vector<Tensor> parts{f_pos, neg_logits};
  Tensor lse = log_sum_exp_rows(g, concat_cols(g, std::span<const Tensor>(parts.data(), 2)));
  return sub(g, lse, f_pos);
}

Tensor fp_loss(Graph& g, const std::vector<Tensor>& logits_per_factor,
               const std::vector<std::vector<int>>& labels_per_factor) {
  if (logits_per_factor.empty() || logits_per_factor.size() != labels_per_factor.size())
    throw std::invalid_argument("fp_loss: factor count mismatch");
  Tensor total = nullptr;
  for (size_t k = 0; k < logits_per_factor.size(); ++k) {
    Tensor ce = cross_entropy_with_logits(g, logits_per_factor[k], labels_per_factor[k]);
    total = total ? add(g, total, ce) : ce;
  }
  return total;
}

std::vector<BatchPositive> batch_positives(const std::vector<Chunk>& batch) {
  std::vector<BatchPositive> pos;
  for (size_t c = 0; c < batch.size(); ++c)
    for (size_t t = 0; t < batch[c].interactions.size(); ++t)
      pos.push_back({static_cast<int>(c), static_cast<int>(t), batch[c].interactions[t].item_id});
  return pos;
}

PretrainLoss pretrain_loss(Graph& g, const Model& model, const std::vector<Chunk>& batch,
                           const NegativeBatch& negatives, bool train, DropoutRng& drop) {
  if (batch.empty()) throw std::invalid_argument("pretrain_loss: empty batch");
  if (negatives.items.empty()) throw std::invalid_argument("pretrain_loss: no negatives");

  std::vector<std::string> neg_ids;
  std::vector<double> neg_log_q;
  for (const auto& n : negatives.items) {
    neg_ids.push_back(n.item_id);
    neg_log_q.push_back(n.log_q);
  }
  Tensor neg_items = model.embed_items(g, neg_ids);

  int n_factors = model.config().schema.n_factors();
  Tensor nip_sum = nullptr;
  Tensor fp_sum = nullptr;
  for (size_t c = 0; c < batch.size(); ++c) {
    const std::vector<Interaction>& evs = batch[c].interactions;
    if (evs.empty()) throw std::invalid_argument("pretrain_loss: empty chunk");
    ChunkForward fwd = model.forward_chunk(g, evs, train, drop);

    std::vector<std::string> pos_ids;
    for (const auto& ev : evs) pos_ids.push_back(ev.item_id);
    Tensor pos_items = model.embed_items(g, pos_ids);

    // a step's own positive must not also act as its negative: mask every
    // negative draw (uniform or in-batch) that hit the same item, so repeated
    // items keep a learnable positive term
    std::vector<std::pair<int, int>> masked;
    for (size_t n = 0; n < negatives.items.size(); ++n) {
      const Negative& neg = negatives.items[n];
      for (size_t r = 0; r < evs.size(); ++r)
        if (evs[r].item_id == neg.item_id)
          masked.emplace_back(static_cast<int>(r), static_cast<int>(n));
    }
    Tensor nip = nip_loss(g, fwd.nip_query, pos_items, neg_items, neg_log_q,
                          model.temperature(), masked);

    std::vector<Tensor> logits;
    std::vector<std::vector<int>> labels(n_factors);
    for (int k = 0; k < n_factors; ++k) {
      logits.push_back(model.feedback_logits(g, fwd.item_state, k));
      for (const auto& ev : evs) labels[k].push_back(ev.feedback.factor(k));
    }
    Tensor fp = fp_loss(g, logits, labels);

    Tensor chunk_nip = mean_all(g, nip);
    Tensor chunk_fp = mean_all(g, fp);
    nip_sum = nip_sum ? add(g, nip_sum, chunk_nip) : chunk_nip;
    fp_sum = fp_sum ? add(g, fp_sum, chunk_fp) : chunk_fp;
  }
  double inv = 1.0 / static_cast<double>(batch.size());
  Tensor nip_mean = scale(g, nip_sum, inv);
  Tensor fp_mean = scale(g, fp_sum, inv);
  PretrainLoss out;
  out.total = add(g, nip_mean, fp_mean);
  out.nip = nip_mean->v[0];
  out.fp = fp_mean->v[0];
  return out;
}

std::vector<AlignedImpression> align_impressions(const std::vector<int64_t>& state_ts,
                                                 const std::vector<int64_t>& impression_ts,
                                                 int64_t latency) {
  if (!std::is_sorted(state_ts.begin(), state_ts.end()))
    throw std::invalid_argument("align_impressions: states not sorted by timestamp");
  std::vector<AlignedImpression> out;
  out.reserve(impression_ts.size());
  for (size_t i = 0; i < impression_ts.size(); ++i) {
    int64_t limit = impression_ts[i] - latency;
    // latest state with ts <= limit
    auto it = std::upper_bound(state_ts.begin(), state_ts.end(), limit);
    AlignedImpression a;
    a.impression = static_cast<int>(i);
    a.state = static_cast<int>(it - state_ts.begin()) - 1;
    a.latency = latency;
    out.push_back(a);
  }
  return out;
}

Tensor two_tower_score(Graph& g, Tensor states, Tensor items) {
  return rowwise_dot(g, states, items);
}

Tensor finetune_pair_loss(Graph& g, Tensor s_pos, Tensor s_neg) {
  if (s_pos->rows != s_neg->rows || s_pos->cols != 1 || s_neg->cols != 1)
    throw std::invalid_argument("finetune_pair_loss: expected matching column vectors");
  Tensor neg_margin = scale(g, sub(g, s_pos, s_neg), -1.0);
  Tensor zero = g.constant(s_pos->rows, 1, std::vector<double>(s_pos->rows, 0.0));
  std::vector<Tensor> parts{zero, neg_margin};
  return log_sum_exp_rows(g, concat_cols(g, std::span<const Tensor>(parts.data(), 2)));
}

}  // namespace argus
