#include "argus/embedding.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace argus {

UnifiedEmbeddingTable::UnifiedEmbeddingTable(ParamStore& params, const EmbeddingConfig& cfg,
                                             Rng& init)
    : cfg_(cfg) {
  rows_ = params.add("embedding.table", cfg.table_rows, cfg.sub_dim);
  init_gaussian(rows_, init, 0.1);
}

std::vector<int> UnifiedEmbeddingTable::lookup(const std::string& feature,
                                               const std::string& raw_id, int n_lookups) const {
  uint64_t feature_seed = hash_string(feature, cfg_.hash_seed);
  std::vector<int> idx(n_lookups);
  for (int k = 0; k < n_lookups; ++k) {
    uint64_t h = hash_string(raw_id, hash_combine(feature_seed, static_cast<uint64_t>(k)));
    idx[k] = static_cast<int>(h % static_cast<uint64_t>(cfg_.table_rows));
  }
  return idx;
}

InteractionEmbedder::InteractionEmbedder(ParamStore& params, const UnifiedEmbeddingTable& table,
                                         int model_width, Rng& init)
    : table_(table), width_(model_width) {
  int d = table.config().sub_dim;
  w_merge_ = params.add("embedder.w_merge", 6 * d, model_width);
  b_merge_ = params.add("embedder.b_merge", 1, model_width);
  positional_ = params.add("embedder.positional", table.config().max_len, model_width);
  init_gaussian(w_merge_, init, 1.0 / std::sqrt(6.0 * d));
  init_gaussian(positional_, init, 0.02);
}

ChunkEmbeddings InteractionEmbedder::embed_chunk(Graph& g,
                                                 const std::vector<Interaction>& evs) const {
  int T = static_cast<int>(evs.size());
  if (T > table_.config().max_len)
    throw std::invalid_argument("embed_chunk: sequence longer than max_len");
  std::vector<int> surface_idx(T), device_idx(T), like_idx(T), skip_idx(T), listen_idx(T);
  std::vector<int> item_idx[3];
  for (auto& v : item_idx) v.resize(T);
  std::vector<int> pos_idx(T);
  for (int t = 0; t < T; ++t) {
    const Interaction& ev = evs[t];
    surface_idx[t] = table_.lookup("surface", ev.surface, 1)[0];
    device_idx[t] = table_.lookup("device", ev.device, 1)[0];
    auto item = table_.lookup("item", ev.item_id, 3);
    for (int k = 0; k < 3; ++k) item_idx[k][t] = item[k];
    like_idx[t] = table_.lookup("like", std::to_string(ev.feedback.like), 1)[0];
    skip_idx[t] = table_.lookup("skip", std::to_string(ev.feedback.skip), 1)[0];
    listen_idx[t] = table_.lookup("listen", std::to_string(ev.feedback.listen_bucket), 1)[0];
    pos_idx[t] = t;
  }
  Tensor rows = table_.rows();
  Tensor surface = gather_rows(g, rows, surface_idx);
  Tensor device = gather_rows(g, rows, device_idx);
  Tensor item = add(g, gather_rows(g, rows, item_idx[0]),
                    add(g, gather_rows(g, rows, item_idx[1]), gather_rows(g, rows, item_idx[2])));
  Tensor like = gather_rows(g, rows, like_idx);
  Tensor skip = gather_rows(g, rows, skip_idx);
  Tensor listen = gather_rows(g, rows, listen_idx);

  std::array<Tensor, 2> ctx_parts{surface, device};
  std::array<Tensor, 6> all_parts{surface, device, item, like, skip, listen};
  ChunkEmbeddings out;
  out.context = concat_cols(g, std::span<const Tensor>(ctx_parts.data(), ctx_parts.size()));
  out.item_sub = item;
  Tensor merged = add_bias(
      g, matmul(g, concat_cols(g, std::span<const Tensor>(all_parts.data(), all_parts.size())),
                w_merge_),
      b_merge_);
  out.merged = add(g, merged, gather_rows(g, positional_, pos_idx));
  return out;
}

Tensor InteractionEmbedder::embed_interaction(Graph& g, const Interaction& ev,
                                              int position) const {
  if (position < 0 || position >= table_.config().max_len)
    throw std::invalid_argument("embed_interaction: position out of range");
  ChunkEmbeddings e = embed_chunk(g, {ev});
  // reposition: embed_chunk places a single interaction at position 0
  Tensor pos_delta = sub(g, gather_rows(g, positional_, {position}),
                         gather_rows(g, positional_, {0}));
  return add(g, e.merged, pos_delta);
}

ItemTower::ItemTower(ParamStore& params, const UnifiedEmbeddingTable& table, int out_dim,
                     Rng& init)
    : table_(table) {
  int d = table.config().sub_dim;
  w_proj_ = params.add("item_tower.w_proj", d, out_dim);
  b_proj_ = params.add("item_tower.b_proj", 1, out_dim);
  init_gaussian(w_proj_, init, 1.0 / std::sqrt(static_cast<double>(d)));
}

Tensor ItemTower::embed_sub(Graph& g, const std::vector<std::string>& item_ids) const {
  int n = static_cast<int>(item_ids.size());
  std::vector<int> idx[3];
  for (auto& v : idx) v.resize(n);
  for (int i = 0; i < n; ++i) {
    auto lk = table_.lookup("item", item_ids[i], 3);
    for (int k = 0; k < 3; ++k) idx[k][i] = lk[k];
  }
  Tensor rows = table_.rows();
  return add(g, gather_rows(g, rows, idx[0]),
             add(g, gather_rows(g, rows, idx[1]), gather_rows(g, rows, idx[2])));
}

Tensor ItemTower::embed(Graph& g, const std::vector<std::string>& item_ids) const {
  return add_bias(g, matmul(g, embed_sub(g, item_ids), w_proj_), b_proj_);
}

MergeHeads::MergeHeads(ParamStore& params, int model_width, int ctx_dim, int item_dim, Rng& init) {
  int H = model_width;
  h_init_ = params.add("merge.h_init", 1, H);
  w1_c_ = params.add("merge.context.w1", H + ctx_dim, H);
  b1_c_ = params.add("merge.context.b1", 1, H);
  w2_c_ = params.add("merge.context.w2", H, H, /*head_group=*/true);
  b2_c_ = params.add("merge.context.b2", 1, H, /*head_group=*/true);
  w1_i_ = params.add("merge.item.w1", H + ctx_dim + item_dim, H);
  b1_i_ = params.add("merge.item.b1", 1, H);
  w2_i_ = params.add("merge.item.w2", H, H, /*head_group=*/true);
  b2_i_ = params.add("merge.item.b2", 1, H, /*head_group=*/true);
  init_gaussian(h_init_, init, 0.02);
  init_gaussian(w1_c_, init, 1.0 / std::sqrt(static_cast<double>(H + ctx_dim)));
  init_gaussian(w2_c_, init, 1.0 / std::sqrt(static_cast<double>(H)));
  init_gaussian(w1_i_, init, 1.0 / std::sqrt(static_cast<double>(H + ctx_dim + item_dim)));
  init_gaussian(w2_i_, init, 1.0 / std::sqrt(static_cast<double>(H)));
}

Tensor MergeHeads::context_query(Graph& g, Tensor h_prev, Tensor ctx) const {
  std::array<Tensor, 2> parts{h_prev, ctx};
  Tensor x = concat_cols(g, std::span<const Tensor>(parts.data(), parts.size()));
  Tensor hidden = gelu(g, add_bias(g, matmul(g, x, w1_c_), b1_c_));
  return add_bias(g, matmul(g, hidden, w2_c_), b2_c_);
}

Tensor MergeHeads::item_query(Graph& g, Tensor h_prev, Tensor ctx, Tensor item_sub) const {
  std::array<Tensor, 3> parts{h_prev, ctx, item_sub};
  Tensor x = concat_cols(g, std::span<const Tensor>(parts.data(), parts.size()));
  Tensor hidden = gelu(g, add_bias(g, matmul(g, x, w1_i_), b1_i_));
  return add_bias(g, matmul(g, hidden, w2_i_), b2_i_);
}

Tensor MergeHeads::shifted_states(Graph& g, Tensor h) const {
  if (h->rows == 1) return h_init_;
  std::array<Tensor, 2> parts{h_init_, slice_rows(g, h, 0, h->rows - 1)};
  return concat_rows(g, std::span<const Tensor>(parts.data(), parts.size()));
}

}  // namespace argus
