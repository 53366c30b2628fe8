#pragma once

// Maps interactions to dense vectors: one unified hashed embedding table
// shared across categorical features (3-way lookup for item ids, 1-way for
// small categoricals), absolute trainable positional embeddings, and the
// triplet merge into one embedding per interaction.

#include <cstdint>
#include <string>
#include <vector>

#include "argus/data.hpp"
#include "argus/params.hpp"
#include "argus/tensor.hpp"

namespace argus {

struct EmbeddingConfig {
  int table_rows = 8192;  // M
  int sub_dim = 32;       // d per lookup
  int item_lookups = 3;
  int max_len = 512;
  uint64_t hash_seed = 0x5eed;
};

// Deterministic function of (feature name, raw id, seed); unknown categories
// simply hash, so there is no out-of-vocabulary failure.
class UnifiedEmbeddingTable {
 public:
  UnifiedEmbeddingTable(ParamStore& params, const EmbeddingConfig& cfg, Rng& init);

  // one index per lookup
  std::vector<int> lookup(const std::string& feature, const std::string& raw_id,
                          int n_lookups) const;

  Tensor rows() const { return rows_; }
  const EmbeddingConfig& config() const { return cfg_; }

 private:
  EmbeddingConfig cfg_;
  Tensor rows_;  // M x d
};

// Per-chunk sub-embeddings reused by the merge heads.
struct ChunkEmbeddings {
  Tensor merged;    // T x H: projected triplet + positional
  Tensor context;   // T x 2d: surface ++ device
  Tensor item_sub;  // T x d: 3-lookup item sum
};

class InteractionEmbedder {
 public:
  InteractionEmbedder(ParamStore& params, const UnifiedEmbeddingTable& table, int model_width,
                      Rng& init);

  ChunkEmbeddings embed_chunk(Graph& g, const std::vector<Interaction>& interactions) const;
  // single-interaction convenience used by tests
  Tensor embed_interaction(Graph& g, const Interaction& ev, int position) const;

  int model_width() const { return width_; }

 private:
  const UnifiedEmbeddingTable& table_;
  int width_;
  Tensor w_merge_;  // 6d x H
  Tensor b_merge_;  // 1 x H
  Tensor positional_;  // max_len x H
};

// item id -> output-space embedding: shared-table 3-lookup sum projected to
// the model width; softmax candidate and two-tower right side.
class ItemTower {
 public:
  ItemTower(ParamStore& params, const UnifiedEmbeddingTable& table, int out_dim, Rng& init);

  Tensor embed(Graph& g, const std::vector<std::string>& item_ids) const;
  // raw 3-lookup sum in table space, before the output projection
  Tensor embed_sub(Graph& g, const std::vector<std::string>& item_ids) const;

 private:
  const UnifiedEmbeddingTable& table_;
  Tensor w_proj_;  // d x out
  Tensor b_proj_;  // 1 x out
};

// Two-layer GELU perceptrons producing the context query h^c_t from
// Concat(h_{t-1}, c_t) and the item-aware state h^i_t from
// Concat(h_{t-1}, c_t, i_t). Output layers belong to the head LR group.
class MergeHeads {
 public:
  MergeHeads(ParamStore& params, int model_width, int ctx_dim, int item_dim, Rng& init);

  Tensor context_query(Graph& g, Tensor h_prev, Tensor ctx) const;
  Tensor item_query(Graph& g, Tensor h_prev, Tensor ctx, Tensor item_sub) const;
  // [h_init; h_0; ...; h_{T-2}] for a T-step chunk
  Tensor shifted_states(Graph& g, Tensor h) const;
  Tensor initial_state() const { return h_init_; }

 private:
  Tensor h_init_;  // 1 x H
  Tensor w1_c_, b1_c_, w2_c_, b2_c_;
  Tensor w1_i_, b1_i_, w2_i_, b2_i_;
};

}  // namespace argus
