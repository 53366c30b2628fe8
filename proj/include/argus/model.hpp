#pragma once

// The full model: unified embedding table, interaction embedder, causal
// encoder, merge heads, item tower, per-factor feedback heads and the
// trainable softmax temperature, all registered in one parameter store.

#include <memory>
#include <string>
#include <vector>

#include "argus/data.hpp"
#include "argus/embedding.hpp"
#include "argus/encoder.hpp"
#include "argus/params.hpp"
#include "argus/tensor.hpp"

namespace argus {

struct ModelConfig {
  EmbeddingConfig embedding;
  EncoderConfig encoder;
  FeedbackSchema schema;

  int width() const { return encoder.width; }
  // stable identifier of the architecture; checkpoints refuse to load across
  // digest mismatches
  std::string digest() const;
};

// Per-step encoder states and the two prediction queries for one chunk.
struct ChunkForward {
  Tensor states;      // T x H: h_t
  Tensor shifted;     // T x H: h_{t-1} with h_init at the front
  Tensor nip_query;   // T x H: context-aware query for next-item prediction
  Tensor item_state;  // T x H: item-aware state for feedback prediction
};

class Model {
 public:
  Model(const ModelConfig& cfg, uint64_t init_seed);

  ChunkForward forward_chunk(Graph& g, const std::vector<Interaction>& chunk, bool train,
                             DropoutRng& drop) const;
  // item ids -> output-space embeddings, rows aligned with the input order
  Tensor embed_items(Graph& g, const std::vector<std::string>& item_ids) const;
  // item ids -> table-space sums, before the output projection
  Tensor embed_items_sub(Graph& g, const std::vector<std::string>& item_ids) const;
  // logits [T x cardinality_k] for feedback factor k from item-aware states
  Tensor feedback_logits(Graph& g, Tensor item_state, int factor) const;

  Tensor temperature() const { return tau_; }
  Tensor initial_state() const { return heads_->initial_state(); }

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  ModelConfig cfg_;
  ParamStore params_;
  std::unique_ptr<UnifiedEmbeddingTable> table_;
  std::unique_ptr<InteractionEmbedder> embedder_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<MergeHeads> heads_;
  std::unique_ptr<ItemTower> item_tower_;
  std::vector<Tensor> fb_w_;  // per factor: H x cardinality
  std::vector<Tensor> fb_b_;  // per factor: 1 x cardinality
  Tensor tau_;                // 1 x 1
};

}  // namespace argus
