#include "argus/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace argus {

std::string ModelConfig::digest() const {
  std::ostringstream os;
  os << "table" << embedding.table_rows << ".d" << embedding.sub_dim << ".lk"
     << embedding.item_lookups << ".len" << embedding.max_len << ".hs" << embedding.hash_seed
     << "|L" << encoder.n_layers << ".H" << encoder.width << ".heads" << encoder.n_heads << ".ff"
     << encoder.ff_mult << "|fb";
  for (size_t k = 0; k < schema.cardinalities.size(); ++k)
    os << (k ? "," : "") << schema.names[k] << ":" << schema.cardinalities[k];
  return os.str();
}

Model::Model(const ModelConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  if (cfg.embedding.max_len < cfg.encoder.max_len)
    throw std::invalid_argument("Model: positional table shorter than encoder max_len");
  Rng init(init_seed);
  int H = cfg.width();
  int d = cfg.embedding.sub_dim;
  table_ = std::make_unique<UnifiedEmbeddingTable>(params_, cfg.embedding, init);
  embedder_ = std::make_unique<InteractionEmbedder>(params_, *table_, H, init);
  encoder_ = std::make_unique<Encoder>(params_, cfg.encoder, init);
  heads_ = std::make_unique<MergeHeads>(params_, H, 2 * d, d, init);
  item_tower_ = std::make_unique<ItemTower>(params_, *table_, H, init);
  for (int k = 0; k < cfg.schema.n_factors(); ++k) {
    int C = cfg.schema.cardinalities[k];
    Tensor w = params_.add("feedback." + cfg.schema.names[k] + ".w", H, C, /*head_group=*/true);
    fb_b_.push_back(
        params_.add("feedback." + cfg.schema.names[k] + ".b", 1, C, /*head_group=*/true));
    init_gaussian(w, init, 1.0 / std::sqrt(static_cast<double>(H)));
    fb_w_.push_back(w);
  }
  tau_ = params_.add("temperature.tau", 1, 1, /*head_group=*/true);
  // start with a sharp similarity scale so cosine logits are commensurate
  // with the logQ corrections from the first step
  tau_->v[0] = std::log(0.07);
}

ChunkForward Model::forward_chunk(Graph& g, const std::vector<Interaction>& chunk, bool train,
                                  DropoutRng& drop) const {
  if (chunk.empty()) throw std::invalid_argument("forward_chunk: empty chunk");
  ChunkEmbeddings e = embedder_->embed_chunk(g, chunk);
  ChunkForward out;
  out.states = encoder_->forward(g, e.merged, train, drop);
  out.shifted = heads_->shifted_states(g, out.states);
  out.nip_query = heads_->context_query(g, out.shifted, e.context);
  out.item_state = heads_->item_query(g, out.shifted, e.context, e.item_sub);
  return out;
}

Tensor Model::embed_items(Graph& g, const std::vector<std::string>& item_ids) const {
  return item_tower_->embed(g, item_ids);
}

Tensor Model::embed_items_sub(Graph& g, const std::vector<std::string>& item_ids) const {
  return item_tower_->embed_sub(g, item_ids);
}

Tensor Model::feedback_logits(Graph& g, Tensor item_state, int factor) const {
  if (factor < 0 || factor >= static_cast<int>(fb_w_.size()))
    throw std::invalid_argument("feedback_logits: factor out of range");
  return add_bias(g, matmul(g, item_state, fb_w_[factor]), fb_b_[factor]);
}

}  // namespace argus
