#pragma once

// Causal pre-norm transformer over merged interaction embeddings. Standard
// multi-head attention with a lower-triangular mask, GELU feed-forward blocks
// and a final layer norm.

#include <vector>

#include "argus/params.hpp"
#include "argus/tensor.hpp"

namespace argus {

struct EncoderConfig {
  int n_layers = 2;
  int width = 64;
  int n_heads = 4;
  int ff_mult = 4;
  double dropout = 0.1;
  int max_len = 512;
};

class Encoder {
 public:
  Encoder(ParamStore& params, const EncoderConfig& cfg, Rng& init);

  // x: [T x width] -> [T x width]. train toggles dropout.
  Tensor forward(Graph& g, Tensor x, bool train, DropoutRng& drop) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  struct Layer {
    Tensor ln1_gain, ln1_bias;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln2_gain, ln2_bias;
    Tensor w_ff1, b_ff1, w_ff2, b_ff2;
  };

  Tensor attention(Graph& g, const Layer& l, Tensor x, bool train, DropoutRng& drop) const;

  EncoderConfig cfg_;
  std::vector<Layer> layers_;
  Tensor final_gain_;
  Tensor final_bias_;
};

}  // namespace argus
