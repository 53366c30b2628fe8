#include "argus/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace argus {

Encoder::Encoder(ParamStore& params, const EncoderConfig& cfg, Rng& init) : cfg_(cfg) {
  if (cfg.width % cfg.n_heads != 0)
    throw std::invalid_argument("Encoder: width must divide evenly into heads");
  int H = cfg.width;
  int F = cfg.ff_mult * H;
  double scale = 1.0 / std::sqrt(static_cast<double>(H));
  double out_scale = scale / std::sqrt(2.0 * cfg.n_layers);
  for (int i = 0; i < cfg.n_layers; ++i) {
    std::string pre = "encoder.layer" + std::to_string(i) + ".";
    Layer l;
    l.ln1_gain = params.add(pre + "ln1.gain", 1, H);
    l.ln1_bias = params.add(pre + "ln1.bias", 1, H);
    l.wq = params.add(pre + "attn.wq", H, H);
    l.bq = params.add(pre + "attn.bq", 1, H);
    l.wk = params.add(pre + "attn.wk", H, H);
    l.bk = params.add(pre + "attn.bk", 1, H);
    l.wv = params.add(pre + "attn.wv", H, H);
    l.bv = params.add(pre + "attn.bv", 1, H);
    l.wo = params.add(pre + "attn.wo", H, H);
    l.bo = params.add(pre + "attn.bo", 1, H);
    l.ln2_gain = params.add(pre + "ln2.gain", 1, H);
    l.ln2_bias = params.add(pre + "ln2.bias", 1, H);
    l.w_ff1 = params.add(pre + "ff.w1", H, F);
    l.b_ff1 = params.add(pre + "ff.b1", 1, F);
    l.w_ff2 = params.add(pre + "ff.w2", F, H);
    l.b_ff2 = params.add(pre + "ff.b2", 1, H);
    init_constant(l.ln1_gain, 1.0);
    init_constant(l.ln2_gain, 1.0);
    init_gaussian(l.wq, init, scale);
    init_gaussian(l.wk, init, scale);
    init_gaussian(l.wv, init, scale);
    init_gaussian(l.wo, init, out_scale);
    init_gaussian(l.w_ff1, init, scale);
    init_gaussian(l.w_ff2, init, out_scale);
    layers_.push_back(l);
  }
  final_gain_ = params.add("encoder.final_ln.gain", 1, H);
  final_bias_ = params.add("encoder.final_ln.bias", 1, H);
  init_constant(final_gain_, 1.0);
}

Tensor Encoder::attention(Graph& g, const Layer& l, Tensor x, bool train,
                          DropoutRng& drop) const {
  int T = x->rows;
  int H = cfg_.width;
  int dh = H / cfg_.n_heads;
  Tensor q = add_bias(g, matmul(g, x, l.wq), l.bq);
  Tensor k = add_bias(g, matmul(g, x, l.wk), l.bk);
  Tensor v = add_bias(g, matmul(g, x, l.wv), l.bv);

  // additive causal mask: 0 on and below the diagonal, -1e30 above
  std::vector<double> mask_vals(static_cast<size_t>(T) * T, 0.0);
  for (int r = 0; r < T; ++r)
    for (int c = r + 1; c < T; ++c) mask_vals[static_cast<size_t>(r) * T + c] = -1e30;
  Tensor mask = g.constant(T, T, mask_vals);

  std::vector<Tensor> heads(cfg_.n_heads);
  for (int h = 0; h < cfg_.n_heads; ++h) {
    Tensor qh = slice_cols(g, q, h * dh, dh);
    Tensor kh = slice_cols(g, k, h * dh, dh);
    Tensor vh = slice_cols(g, v, h * dh, dh);
    Tensor scores = scale(g, matmul_nt(g, qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
    Tensor probs = softmax_rows(g, add(g, scores, mask));
    probs = dropout(g, probs, cfg_.dropout, train, drop);
    heads[h] = matmul(g, probs, vh);
  }
  Tensor merged = concat_cols(g, std::span<const Tensor>(heads.data(), heads.size()));
  return add_bias(g, matmul(g, merged, l.wo), l.bo);
}

Tensor Encoder::forward(Graph& g, Tensor x, bool train, DropoutRng& drop) const {
  if (x->cols != cfg_.width)
    throw std::invalid_argument("Encoder::forward: input width mismatch");
  if (x->rows > cfg_.max_len)
    throw std::invalid_argument("Encoder::forward: sequence longer than max_len");
  Tensor h = x;
  for (const Layer& l : layers_) {
    Tensor a = attention(g, l, layer_norm(g, h, l.ln1_gain, l.ln1_bias, 1e-5), train, drop);
    h = add(g, h, dropout(g, a, cfg_.dropout, train, drop));
    Tensor n = layer_norm(g, h, l.ln2_gain, l.ln2_bias, 1e-5);
    Tensor f = add_bias(
        g, matmul(g, gelu(g, add_bias(g, matmul(g, n, l.w_ff1), l.b_ff1)), l.w_ff2), l.b_ff2);
    h = add(g, h, dropout(g, f, cfg_.dropout, train, drop));
  }
  return layer_norm(g, h, final_gain_, final_bias_, 1e-5);
}

}  // namespace argus
