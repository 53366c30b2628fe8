#include "argus/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace argus {

namespace {

Precision g_precision = Precision::f32;

inline double quant(double x) {
  return g_precision == Precision::f32 ? static_cast<double>(static_cast<float>(x)) : x;
}

void quantize_all(std::vector<double>& v) {
  if (g_precision == Precision::f32) {
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  }
}

[[noreturn]] void shape_error(const char* op, const TensorData* a, const TensorData* b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes [" +
                              std::to_string(a->rows) + "x" + std::to_string(a->cols) +
                              "] vs [" + std::to_string(b->rows) + "x" +
                              std::to_string(b->cols) + "]");
}

// C += A·B, all row-major raw buffers.
void k_mm(double* c, const double* a, const double* b, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// C += A·Bᵀ  (A [m×k], B [n×k]).
void k_mm_nt(double* c, const double* a, const double* b, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

// C += Aᵀ·B  (A [k×m], B [k×n]).
void k_mm_tn(double* c, const double* a, const double* b, int k, int m, int n) {
  for (int p = 0; p < k; ++p) {
    const double* ap = a + static_cast<size_t>(p) * m;
    const double* bp = b + static_cast<size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const double api = ap[i];
      if (api == 0.0) continue;
      double* ci = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

inline bool needs_grad(Tensor a) { return a->requires_grad; }
inline bool needs_grad(Tensor a, Tensor b) { return a->requires_grad || b->requires_grad; }

inline double u64_to_unit(uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

}  // namespace

Precision global_precision() { return g_precision; }
void set_global_precision(Precision p) { g_precision = p; }

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t hash_combine(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  return splitmix64(s);
}

uint64_t hash_string(const std::string& s, uint64_t seed) {
  uint64_t h = seed ^ 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  uint64_t st = h;
  return splitmix64(st);
}

double Rng::uniform() { return u64_to_unit(next_u64()); }

uint64_t Rng::next_below(uint64_t n) {
  // Rejection sampling keeps the draw exactly uniform.
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1, u2;
  do {
    u1 = uniform();
  } while (u1 <= 1e-300);
  u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

Tensor Graph::tensor(int rows, int cols, bool requires_grad) {
  auto t = std::make_unique<TensorData>();
  t->rows = rows;
  t->cols = cols;
  t->v.assign(static_cast<size_t>(rows) * cols, 0.0);
  t->requires_grad = requires_grad && recording;
  if (t->requires_grad) t->g.assign(t->v.size(), 0.0);
  nodes_.push_back(std::move(t));
  return nodes_.back().get();
}

Tensor Graph::constant(int rows, int cols, const std::vector<double>& vals) {
  if (vals.size() != static_cast<size_t>(rows) * cols)
    throw std::invalid_argument("Graph::constant: value count does not match shape");
  Tensor t = tensor(rows, cols, false);
  t->v = vals;
  return t;
}

Tensor Graph::scalar(double x) { return constant(1, 1, {x}); }

void Graph::backward(Tensor loss) {
  if (loss->numel() != 1) throw std::invalid_argument("backward: loss must be a scalar");
  if (!loss->requires_grad) throw std::invalid_argument("backward: loss does not require grad");
  loss->g[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    TensorData* n = it->get();
    if (n->backward) n->backward();
  }
}

void Graph::clear() { nodes_.clear(); }

void check_finite(Tensor x, const char* what) {
  for (double v : x->v) {
    if (!std::isfinite(v))
      throw std::runtime_error(std::string("non-finite value in ") + what);
  }
}

// ---------------------------------------------------------------------------
// Ops
// ---------------------------------------------------------------------------

Tensor matmul(Graph& g, Tensor a, Tensor b) {
  if (a->cols != b->rows) shape_error("matmul", a, b);
  Tensor out = g.tensor(a->rows, b->cols, needs_grad(a, b));
  k_mm(out->v.data(), a->v.data(), b->v.data(), a->rows, a->cols, b->cols);
  quantize_all(out->v);
  if (out->requires_grad) {
    out->backward = [out, a, b] {
      if (a->requires_grad)
        k_mm_nt(a->g.data(), out->g.data(), b->v.data(), a->rows, b->cols, a->cols);
      if (b->requires_grad)
        k_mm_tn(b->g.data(), a->v.data(), out->g.data(), a->rows, a->cols, b->cols);
    };
  }
  return out;
}

Tensor matmul_nt(Graph& g, Tensor a, Tensor b) {
  if (a->cols != b->cols) shape_error("matmul_nt", a, b);
  Tensor out = g.tensor(a->rows, b->rows, needs_grad(a, b));
  k_mm_nt(out->v.data(), a->v.data(), b->v.data(), a->rows, a->cols, b->rows);
  quantize_all(out->v);
  if (out->requires_grad) {
    out->backward = [out, a, b] {
      if (a->requires_grad)
        k_mm(a->g.data(), out->g.data(), b->v.data(), a->rows, b->rows, a->cols);
      if (b->requires_grad)
        k_mm_tn(b->g.data(), out->g.data(), a->v.data(), a->rows, b->rows, a->cols);
    };
  }
  return out;
}

Tensor transpose(Graph& g, Tensor x) {
  Tensor out = g.tensor(x->cols, x->rows, needs_grad(x));
  for (int r = 0; r < x->rows; ++r)
    for (int c = 0; c < x->cols; ++c) out->at(c, r) = x->at(r, c);
  if (out->requires_grad) {
    out->backward = [out, x] {
      for (int r = 0; r < x->rows; ++r)
        for (int c = 0; c < x->cols; ++c) x->grad_at(r, c) += out->grad_at(c, r);
    };
  }
  return out;
}

Tensor add(Graph& g, Tensor a, Tensor b) {
  if (a->rows != b->rows || a->cols != b->cols) shape_error("add", a, b);
  Tensor out = g.tensor(a->rows, a->cols, needs_grad(a, b));
  for (size_t i = 0; i < out->numel(); ++i) out->v[i] = quant(a->v[i] + b->v[i]);
  if (out->requires_grad) {
    out->backward = [out, a, b] {
      if (a->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) a->g[i] += out->g[i];
      if (b->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) b->g[i] += out->g[i];
    };
  }
  return out;
}

Tensor sub(Graph& g, Tensor a, Tensor b) {
  if (a->rows != b->rows || a->cols != b->cols) shape_error("sub", a, b);
  Tensor out = g.tensor(a->rows, a->cols, needs_grad(a, b));
  for (size_t i = 0; i < out->numel(); ++i) out->v[i] = quant(a->v[i] - b->v[i]);
  if (out->requires_grad) {
    out->backward = [out, a, b] {
      if (a->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) a->g[i] += out->g[i];
      if (b->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) b->g[i] -= out->g[i];
    };
  }
  return out;
}

Tensor mul(Graph& g, Tensor a, Tensor b) {
  if (a->rows != b->rows || a->cols != b->cols) shape_error("mul", a, b);
  Tensor out = g.tensor(a->rows, a->cols, needs_grad(a, b));
  for (size_t i = 0; i < out->numel(); ++i) out->v[i] = quant(a->v[i] * b->v[i]);
  if (out->requires_grad) {
    out->backward = [out, a, b] {
      if (a->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) a->g[i] += out->g[i] * b->v[i];
      if (b->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) b->g[i] += out->g[i] * a->v[i];
    };
  }
  return out;
}

Tensor scale(Graph& g, Tensor x, double c) {
  Tensor out = g.tensor(x->rows, x->cols, needs_grad(x));
  for (size_t i = 0; i < out->numel(); ++i) out->v[i] = quant(x->v[i] * c);
  if (out->requires_grad) {
    out->backward = [out, x, c] {
      for (size_t i = 0; i < out->numel(); ++i) x->g[i] += out->g[i] * c;
    };
  }
  return out;
}

Tensor add_bias(Graph& g, Tensor x, Tensor bias) {
  if (bias->rows != 1 || bias->cols != x->cols) shape_error("add_bias", x, bias);
  Tensor out = g.tensor(x->rows, x->cols, needs_grad(x, bias));
  for (int r = 0; r < x->rows; ++r)
    for (int c = 0; c < x->cols; ++c) out->at(r, c) = quant(x->at(r, c) + bias->v[c]);
  if (out->requires_grad) {
    out->backward = [out, x, bias] {
      if (x->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) x->g[i] += out->g[i];
      if (bias->requires_grad)
        for (int r = 0; r < out->rows; ++r)
          for (int c = 0; c < out->cols; ++c) bias->g[c] += out->grad_at(r, c);
    };
  }
  return out;
}

Tensor concat_cols(Graph& g, std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  int rows = parts[0]->rows;
  int cols = 0;
  bool rg = false;
  for (Tensor p : parts) {
    if (p->rows != rows) shape_error("concat_cols", parts[0], p);
    cols += p->cols;
    rg = rg || p->requires_grad;
  }
  Tensor out = g.tensor(rows, cols, rg);
  int c0 = 0;
  for (Tensor p : parts) {
    for (int r = 0; r < rows; ++r)
      std::memcpy(&out->at(r, c0), &p->at(r, 0), sizeof(double) * p->cols);
    c0 += p->cols;
  }
  if (out->requires_grad) {
    std::vector<Tensor> ps(parts.begin(), parts.end());
    out->backward = [out, ps] {
      int c0 = 0;
      for (Tensor p : ps) {
        if (p->requires_grad)
          for (int r = 0; r < out->rows; ++r)
            for (int c = 0; c < p->cols; ++c) p->grad_at(r, c) += out->grad_at(r, c0 + c);
        c0 += p->cols;
      }
    };
  }
  return out;
}

Tensor concat_rows(Graph& g, std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  int cols = parts[0]->cols;
  int rows = 0;
  bool rg = false;
  for (Tensor p : parts) {
    if (p->cols != cols) shape_error("concat_rows", parts[0], p);
    rows += p->rows;
    rg = rg || p->requires_grad;
  }
  Tensor out = g.tensor(rows, cols, rg);
  int r0 = 0;
  for (Tensor p : parts) {
    std::memcpy(&out->at(r0, 0), p->v.data(), sizeof(double) * p->numel());
    r0 += p->rows;
  }
  if (out->requires_grad) {
    std::vector<Tensor> ps(parts.begin(), parts.end());
    out->backward = [out, ps] {
      int r0 = 0;
      for (Tensor p : ps) {
        if (p->requires_grad)
          for (size_t i = 0; i < p->numel(); ++i)
            p->g[i] += out->g[static_cast<size_t>(r0) * out->cols + i];
        r0 += p->rows;
      }
    };
  }
  return out;
}

Tensor slice_cols(Graph& g, Tensor x, int c0, int len) {
  if (c0 < 0 || c0 + len > x->cols) throw std::invalid_argument("slice_cols: out of range");
  Tensor out = g.tensor(x->rows, len, needs_grad(x));
  for (int r = 0; r < x->rows; ++r)
    std::memcpy(&out->at(r, 0), &x->at(r, c0), sizeof(double) * len);
  if (out->requires_grad) {
    out->backward = [out, x, c0] {
      for (int r = 0; r < out->rows; ++r)
        for (int c = 0; c < out->cols; ++c) x->grad_at(r, c0 + c) += out->grad_at(r, c);
    };
  }
  return out;
}

Tensor slice_rows(Graph& g, Tensor x, int r0, int len) {
  if (r0 < 0 || r0 + len > x->rows) throw std::invalid_argument("slice_rows: out of range");
  Tensor out = g.tensor(len, x->cols, needs_grad(x));
  std::memcpy(out->v.data(), &x->at(r0, 0), sizeof(double) * out->numel());
  if (out->requires_grad) {
    out->backward = [out, x, r0] {
      for (size_t i = 0; i < out->numel(); ++i)
        x->g[static_cast<size_t>(r0) * x->cols + i] += out->g[i];
    };
  }
  return out;
}

Tensor gather_rows(Graph& g, Tensor table, const std::vector<int>& idx) {
  for (int i : idx)
    if (i < 0 || i >= table->rows) throw std::invalid_argument("gather_rows: index out of range");
  Tensor out = g.tensor(static_cast<int>(idx.size()), table->cols, needs_grad(table));
  for (size_t r = 0; r < idx.size(); ++r)
    std::memcpy(&out->at(static_cast<int>(r), 0), &table->at(idx[r], 0),
                sizeof(double) * table->cols);
  if (out->requires_grad) {
    out->backward = [out, table, idx] {
      // scatter-add: repeated indices accumulate
      for (size_t r = 0; r < idx.size(); ++r)
        for (int c = 0; c < table->cols; ++c)
          table->grad_at(idx[r], c) += out->grad_at(static_cast<int>(r), c);
    };
  }
  return out;
}

Tensor gelu(Graph& g, Tensor x) {
  Tensor out = g.tensor(x->rows, x->cols, needs_grad(x));
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  for (size_t i = 0; i < out->numel(); ++i)
    out->v[i] = quant(0.5 * x->v[i] * (1.0 + std::erf(x->v[i] * inv_sqrt2)));
  if (out->requires_grad) {
    out->backward = [out, x] {
      constexpr double inv_sqrt2 = 0.7071067811865475244;
      constexpr double inv_sqrt2pi = 0.3989422804014326779;
      for (size_t i = 0; i < out->numel(); ++i) {
        double xi = x->v[i];
        double cdf = 0.5 * (1.0 + std::erf(xi * inv_sqrt2));
        double pdf = inv_sqrt2pi * std::exp(-0.5 * xi * xi);
        x->g[i] += out->g[i] * (cdf + xi * pdf);
      }
    };
  }
  return out;
}

Tensor dropout(Graph& g, Tensor x, double rate, bool train, DropoutRng& rng) {
  if (!train || rate <= 0.0) return x;  // identity in eval mode
  uint64_t key = rng.next_key();
  Tensor out = g.tensor(x->rows, x->cols, needs_grad(x));
  auto keep_mask = std::make_shared<std::vector<uint8_t>>(x->numel());
  double inv_keep = 1.0 / (1.0 - rate);
  for (size_t i = 0; i < out->numel(); ++i) {
    uint64_t s = hash_combine(key, i);
    bool keep = u64_to_unit(splitmix64(s)) >= rate;
    (*keep_mask)[i] = keep;
    out->v[i] = keep ? quant(x->v[i] * inv_keep) : 0.0;
  }
  if (out->requires_grad) {
    out->backward = [out, x, keep_mask, inv_keep] {
      for (size_t i = 0; i < out->numel(); ++i)
        if ((*keep_mask)[i]) x->g[i] += out->g[i] * inv_keep;
    };
  }
  return out;
}

Tensor softmax_rows(Graph& g, Tensor x) {
  if (x->cols < 1) throw std::invalid_argument("softmax: empty rows");
  Tensor out = g.tensor(x->rows, x->cols, needs_grad(x));
  for (int r = 0; r < x->rows; ++r) {
    double mx = x->at(r, 0);
    for (int c = 1; c < x->cols; ++c) mx = std::max(mx, x->at(r, c));
    double sum = 0.0;
    for (int c = 0; c < x->cols; ++c) {
      double e = std::exp(x->at(r, c) - mx);
      out->at(r, c) = e;
      sum += e;
    }
    double inv = 1.0 / sum;
    for (int c = 0; c < x->cols; ++c) out->at(r, c) = quant(out->at(r, c) * inv);
  }
  if (out->requires_grad) {
    out->backward = [out, x] {
      for (int r = 0; r < out->rows; ++r) {
        double dot = 0.0;
        for (int c = 0; c < out->cols; ++c) dot += out->grad_at(r, c) * out->at(r, c);
        for (int c = 0; c < out->cols; ++c)
          x->grad_at(r, c) += out->at(r, c) * (out->grad_at(r, c) - dot);
      }
    };
  }
  return out;
}

Tensor softmax(Graph& g, Tensor x, int axis) {
  if (axis == 1) return softmax_rows(g, x);
  if (axis == 0) return transpose(g, softmax_rows(g, transpose(g, x)));
  throw std::invalid_argument("softmax: axis must be 0 or 1");
}

Tensor layer_norm(Graph& g, Tensor x, Tensor gain, Tensor bias, double eps) {
  if (gain->rows != 1 || gain->cols != x->cols || bias->rows != 1 || bias->cols != x->cols)
    shape_error("layer_norm", x, gain);
  Tensor out = g.tensor(x->rows, x->cols, needs_grad(x) || needs_grad(gain, bias));
  int C = x->cols;
  auto stats = std::make_shared<std::vector<double>>(2 * x->rows);  // mean, inv_std
  for (int r = 0; r < x->rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < C; ++c) mean += x->at(r, c);
    mean /= C;
    double var = 0.0;
    for (int c = 0; c < C; ++c) {
      double d = x->at(r, c) - mean;
      var += d * d;
    }
    var /= C;
    double inv_std = 1.0 / std::sqrt(var + eps);
    (*stats)[2 * r] = mean;
    (*stats)[2 * r + 1] = inv_std;
    for (int c = 0; c < C; ++c)
      out->at(r, c) = quant((x->at(r, c) - mean) * inv_std * gain->v[c] + bias->v[c]);
  }
  if (out->requires_grad) {
    out->backward = [out, x, gain, bias, stats, C] {
      for (int r = 0; r < out->rows; ++r) {
        double mean = (*stats)[2 * r], inv_std = (*stats)[2 * r + 1];
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int c = 0; c < C; ++c) {
          double xhat = (x->at(r, c) - mean) * inv_std;
          double dy = out->grad_at(r, c) * gain->v[c];
          sum_dy += dy;
          sum_dy_xhat += dy * xhat;
          if (gain->requires_grad) gain->g[c] += out->grad_at(r, c) * xhat;
          if (bias->requires_grad) bias->g[c] += out->grad_at(r, c);
        }
        if (x->requires_grad) {
          for (int c = 0; c < C; ++c) {
            double xhat = (x->at(r, c) - mean) * inv_std;
            double dy = out->grad_at(r, c) * gain->v[c];
            x->grad_at(r, c) += inv_std * (dy - sum_dy / C - xhat * sum_dy_xhat / C);
          }
        }
      }
    };
  }
  return out;
}

Tensor log_sum_exp_rows(Graph& g, Tensor x) {
  if (x->cols < 1) throw std::invalid_argument("log_sum_exp: empty rows");
  Tensor out = g.tensor(x->rows, 1, needs_grad(x));
  for (int r = 0; r < x->rows; ++r) {
    double mx = x->at(r, 0);
    for (int c = 1; c < x->cols; ++c) mx = std::max(mx, x->at(r, c));
    double sum = 0.0;
    for (int c = 0; c < x->cols; ++c) sum += std::exp(x->at(r, c) - mx);
    out->v[r] = quant(mx + std::log(sum));
  }
  if (out->requires_grad) {
    out->backward = [out, x] {
      for (int r = 0; r < out->rows; ++r) {
        double lse = out->v[r];
        for (int c = 0; c < x->cols; ++c)
          x->grad_at(r, c) += out->g[r] * std::exp(x->at(r, c) - lse);
      }
    };
  }
  return out;
}

Tensor row_normalize(Graph& g, Tensor x) {
  Tensor out = g.tensor(x->rows, x->cols, needs_grad(x));
  auto inv_norms = std::make_shared<std::vector<double>>(x->rows, 0.0);
  for (int r = 0; r < x->rows; ++r) {
    double n2 = 0.0;
    for (int c = 0; c < x->cols; ++c) n2 += x->at(r, c) * x->at(r, c);
    // zero vector maps to zero (cosine of a zero vector is defined as 0)
    double inv = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 0.0;
    (*inv_norms)[r] = inv;
    for (int c = 0; c < x->cols; ++c) out->at(r, c) = quant(x->at(r, c) * inv);
  }
  if (out->requires_grad) {
    out->backward = [out, x, inv_norms] {
      for (int r = 0; r < out->rows; ++r) {
        double inv = (*inv_norms)[r];
        if (inv == 0.0) continue;
        double dot = 0.0;
        for (int c = 0; c < out->cols; ++c) dot += out->grad_at(r, c) * out->at(r, c);
        for (int c = 0; c < out->cols; ++c)
          x->grad_at(r, c) += inv * (out->grad_at(r, c) - dot * out->at(r, c));
      }
    };
  }
  return out;
}

Tensor rowwise_dot(Graph& g, Tensor a, Tensor b) {
  if (a->rows != b->rows || a->cols != b->cols) shape_error("rowwise_dot", a, b);
  Tensor out = g.tensor(a->rows, 1, needs_grad(a, b));
  for (int r = 0; r < a->rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < a->cols; ++c) s += a->at(r, c) * b->at(r, c);
    out->v[r] = quant(s);
  }
  if (out->requires_grad) {
    out->backward = [out, a, b] {
      for (int r = 0; r < a->rows; ++r) {
        if (a->requires_grad)
          for (int c = 0; c < a->cols; ++c) a->grad_at(r, c) += out->g[r] * b->at(r, c);
        if (b->requires_grad)
          for (int c = 0; c < b->cols; ++c) b->grad_at(r, c) += out->g[r] * a->at(r, c);
      }
    };
  }
  return out;
}

Tensor sum_all(Graph& g, Tensor x) {
  Tensor out = g.tensor(1, 1, needs_grad(x));
  double s = 0.0;
  for (double v : x->v) s += v;
  out->v[0] = quant(s);
  if (out->requires_grad) {
    out->backward = [out, x] {
      for (size_t i = 0; i < x->numel(); ++i) x->g[i] += out->g[0];
    };
  }
  return out;
}

Tensor mean_all(Graph& g, Tensor x) {
  return scale(g, sum_all(g, x), 1.0 / static_cast<double>(x->numel()));
}

Tensor cosine_similarity(Graph& g, Tensor a, Tensor b) {
  if (a->numel() != b->numel()) shape_error("cosine_similarity", a, b);
  Tensor an = row_normalize(g, a->rows == 1 ? a : transpose(g, a));
  Tensor bn = row_normalize(g, b->rows == 1 ? b : transpose(g, b));
  return rowwise_dot(g, an, bn);
}

Tensor cross_entropy_with_logits(Graph& g, Tensor logits, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != logits->rows)
    throw std::invalid_argument("cross_entropy_with_logits: label count != rows");
  for (int l : labels)
    if (l < 0 || l >= logits->cols)
      throw std::invalid_argument("cross_entropy_with_logits: class index out of range");
  Tensor lse = log_sum_exp_rows(g, logits);
  Tensor picked = g.tensor(logits->rows, 1, needs_grad(logits));
  for (int r = 0; r < logits->rows; ++r) picked->v[r] = logits->at(r, labels[r]);
  if (picked->requires_grad) {
    auto labels_copy = std::make_shared<std::vector<int>>(labels);
    picked->backward = [picked, logits, labels_copy] {
      for (int r = 0; r < picked->rows; ++r)
        logits->grad_at(r, (*labels_copy)[r]) += picked->g[r];
    };
  }
  return sub(g, lse, picked);
}

Tensor apply_temperature(Graph& g, Tensor x, Tensor tau, double lo, double hi) {
  if (tau->numel() != 1) throw std::invalid_argument("apply_temperature: tau must be scalar");
  double et = std::exp(tau->v[0]);
  bool clamped = et < lo || et > hi;
  double s = std::clamp(et, lo, hi);
  double inv = 1.0 / s;
  Tensor out = g.tensor(x->rows, x->cols, needs_grad(x, tau));
  for (size_t i = 0; i < out->numel(); ++i) out->v[i] = quant(x->v[i] * inv);
  if (out->requires_grad) {
    out->backward = [out, x, tau, inv, clamped] {
      if (x->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) x->g[i] += out->g[i] * inv;
      if (tau->requires_grad && !clamped) {
        // d(x/e^tau)/dtau = -x/e^tau
        double acc = 0.0;
        for (size_t i = 0; i < out->numel(); ++i) acc += out->g[i] * out->v[i];
        tau->g[0] -= acc;
      }
    };
  }
  return out;
}

}  // namespace argus
