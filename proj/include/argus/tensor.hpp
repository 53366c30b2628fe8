#pragma once

// Dense 2-D tensors with tape-based reverse-mode differentiation.
//
// Every tensor is a node either owned by a Graph (one training/eval step) or
// owned externally as a parameter. Ops record backward closures on the graph;
// Graph::backward replays them in reverse creation order, accumulating
// gradients additively so values feeding multiple consumers are handled
// correctly.
//
// Storage is double. The global precision mode quantizes forward outputs
// through float in f32 mode (the training default); f64 mode keeps full
// precision for finite-difference gradient verification.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace argus {

enum class Precision { f32, f64 };

Precision global_precision();
void set_global_precision(Precision p);

// Scoped precision override for tests.
struct PrecisionGuard {
  explicit PrecisionGuard(Precision p) : prev_(global_precision()) {
    set_global_precision(p);
  }
  ~PrecisionGuard() { set_global_precision(prev_); }

 private:
  Precision prev_;
};

struct TensorData {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;
  std::vector<double> g;
  bool requires_grad = false;
  std::function<void()> backward;  // empty for leaves

  size_t numel() const { return static_cast<size_t>(rows) * cols; }
  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  double& grad_at(int r, int c) { return g[static_cast<size_t>(r) * cols + c]; }
  void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

using Tensor = TensorData*;

// Owns the intermediate nodes of one forward/backward pass.
class Graph {
 public:
  // When recording is false no backward closures are stored (inference).
  bool recording = true;

  Tensor tensor(int rows, int cols, bool requires_grad);
  Tensor constant(int rows, int cols, const std::vector<double>& vals);
  Tensor scalar(double x);

  void backward(Tensor loss);
  void clear();
  size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::unique_ptr<TensorData>> nodes_;
};

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64-based so streams are portable across
// platforms and standard libraries. Gaussians via Box-Muller.
// ---------------------------------------------------------------------------

uint64_t splitmix64(uint64_t& state);
uint64_t hash_combine(uint64_t a, uint64_t b);
uint64_t hash_string(const std::string& s, uint64_t seed);

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ull) {}
  uint64_t next_u64() { return splitmix64(state_); }
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n);
  double gaussian();
  // Independent child stream, keyed so call order elsewhere cannot alias it.
  Rng fork(uint64_t key) { return Rng(hash_combine(state_, key)); }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Counter-based stream for dropout: each call gets a fresh key derived from
// the run seed, so single-threaded runs are bit-reproducible.
class DropoutRng {
 public:
  explicit DropoutRng(uint64_t seed) : seed_(seed) {}
  uint64_t next_key() { return hash_combine(seed_, counter_++); }

 private:
  uint64_t seed_;
  uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Ops. All take the owning graph first; output shapes are standard.
// Shape mismatches throw std::invalid_argument naming both shapes.
// ---------------------------------------------------------------------------

Tensor matmul(Graph& g, Tensor a, Tensor b);     // [m×k]·[k×n]
Tensor matmul_nt(Graph& g, Tensor a, Tensor b);  // [m×k]·[n×k]ᵀ -> [m×n]
Tensor transpose(Graph& g, Tensor x);
Tensor add(Graph& g, Tensor a, Tensor b);
Tensor sub(Graph& g, Tensor a, Tensor b);
Tensor mul(Graph& g, Tensor a, Tensor b);  // elementwise
Tensor scale(Graph& g, Tensor x, double c);
Tensor add_bias(Graph& g, Tensor x, Tensor bias);  // bias [1×C] broadcast over rows
Tensor concat_cols(Graph& g, std::span<const Tensor> parts);
Tensor concat_rows(Graph& g, std::span<const Tensor> parts);
Tensor slice_cols(Graph& g, Tensor x, int c0, int len);
Tensor slice_rows(Graph& g, Tensor x, int r0, int len);
Tensor gather_rows(Graph& g, Tensor table, const std::vector<int>& idx);
Tensor gelu(Graph& g, Tensor x);
Tensor dropout(Graph& g, Tensor x, double rate, bool train, DropoutRng& rng);
Tensor softmax_rows(Graph& g, Tensor x);
Tensor softmax(Graph& g, Tensor x, int axis);  // axis 0: down columns, 1: along rows
Tensor layer_norm(Graph& g, Tensor x, Tensor gain, Tensor bias, double eps);
Tensor log_sum_exp_rows(Graph& g, Tensor x);            // -> [R×1]
Tensor row_normalize(Graph& g, Tensor x);               // L2; zero row -> zero
Tensor rowwise_dot(Graph& g, Tensor a, Tensor b);       // -> [R×1]
Tensor mean_all(Graph& g, Tensor x);                    // -> scalar
Tensor sum_all(Graph& g, Tensor x);                     // -> scalar
Tensor cosine_similarity(Graph& g, Tensor a, Tensor b);  // vectors -> scalar
// Per-row -log softmax probability of the labelled class. -> [R×1]
Tensor cross_entropy_with_logits(Graph& g, Tensor logits,
                                 const std::vector<int>& labels);
// x / clamp(e^tau, lo, hi); tau is a [1×1] tensor. Zero tau-gradient at the
// clamp boundaries.
Tensor apply_temperature(Graph& g, Tensor x, Tensor tau, double lo, double hi);

void check_finite(Tensor x, const char* what);

}  // namespace argus
