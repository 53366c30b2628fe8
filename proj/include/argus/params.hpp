#pragma once

// Named trainable parameters, grouped for the backbone/head learning-rate
// split: the head group holds feedback heads, merge-projection output layers
// and the softmax temperature; everything else is backbone.

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "argus/tensor.hpp"

namespace argus {

struct Param {
  std::string name;
  bool head_group = false;
  TensorData t;
};

class ParamStore {
 public:
  Tensor add(const std::string& name, int rows, int cols, bool head_group = false) {
    for (const auto& p : params_)
      if (p->name == name) throw std::invalid_argument("duplicate parameter: " + name);
    auto p = std::make_unique<Param>();
    p->name = name;
    p->head_group = head_group;
    p->t.rows = rows;
    p->t.cols = cols;
    p->t.v.assign(static_cast<size_t>(rows) * cols, 0.0);
    p->t.g.assign(p->t.v.size(), 0.0);
    p->t.requires_grad = true;
    params_.push_back(std::move(p));
    return &params_.back()->t;
  }

  Param* find(const std::string& name) {
    for (const auto& p : params_)
      if (p->name == name) return p.get();
    return nullptr;
  }

  const std::vector<std::unique_ptr<Param>>& all() const { return params_; }

  void zero_grads() {
    for (const auto& p : params_) p->t.zero_grad();
  }

  size_t total_parameters() const {
    size_t n = 0;
    for (const auto& p : params_) n += p->t.numel();
    return n;
  }

 private:
  std::vector<std::unique_ptr<Param>> params_;
};

inline void init_gaussian(Tensor t, Rng& rng, double scale) {
  for (double& x : t->v) x = scale * rng.gaussian();
}

inline void init_constant(Tensor t, double value) {
  for (double& x : t->v) x = value;
}

}  // namespace argus
