#include "argus/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace argus {

double lr_schedule(int step, bool head_group, const ScheduleConfig& cfg) {
  if (cfg.warmup_steps < 0 || cfg.total_steps < 1 || cfg.warmup_steps > cfg.total_steps)
    throw std::invalid_argument("lr_schedule: bad warmup/total configuration");
  int s = std::min(step, cfg.total_steps);
  if (!head_group) {
    if (cfg.warmup_steps == 0 || s >= cfg.warmup_steps) return cfg.backbone_peak;
    double frac = static_cast<double>(s) / cfg.warmup_steps;
    return cfg.backbone_start + frac * (cfg.backbone_peak - cfg.backbone_start);
  }
  if (s <= cfg.warmup_steps) return cfg.head_start;
  double frac = static_cast<double>(s - cfg.warmup_steps) /
                static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  return cfg.head_start + frac * (cfg.head_end - cfg.head_start);
}

double clip_global_norm(ParamStore& params, double max_norm) {
  double sq = 0;
  for (const auto& p : params.all())
    for (double g : p->t.g) sq += g * g;
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    double s = max_norm / norm;
    for (const auto& p : params.all())
      for (double& g : p->t.g) g *= s;
  }
  return norm;
}

AdamOptimizer::AdamOptimizer(ParamStore& params, const AdamConfig& cfg)
    : params_(params), cfg_(cfg) {
  for (const auto& p : params.all()) {
    Slot s;
    s.m.assign(p->t.numel(), 0.0);
    s.v.assign(p->t.numel(), 0.0);
    slots_.push_back(std::move(s));
  }
}

void AdamOptimizer::step(double lr_backbone, double lr_head) {
  if (slots_.size() != params_.all().size())
    throw std::runtime_error("AdamOptimizer: parameter set changed after construction");
  for (const auto& p : params_.all())
    for (double g : p->t.g)
      if (!std::isfinite(g)) {
        ++skipped_;
        return;
      }
  clip_global_norm(params_, cfg_.clip_norm);
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const auto& all = params_.all();
  for (size_t i = 0; i < all.size(); ++i) {
    Param& p = *all[i];
    double lr = p.head_group ? lr_head : lr_backbone;
    Slot& s = slots_[i];
    for (size_t j = 0; j < p.t.numel(); ++j) {
      double g = p.t.g[j];
      s.m[j] = cfg_.beta1 * s.m[j] + (1.0 - cfg_.beta1) * g;
      s.v[j] = cfg_.beta2 * s.v[j] + (1.0 - cfg_.beta2) * g * g;
      double mhat = s.m[j] / bc1;
      double vhat = s.v[j] / bc2;
      p.t.v[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void AdamOptimizer::restore(const std::vector<Slot>& slots, int64_t t, int64_t skipped) {
  if (slots.size() != slots_.size())
    throw std::invalid_argument("AdamOptimizer::restore: slot count mismatch");
  for (size_t i = 0; i < slots.size(); ++i)
    if (slots[i].m.size() != slots_[i].m.size())
      throw std::invalid_argument("AdamOptimizer::restore: slot shape mismatch");
  slots_ = slots;
  t_ = t;
  skipped_ = skipped;
}

}  // namespace argus
