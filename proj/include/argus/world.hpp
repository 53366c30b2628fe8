#pragma once

// Synthetic interaction-log generator: a latent-preference environment plus a
// deliberately popularity-heavy logging policy, so that both imitation
// (next-item) and preference (feedback) signals exist and are learnable.

#include <cstdint>
#include <string>
#include <vector>

#include "argus/data.hpp"

namespace argus {

struct WorldConfig {
  int n_users = 2000;
  int n_items = 5000;
  int latent_dim = 16;
  int n_days = 60;
  double zipf_exponent = 1.3;  // item popularity law
  double rec_fraction = 0.5;   // share of sessions on the recommendation surface

  // session structure
  double sessions_per_day = 3.0;   // Poisson mean
  double session_len_mean = 5.0;   // geometric mean, at least 1 event

  // logging policy: argmax of pop_weight*log(pop) + rel_weight*rel + noise*gumbel
  double policy_pop_weight = 1.0;
  double policy_rel_weight = 1.5;
  double policy_noise = 0.8;

  // organic choice: softmax(rel / organic_temp); temp 0 degenerates to argmax
  double organic_temp = 0.12;

  // feedback model
  double feedback_alpha = 3.5;     // slope on relevance
  double feedback_noise = 0.5;     // listen-bucket noise
  double like_bias = -1.0;
  double skip_bias = -0.5;
  double quality_pop_weight = 0.3;   // item quality correlated with popularity
  double quality_noise = 0.6;        // idiosyncratic item quality

  double drift_rate = 0.002;  // per-day user-latent drift
  uint64_t seed = 1;

  std::string to_json() const;
  static WorldConfig from_json(const std::string& s);
  void validate() const;
};

// Ground-truth latent state. User latents are the post-generation (drifted)
// vectors; exposed only to tests and baseline scorers, never to the model.
struct World {
  WorldConfig cfg;
  std::vector<std::vector<double>> user_lat;
  std::vector<std::vector<double>> item_lat;
  std::vector<double> popularity;  // normalized Zipf weights
  std::vector<double> quality;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;

  double oracle_relevance(const std::string& user_id, const std::string& item_id) const;

  void save(const std::string& path) const;
  static World load(const std::string& path);
};

struct GenerateResult {
  std::vector<UserSequence> sequences;  // user-id order
  World world;
  DatasetHeader header;
};

// Fully determined by cfg.seed; O(total events + n_users*n_days*n_items) time.
GenerateResult generate(const WorldConfig& cfg);

}  // namespace argus
