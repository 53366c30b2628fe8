#pragma once

// Offline metrics on the temporal holdout: normalized entropy for feedback
// and next-item prediction, pairwise accuracy over adjacent impression pairs,
// and pair accuracy uplift against a baseline scorer.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "argus/data.hpp"
#include "argus/model.hpp"
#include "argus/world.hpp"

namespace argus {

// Constant reference distributions estimated strictly from pre-cutoff data.
struct BaselineDistribution {
  std::vector<std::vector<double>> feedback;        // per factor, class probabilities
  std::map<std::string, double> unigram;            // item -> smoothed probability
  double unigram_unseen = 0.0;                      // probability mass of an unseen item

  double unigram_prob(const std::string& item_id) const;
};

// Add-one smoothed over the catalog so the unigram scorer has finite logits
// for unseen items.
BaselineDistribution estimate_baseline(const std::vector<UserSequence>& train,
                                       const FeedbackSchema& schema,
                                       const std::vector<std::string>& catalog);

struct MetricsReport {
  std::map<std::string, double> feedback_ne;  // per factor
  double next_item_ne = 0.0;
  double pa = 0.0;
  double pa_baseline = 0.0;
  double pau = 0.0;  // percent vs the named baseline
  std::string baseline_name;
  int64_t n_pairs = 0;
  int64_t n_steps = 0;
  int64_t n_users = 0;
  std::string config_digest;
  uint64_t seed = 0;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& s);
  std::string render_table() const;
};

// Mean cross-entropy of predictions divided by mean cross-entropy of the
// constant baseline distribution. predictions[i] is a distribution over
// classes, labels[i] the observed class.
double normalized_entropy_factor(const std::vector<std::vector<double>>& predictions,
                                 const std::vector<int>& labels,
                                 const std::vector<double>& baseline);

// 1 / 0.5 / 0 per pair for correct order / tie / inversion, averaged.
double pairwise_accuracy(const std::vector<double>& scores,
                         const std::vector<ImpressionPair>& pairs);

// (pa_model - pa_baseline) / pa_baseline * 100.
double pau(double pa_model, double pa_baseline);

// Score of one holdout impression for a given user. Kinds: "popularity"
// (training-window impression frequency), "oracle-relevance" (synthetic
// ground truth, test-only), "constant".
using Scorer = std::function<double(const std::string& user_id, const Interaction& imp)>;
Scorer baseline_scorer(const std::string& kind, const std::vector<UserSequence>& train,
                       const World* world);

struct EvalConfig {
  int seq_len = 128;       // per-user evaluation window
  int n_uniform = 512;     // sampled-softmax negatives for next-item NE
  int n_inbatch = 512;
  int sketch_depth = 4;
  int sketch_width = 4096;
  int64_t latency = 86400;  // state-to-impression alignment delay
  int pair_window = 2;
  bool listen_tiebreak = false;
  std::string pa_baseline = "popularity";
  uint64_t seed = 0;
};

struct ScoredImpression {
  std::string user_id;
  int64_t ts = 0;
  std::string item_id;
  double score = 0.0;
};

struct EvalOutput {
  MetricsReport report;
  std::vector<ScoredImpression> scores;  // one per holdout impression
};

// Full protocol: per-user windows over the holdout targets with pre-cutoff
// context, sampled-softmax next-item NE against the unigram scorer on
// identical negative draws, per-factor feedback NE, and latency-aligned
// two-tower PA/PAU. Deterministic given (model parameters, split, config).
EvalOutput evaluate_model(const Model& model, const TemporalSplit& split,
                          const DatasetHeader& header, const World* world,
                          const EvalConfig& cfg);

}  // namespace argus
