#include "argus/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "argus/negatives.hpp"
#include "argus/objectives.hpp"

namespace argus {

using ordered_json = nlohmann::ordered_json;

double BaselineDistribution::unigram_prob(const std::string& item_id) const {
  auto it = unigram.find(item_id);
  return it == unigram.end() ? unigram_unseen : it->second;
}

BaselineDistribution estimate_baseline(const std::vector<UserSequence>& train,
                                       const FeedbackSchema& schema,
                                       const std::vector<std::string>& catalog) {
  BaselineDistribution out;
  out.feedback.resize(schema.n_factors());
  for (int k = 0; k < schema.n_factors(); ++k)
    out.feedback[k].assign(schema.cardinalities[k], 0.0);
  std::map<std::string, int64_t> item_counts;
  int64_t total = 0;
  for (const auto& seq : train)
    for (const auto& ev : seq.interactions) {
      for (int k = 0; k < schema.n_factors(); ++k) {
        int c = ev.feedback.factor(k);
        if (c < 0 || c >= schema.cardinalities[k])
          throw std::invalid_argument("estimate_baseline: feedback class out of range");
        out.feedback[k][c] += 1.0;
      }
      ++item_counts[ev.item_id];
      ++total;
    }
  for (auto& dist : out.feedback) {
    double s = 0;
    for (double x : dist) s += x;
    if (s > 0)
      for (double& x : dist) x /= s;
    else
      for (double& x : dist) x = 1.0 / dist.size();
  }
  // add-one smoothing over the catalog keeps unigram logits finite
  double denom = static_cast<double>(total) + static_cast<double>(catalog.size());
  out.unigram_unseen = 1.0 / denom;
  for (const auto& [id, c] : item_counts)
    out.unigram[id] = (static_cast<double>(c) + 1.0) / denom;
  return out;
}

double normalized_entropy_factor(const std::vector<std::vector<double>>& predictions,
                                 const std::vector<int>& labels,
                                 const std::vector<double>& baseline) {
  if (predictions.size() != labels.size() || predictions.empty())
    throw std::invalid_argument("normalized_entropy_factor: size mismatch or empty input");
  double model_ce = 0, base_ce = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    int y = labels[i];
    if (y < 0 || y >= static_cast<int>(baseline.size()))
      throw std::invalid_argument("normalized_entropy_factor: label out of range");
    model_ce += -std::log(std::max(predictions[i][y], 1e-300));
    base_ce += -std::log(std::max(baseline[y], 1e-300));
  }
  if (base_ce <= 0)
    throw std::domain_error("normalized_entropy_factor: degenerate baseline (zero entropy)");
  return model_ce / base_ce;
}

double pairwise_accuracy(const std::vector<double>& scores,
                         const std::vector<ImpressionPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("pairwise_accuracy: no pairs");
  double acc = 0;
  for (const auto& p : pairs) {
    double sp = scores.at(p.pos), sn = scores.at(p.neg);
    acc += sp > sn ? 1.0 : (sp == sn ? 0.5 : 0.0);
  }
  return acc / static_cast<double>(pairs.size());
}

double pau(double pa_model, double pa_baseline) {
  if (pa_baseline <= 0) throw std::invalid_argument("pau: baseline PA must be positive");
  return (pa_model - pa_baseline) / pa_baseline * 100.0;
}

Scorer baseline_scorer(const std::string& kind, const std::vector<UserSequence>& train,
                       const World* world) {
  if (kind == "constant")
    return [](const std::string&, const Interaction&) { return 0.0; };
  if (kind == "popularity") {
    auto counts = std::make_shared<std::map<std::string, int64_t>>();
    for (const auto& seq : train)
      for (const auto& ev : seq.interactions)
        if (ev.is_impression) ++(*counts)[ev.item_id];
    return [counts](const std::string&, const Interaction& imp) {
      auto it = counts->find(imp.item_id);
      return it == counts->end() ? 0.0 : static_cast<double>(it->second);
    };
  }
  if (kind == "oracle-relevance") {
    if (!world)
      throw std::invalid_argument("baseline_scorer: oracle-relevance needs world state");
    const World* w = world;
    return [w](const std::string& user_id, const Interaction& imp) {
      return w->oracle_relevance(user_id, imp.item_id);
    };
  }
  throw std::invalid_argument("baseline_scorer: unknown kind " + kind);
}

std::string MetricsReport::to_json() const {
  ordered_json j;
  j["feedback_ne"] = feedback_ne;
  j["next_item_ne"] = next_item_ne;
  j["pa"] = pa;
  j["pa_baseline"] = pa_baseline;
  j["pau_percent"] = pau;
  j["baseline_name"] = baseline_name;
  j["n_pairs"] = n_pairs;
  j["n_steps"] = n_steps;
  j["n_users"] = n_users;
  j["config_digest"] = config_digest;
  j["seed"] = seed;
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& s) {
  ordered_json j = ordered_json::parse(s);
  MetricsReport r;
  for (const auto& [k, v] : j.at("feedback_ne").items()) r.feedback_ne[k] = v.get<double>();
  r.next_item_ne = j.at("next_item_ne").get<double>();
  r.pa = j.at("pa").get<double>();
  r.pa_baseline = j.at("pa_baseline").get<double>();
  r.pau = j.at("pau_percent").get<double>();
  r.baseline_name = j.at("baseline_name").get<std::string>();
  r.n_pairs = j.at("n_pairs").get<int64_t>();
  r.n_steps = j.at("n_steps").get<int64_t>();
  r.n_users = j.at("n_users").get<int64_t>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.seed = j.at("seed").get<uint64_t>();
  return r;
}

std::string MetricsReport::render_table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(5);
  os << "metric                        value\n";
  os << "----------------------------  --------\n";
  for (const auto& [name, ne] : feedback_ne)
    os << std::left << std::setw(30) << ("feedback NE (" + name + ")") << ne << "\n";
  os << std::left << std::setw(30) << "next-item NE" << next_item_ne << "\n";
  os << std::left << std::setw(30) << "pairwise accuracy" << pa << "\n";
  os << std::left << std::setw(30) << ("PA baseline (" + baseline_name + ")") << pa_baseline
     << "\n";
  os << std::left << std::setw(30) << "PA uplift (%)" << pau << "\n";
  os << std::left << std::setw(30) << "pairs" << n_pairs << "\n";
  os << std::left << std::setw(30) << "steps" << n_steps << "\n";
  os << std::left << std::setw(30) << "users" << n_users << "\n";
  return os.str();
}

namespace {

// sampled-softmax loss for a scorer with fixed per-item logits, mirroring
// nip_loss arithmetic without tensors
double sampled_loss_fixed(double pos_logit, const std::vector<double>& neg_logits,
                          const std::vector<double>& neg_log_q,
                          const std::vector<char>& neg_masked) {
  double m = pos_logit;
  for (size_t i = 0; i < neg_logits.size(); ++i)
    if (!neg_masked[i]) m = std::max(m, neg_logits[i] - neg_log_q[i]);
  double denom = std::exp(pos_logit - m);
  for (size_t i = 0; i < neg_logits.size(); ++i)
    if (!neg_masked[i]) denom += std::exp(neg_logits[i] - neg_log_q[i] - m);
  return m + std::log(denom) - pos_logit;
}

std::vector<double> row_softmax(const Tensor t, int row) {
  std::vector<double> out(t->cols);
  double m = -1e300;
  for (int c = 0; c < t->cols; ++c) m = std::max(m, t->at(row, c));
  double s = 0;
  for (int c = 0; c < t->cols; ++c) s += out[c] = std::exp(t->at(row, c) - m);
  for (double& x : out) x /= s;
  return out;
}

}  // namespace

EvalOutput evaluate_model(const Model& model, const TemporalSplit& split,
                          const DatasetHeader& header, const World* world,
                          const EvalConfig& cfg) {
  const FeedbackSchema& schema = header.schema;
  BaselineDistribution base = estimate_baseline(split.train, schema, header.item_ids);
  Scorer pa_base_scorer = baseline_scorer(cfg.pa_baseline, split.train, world);

  // sketch over the training-positive stream, as in pre-training
  CountMinSketch sketch(cfg.sketch_depth, cfg.sketch_width, hash_combine(cfg.seed, 0xe7a1));
  for (const auto& seq : split.train)
    for (const auto& ev : seq.interactions) sketch.insert(ev.item_id);

  double model_nip_sum = 0, unigram_nip_sum = 0;
  std::vector<double> fb_model_ce(schema.n_factors(), 0.0);
  std::vector<double> fb_base_ce(schema.n_factors(), 0.0);
  int64_t n_steps = 0, n_users = 0;
  double pa_num = 0, pa_base_num = 0;
  int64_t n_pairs = 0;
  EvalOutput out;

  Rng rng(hash_combine(cfg.seed, 0xe0a1));
  DropoutRng drop(0);
  const int seg_len = std::max(1, cfg.seq_len / 2);

  for (const auto& hs : split.test) {
    if (hs.targets.empty()) continue;
    ++n_users;
    std::vector<Interaction> history = hs.context;  // grows as segments are consumed
    std::vector<double> target_scores(hs.targets.size(), 0.0);

    for (size_t a = 0; a < hs.targets.size(); a += seg_len) {
      size_t b = std::min(a + static_cast<size_t>(seg_len), hs.targets.size());
      int seg = static_cast<int>(b - a);
      int ctx = std::min(static_cast<int>(history.size()), cfg.seq_len - seg);
      std::vector<Interaction> window(history.end() - ctx, history.end());
      window.insert(window.end(), hs.targets.begin() + a, hs.targets.begin() + b);

      Graph g;
      g.recording = false;
      ChunkForward fwd = model.forward_chunk(g, window, false, drop);

      // next-item NE over the segment rows, negatives shared within the window
      std::vector<BatchPositive> positives;
      std::vector<std::string> pos_ids;
      for (int t = ctx; t < ctx + seg; ++t) {
        positives.push_back({0, t, window[t].item_id});
        pos_ids.push_back(window[t].item_id);
      }
      NegativeBatch negs =
          draw_negatives(positives, header.item_ids, cfg.n_uniform, cfg.n_inbatch, sketch, rng);
      std::vector<std::string> neg_ids;
      std::vector<double> neg_log_q;
      for (const auto& n : negs.items) {
        neg_ids.push_back(n.item_id);
        neg_log_q.push_back(n.log_q);
      }
      Tensor neg_items = model.embed_items(g, neg_ids);
      Tensor query = slice_rows(g, fwd.nip_query, ctx, seg);
      Tensor pos_items = model.embed_items(g, pos_ids);
      // identity masking: any negative draw equal to a row's positive is
      // excluded for that row, for the model and the unigram reference alike
      std::vector<std::pair<int, int>> masked;
      for (size_t n = 0; n < negs.items.size(); ++n)
        for (int r = 0; r < seg; ++r)
          if (neg_ids[n] == pos_ids[r]) masked.emplace_back(r, static_cast<int>(n));
      Tensor nip = nip_loss(g, query, pos_items, neg_items, neg_log_q, model.temperature(),
                            masked);
      for (int r = 0; r < seg; ++r) model_nip_sum += nip->at(r, 0);

      // unigram reference on the identical draws and corrections
      for (int r = 0; r < seg; ++r) {
        double pos_logit = std::log(base.unigram_prob(pos_ids[r]));
        std::vector<double> neg_logits(neg_ids.size());
        std::vector<char> neg_masked(neg_ids.size(), 0);
        for (size_t n = 0; n < neg_ids.size(); ++n) {
          neg_logits[n] = std::log(base.unigram_prob(neg_ids[n]));
          if (neg_ids[n] == pos_ids[r]) neg_masked[n] = 1;
        }
        unigram_nip_sum += sampled_loss_fixed(pos_logit, neg_logits, neg_log_q, neg_masked);
      }

      // per-factor feedback cross-entropies
      Tensor item_state = slice_rows(g, fwd.item_state, ctx, seg);
      for (int k = 0; k < schema.n_factors(); ++k) {
        Tensor logits = model.feedback_logits(g, item_state, k);
        for (int r = 0; r < seg; ++r) {
          int y = window[ctx + r].feedback.factor(k);
          std::vector<double> p = row_softmax(logits, r);
          fb_model_ce[k] += -std::log(std::max(p[y], 1e-300));
          fb_base_ce[k] += -std::log(std::max(base.feedback[k][y], 1e-300));
        }
      }
      n_steps += seg;

      // two-tower scores for the segment's impressions, aligned with latency
      std::vector<int64_t> state_ts;
      for (const auto& ev : window) state_ts.push_back(ev.ts);
      std::vector<int> imp_rows;
      std::vector<int64_t> imp_ts;
      for (int t = ctx; t < ctx + seg; ++t)
        if (window[t].is_impression) {
          imp_rows.push_back(t);
          imp_ts.push_back(window[t].ts);
        }
      if (!imp_rows.empty()) {
        auto aligned = align_impressions(state_ts, imp_ts, cfg.latency);
        std::vector<std::string> imp_ids;
        for (int t : imp_rows) imp_ids.push_back(window[t].item_id);
        Tensor imp_items = model.embed_items(g, imp_ids);
        Tensor h0 = model.initial_state();
        for (size_t i = 0; i < imp_rows.size(); ++i) {
          int s = aligned[i].state;
          double dot = 0;
          for (int c = 0; c < imp_items->cols; ++c) {
            double hv = s < 0 ? h0->at(0, c) : fwd.states->at(s, c);
            dot += hv * imp_items->at(i, c);
          }
          size_t tgt = a + static_cast<size_t>(imp_rows[i] - ctx);
          target_scores[tgt] = dot;
          out.scores.push_back({hs.user_id, window[imp_rows[i]].ts,
                                window[imp_rows[i]].item_id, dot});
        }
      }
      history.insert(history.end(), hs.targets.begin() + a, hs.targets.begin() + b);
    }

    // adjacent impression pairs over this user's holdout targets
    auto pairs = build_impression_pairs(hs.targets, cfg.pair_window, cfg.listen_tiebreak);
    if (!pairs.empty()) {
      std::vector<double> base_scores(hs.targets.size(), 0.0);
      for (size_t i = 0; i < hs.targets.size(); ++i)
        if (hs.targets[i].is_impression)
          base_scores[i] = pa_base_scorer(hs.user_id, hs.targets[i]);
      pa_num += pairwise_accuracy(target_scores, pairs) * pairs.size();
      pa_base_num += pairwise_accuracy(base_scores, pairs) * pairs.size();
      n_pairs += static_cast<int64_t>(pairs.size());
    }
  }

  MetricsReport& rep = out.report;
  rep.baseline_name = cfg.pa_baseline;
  rep.seed = cfg.seed;
  rep.config_digest = model.config().digest();
  rep.n_steps = n_steps;
  rep.n_users = n_users;
  rep.n_pairs = n_pairs;
  if (n_steps == 0) throw std::runtime_error("evaluate_model: holdout has no target steps");
  rep.next_item_ne = model_nip_sum / unigram_nip_sum;
  for (int k = 0; k < schema.n_factors(); ++k) {
    if (fb_base_ce[k] <= 0) {
      std::fprintf(stderr, "warning: factor %s has a zero-entropy baseline, skipped\n",
                   schema.names[k].c_str());
      continue;
    }
    rep.feedback_ne[schema.names[k]] = fb_model_ce[k] / fb_base_ce[k];
  }
  if (n_pairs > 0) {
    rep.pa = pa_num / static_cast<double>(n_pairs);
    rep.pa_baseline = pa_base_num / static_cast<double>(n_pairs);
    rep.pau = pau(rep.pa, rep.pa_baseline);
  } else {
    rep.pa = rep.pa_baseline = 0.5;
    rep.pau = 0.0;
  }
  return out;
}

}  // namespace argus
