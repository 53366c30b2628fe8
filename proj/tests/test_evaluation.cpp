#include <doctest.h>

#include <cmath>
#include <vector>

#include "argus/evaluation.hpp"
#include "argus/world.hpp"

using namespace argus;

namespace {

std::vector<std::vector<double>> binary_preds(const std::vector<double>& p1) {
  std::vector<std::vector<double>> out;
  for (double p : p1) out.push_back({1.0 - p, p});
  return out;
}

}  // namespace

TEST_CASE("feedback NE reference fixture") {
  std::vector<int> labels{1, 0, 0, 1};
  auto preds = binary_preds({0.9, 0.1, 0.2, 0.8});
  double ne = normalized_entropy_factor(preds, labels, {0.5, 0.5});
  CHECK(ne == doctest::Approx(0.16425 / 0.69315).epsilon(1e-3));
}

TEST_CASE("feedback NE of the exact-baseline predictor is 1") {
  std::vector<double> baseline{0.3, 0.55, 0.15};
  std::vector<int> labels{0, 1, 2, 1, 1, 0, 2};
  std::vector<std::vector<double>> preds(labels.size(), baseline);
  CHECK(normalized_entropy_factor(preds, labels, baseline) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("feedback NE approaches 0 for confident correct predictions") {
  std::vector<int> labels{0, 1, 0};
  auto preds = binary_preds({1e-9, 1.0 - 1e-9, 1e-9});
  CHECK(normalized_entropy_factor(preds, labels, {0.5, 0.5}) < 0.01);
}

TEST_CASE("feedback NE rejects a zero-entropy baseline") {
  std::vector<int> labels{0, 0};
  auto preds = binary_preds({0.2, 0.3});
  CHECK_THROWS_AS(normalized_entropy_factor(preds, labels, {1.0, 0.0}), std::domain_error);
}

TEST_CASE("PA fixture: 3 correct and 1 tie give 0.875") {
  // impressions 0..4; pairs oriented positive-first
  std::vector<double> scores{3.0, 1.0, 2.0, 0.5, 0.5};
  std::vector<ImpressionPair> pairs{{0, 1}, {2, 1}, {2, 3}, {3, 4}};
  CHECK(pairwise_accuracy(scores, pairs) == doctest::Approx(0.875));
}

TEST_CASE("all-constant scorer gives PA exactly 0.5") {
  std::vector<double> scores(10, 1.23);
  std::vector<ImpressionPair> pairs{{0, 1}, {2, 5}, {7, 3}, {9, 8}};
  CHECK(pairwise_accuracy(scores, pairs) == 0.5);
}

TEST_CASE("random scorer is near 0.5 over many pairs") {
  Rng rng(7);
  std::vector<double> scores(2000);
  for (double& s : scores) s = rng.gaussian();
  std::vector<ImpressionPair> pairs;
  for (int i = 0; i < 10000; ++i) {
    int a = static_cast<int>(rng.next_below(scores.size()));
    int b = static_cast<int>(rng.next_below(scores.size()));
    if (a == b) continue;
    pairs.push_back({a, b});
  }
  double pa = pairwise_accuracy(scores, pairs);
  CHECK(std::fabs(pa - 0.5) <= 0.02);
}

TEST_CASE("PA of a scorer and its negation sum to 1; order-transform invariance") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> scores(50);
    for (double& s : scores) s = std::round(rng.gaussian() * 2.0) / 2.0;  // force some ties
    std::vector<ImpressionPair> pairs;
    for (int i = 0; i < 100; ++i)
      pairs.push_back({static_cast<int>(rng.next_below(50)), static_cast<int>(rng.next_below(50))});
    std::vector<double> neg(scores.size()), mono(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
      neg[i] = -scores[i];
      mono[i] = std::exp(0.7 * scores[i]) + 3.0;  // strictly increasing map
    }
    double pa = pairwise_accuracy(scores, pairs);
    CHECK(pa + pairwise_accuracy(neg, pairs) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pairwise_accuracy(mono, pairs) == doctest::Approx(pa).epsilon(1e-12));
  }
}

TEST_CASE("PA rejects an empty pair set") {
  CHECK_THROWS_AS(pairwise_accuracy({1.0}, {}), std::invalid_argument);
}

TEST_CASE("PAU closed forms") {
  CHECK(pau(0.66, 0.60) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(pau(0.6, 0.6) == doctest::Approx(0.0));
  CHECK(pau(0.57, 0.60) == doctest::Approx(-5.0).epsilon(1e-12));
  CHECK_THROWS_AS(pau(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("baseline scorers: constant, popularity, oracle preconditions") {
  std::vector<UserSequence> train(1);
  train[0].user_id = "u0";
  Interaction a;
  a.user_id = "u0";
  a.item_id = "hot";
  a.is_impression = true;
  Interaction b = a;
  b.item_id = "cold";
  b.is_impression = false;  // organic, not counted by popularity
  train[0].interactions = {a, a, a, b};

  auto constant = baseline_scorer("constant", train, nullptr);
  CHECK(constant("u0", a) == 0.0);

  auto popularity = baseline_scorer("popularity", train, nullptr);
  CHECK(popularity("u0", a) == 3.0);
  CHECK(popularity("u0", b) == 0.0);

  CHECK_THROWS_AS(baseline_scorer("oracle-relevance", train, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(baseline_scorer("nonsense", train, nullptr), std::invalid_argument);
}

TEST_CASE("baseline estimation: distributions sum to 1, strictly from training data") {
  std::vector<UserSequence> train(1);
  Interaction ev;
  ev.item_id = "i1";
  ev.feedback = {1, 0, 3};
  train[0].interactions = {ev, ev};
  ev.item_id = "i2";
  ev.feedback = {0, 1, 1};
  train[0].interactions.push_back(ev);
  FeedbackSchema schema;
  auto base = estimate_baseline(train, schema, {"i1", "i2", "i3"});
  for (const auto& dist : base.feedback) {
    double s = 0;
    for (double x : dist) s += x;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(base.feedback[0][1] == doctest::Approx(2.0 / 3.0));
  // add-one smoothed unigram sums to 1 over the catalog
  double total = base.unigram_prob("i1") + base.unigram_prob("i2") + base.unigram_prob("i3");
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(base.unigram_prob("i3") == doctest::Approx(1.0 / 6.0));
  CHECK(base.unigram_prob("i1") > base.unigram_prob("i2"));
}

TEST_CASE("metrics report json round-trip and table rendering") {
  MetricsReport r;
  r.feedback_ne = {{"like", 0.91}, {"skip", 0.88}};
  r.next_item_ne = 0.7;
  r.pa = 0.61;
  r.pa_baseline = 0.55;
  r.pau = pau(r.pa, r.pa_baseline);
  r.baseline_name = "popularity";
  r.n_pairs = 120;
  r.n_steps = 900;
  r.n_users = 40;
  r.config_digest = "digest";
  r.seed = 7;
  MetricsReport back = MetricsReport::from_json(r.to_json());
  CHECK(back.feedback_ne == r.feedback_ne);
  CHECK(back.next_item_ne == r.next_item_ne);
  CHECK(back.pa == r.pa);
  CHECK(back.pau == r.pau);
  CHECK(back.seed == r.seed);
  std::string table = r.render_table();
  CHECK(table.find("next-item NE") != std::string::npos);
  CHECK(table.find("popularity") != std::string::npos);
}

TEST_CASE("untrained model evaluates near NE 1 and is deterministic") {
  WorldConfig wc;
  wc.n_users = 60;
  wc.n_items = 150;
  wc.n_days = 12;
  wc.seed = 91;
  auto gen = generate(wc);
  int64_t cutoff = static_cast<int64_t>(wc.n_days - 4) * 86400;
  TemporalSplit split = temporal_split(gen.sequences, cutoff, 4 * 86400);
  REQUIRE(!split.test.empty());

  ModelConfig mc;
  mc.embedding.table_rows = 512;
  mc.embedding.sub_dim = 8;
  mc.embedding.max_len = 64;
  mc.encoder.n_layers = 1;
  mc.encoder.width = 16;
  mc.encoder.n_heads = 2;
  mc.encoder.max_len = 64;
  Model model(mc, 17);
  // neutral similarity scale, so random cosine logits stay near-uniform and
  // the untrained model should land close to the baselines
  model.params().find("temperature.tau")->t.v[0] = 0.0;

  EvalConfig ec;
  ec.seq_len = 32;
  ec.n_uniform = 64;
  ec.n_inbatch = 64;
  ec.seed = 5;
  EvalOutput a = evaluate_model(model, split, gen.header, &gen.world, ec);
  EvalOutput b = evaluate_model(model, split, gen.header, &gen.world, ec);
  CHECK(a.report.to_json() == b.report.to_json());

  CHECK(a.report.next_item_ne == doctest::Approx(1.0).epsilon(0.12));
  // random feedback logits predict near-uniform, so the expected NE per factor
  // is ln(C) over the baseline cross-entropy on the holdout labels
  BaselineDistribution base =
      estimate_baseline(split.train, gen.header.schema, gen.header.item_ids);
  std::map<std::string, std::pair<double, int64_t>> holdout_ce;
  for (const auto& hs : split.test)
    for (const auto& ev : hs.targets)
      for (int k = 0; k < gen.header.schema.n_factors(); ++k) {
        auto& [ce, n] = holdout_ce[gen.header.schema.names[k]];
        ce += -std::log(base.feedback[k][ev.feedback.factor(k)]);
        ++n;
      }
  for (const auto& [name, ne] : a.report.feedback_ne) {
    int k = 0;
    while (gen.header.schema.names[k] != name) ++k;
    double expected = std::log(static_cast<double>(gen.header.schema.cardinalities[k])) /
                      (holdout_ce[name].first / holdout_ce[name].second);
    CHECK(ne == doctest::Approx(expected).epsilon(0.1));
  }
  CHECK(a.report.n_steps > 0);
  CHECK(!a.scores.empty());
  // every exported score is a holdout impression
  for (const auto& s : a.scores) CHECK(s.ts >= cutoff);
}

TEST_CASE("oracle scorer beats popularity and constant on synthetic pairs") {
  WorldConfig wc;
  wc.n_users = 80;
  wc.n_items = 120;
  wc.n_days = 10;
  wc.seed = 37;
  auto gen = generate(wc);
  int64_t cutoff = static_cast<int64_t>(wc.n_days - 3) * 86400;
  TemporalSplit split = temporal_split(gen.sequences, cutoff, 3 * 86400);

  auto run = [&](const std::string& kind) {
    Scorer sc = baseline_scorer(kind, split.train, &gen.world);
    double num = 0;
    int64_t n = 0;
    for (const auto& hs : split.test) {
      auto pairs = build_impression_pairs(hs.targets, 2);
      if (pairs.empty()) continue;
      std::vector<double> scores(hs.targets.size(), 0.0);
      for (size_t i = 0; i < hs.targets.size(); ++i)
        if (hs.targets[i].is_impression) scores[i] = sc(hs.user_id, hs.targets[i]);
      num += pairwise_accuracy(scores, pairs) * pairs.size();
      n += static_cast<int64_t>(pairs.size());
    }
    REQUIRE(n > 50);
    return num / static_cast<double>(n);
  };
  double oracle = run("oracle-relevance");
  double pop = run("popularity");
  double constant = run("constant");
  CHECK(constant == doctest::Approx(0.5));
  CHECK(oracle > pop);
  CHECK(oracle > constant);
  CHECK(pop > constant);
}
