#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "argus/world.hpp"

using namespace argus;

namespace {

WorldConfig small_config() {
  WorldConfig cfg;
  cfg.n_users = 60;
  cfg.n_items = 50;
  cfg.n_days = 12;
  cfg.latent_dim = 8;
  cfg.seed = 42;
  return cfg;
}

std::string events_as_string(const std::vector<UserSequence>& seqs) {
  std::string path = "/tmp/argus_world_det.jsonl";
  save_events(path, seqs);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::remove(path.c_str());
  return ss.str();
}

}  // namespace

TEST_CASE("generation is byte-identical under a fixed seed") {
  auto cfg = small_config();
  auto a = generate(cfg);
  auto b = generate(cfg);
  CHECK(events_as_string(a.sequences) == events_as_string(b.sequences));
}

TEST_CASE("different seeds give different logs") {
  auto cfg = small_config();
  auto a = generate(cfg);
  cfg.seed = 43;
  auto b = generate(cfg);
  CHECK(events_as_string(a.sequences) != events_as_string(b.sequences));
}

TEST_CASE("impression flag matches surface everywhere") {
  auto res = generate(small_config());
  size_t total = 0;
  for (const auto& seq : res.sequences) {
    for (const auto& ev : seq.interactions) {
      ++total;
      CHECK(ev.is_impression == (ev.surface == "rec"));
      CHECK(ev.ts >= 0);
    }
  }
  CHECK(total > 500);
}

TEST_CASE("zero drift and zero temperature concentrate organic picks on the argmax item") {
  auto cfg = small_config();
  cfg.drift_rate = 0.0;
  cfg.organic_temp = 0.0;
  cfg.rec_fraction = 0.0;
  auto res = generate(cfg);
  for (const auto& seq : res.sequences) {
    std::set<std::string> items;
    for (const auto& ev : seq.interactions) items.insert(ev.item_id);
    if (!seq.interactions.empty()) CHECK(items.size() == 1);
  }
}

TEST_CASE("top-decile relevance pairs get more likes than bottom-decile") {
  auto cfg = small_config();
  cfg.n_users = 200;
  cfg.n_days = 20;
  auto res = generate(cfg);
  // counting oracle over the generated log, relevance from world ground truth
  std::vector<std::pair<double, int>> rel_like;
  for (const auto& seq : res.sequences)
    for (const auto& ev : seq.interactions)
      rel_like.push_back({res.world.oracle_relevance(ev.user_id, ev.item_id), ev.feedback.like});
  std::sort(rel_like.begin(), rel_like.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  size_t dec = rel_like.size() / 10;
  REQUIRE(dec > 100);
  double bottom = 0, top = 0;
  for (size_t i = 0; i < dec; ++i) bottom += rel_like[i].second;
  for (size_t i = rel_like.size() - dec; i < rel_like.size(); ++i) top += rel_like[i].second;
  CHECK(top / dec > bottom / dec);
}

TEST_CASE("oracle relevance identities and errors") {
  auto res = generate(small_config());
  World& w = res.world;
  // identical latents -> maximal among unit-norm pairs
  w.user_lat[0] = w.item_lat[0];
  CHECK(w.oracle_relevance(w.user_ids[0], w.item_ids[0]) == doctest::Approx(1.0));
  // orthogonal latents -> 0
  std::fill(w.user_lat[1].begin(), w.user_lat[1].end(), 0.0);
  std::fill(w.item_lat[1].begin(), w.item_lat[1].end(), 0.0);
  w.user_lat[1][0] = 1.0;
  w.item_lat[1][1] = 1.0;
  CHECK(w.oracle_relevance(w.user_ids[1], w.item_ids[1]) == doctest::Approx(0.0));
  CHECK_THROWS_AS(w.oracle_relevance("nobody", w.item_ids[0]), std::invalid_argument);
  CHECK_THROWS_AS(w.oracle_relevance(w.user_ids[0], "nothing"), std::invalid_argument);
}

TEST_CASE("like-rate rank-correlates with oracle relevance") {
  auto cfg = small_config();
  cfg.n_users = 300;
  cfg.n_days = 20;
  auto res = generate(cfg);
  // bucket interactions by relevance, compare bucket rank vs like-rate rank
  const int n_buckets = 10;
  std::vector<double> rels;
  for (const auto& seq : res.sequences)
    for (const auto& ev : seq.interactions)
      rels.push_back(res.world.oracle_relevance(ev.user_id, ev.item_id));
  auto sorted = rels;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> like_sum(n_buckets, 0), like_cnt(n_buckets, 0);
  size_t idx = 0;
  for (const auto& seq : res.sequences)
    for (const auto& ev : seq.interactions) {
      double r = rels[idx++];
      int b = static_cast<int>((std::lower_bound(sorted.begin(), sorted.end(), r) - sorted.begin()) *
                               n_buckets / sorted.size());
      b = std::min(b, n_buckets - 1);
      like_sum[b] += ev.feedback.like;
      like_cnt[b] += 1;
    }
  // Spearman over bucket index vs like rate
  std::vector<double> rate(n_buckets);
  for (int b = 0; b < n_buckets; ++b) rate[b] = like_sum[b] / std::max(like_cnt[b], 1.0);
  std::vector<int> order(n_buckets);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return rate[a] < rate[b]; });
  double d2 = 0;
  for (int pos = 0; pos < n_buckets; ++pos) {
    double d = order[pos] - pos;
    d2 += d * d;
  }
  double spearman = 1.0 - 6.0 * d2 / (n_buckets * (n_buckets * n_buckets - 1.0));
  CHECK(spearman > 0.5);
}

TEST_CASE("pure-popularity policy follows the configured zipf law (chi-squared)") {
  WorldConfig cfg = small_config();
  cfg.n_users = 400;
  cfg.n_days = 30;
  cfg.rec_fraction = 1.0;
  cfg.policy_rel_weight = 0.0;  // isolate the popularity component
  cfg.policy_pop_weight = 1.0;
  cfg.policy_noise = 1.0;       // softmax over log pop == the zipf law itself
  auto res = generate(cfg);
  std::map<std::string, size_t> counts;
  size_t total = 0;
  for (const auto& seq : res.sequences)
    for (const auto& ev : seq.interactions) {
      ++counts[ev.item_id];
      ++total;
    }
  REQUIRE(total > 100000);
  double chi2 = 0;
  for (int i = 0; i < cfg.n_items; ++i) {
    double expected = res.world.popularity[i] * total;
    double observed = counts.count(res.world.item_ids[i]) ? counts[res.world.item_ids[i]] : 0.0;
    chi2 += (observed - expected) * (observed - expected) / expected;
  }
  // df = 49; mean 49, sd ~9.9; allow ~4 sigma
  CHECK(chi2 < 90.0);
}

TEST_CASE("world state round-trips through save/load") {
  auto res = generate(small_config());
  std::string path = "/tmp/argus_world_state.json";
  res.world.save(path);
  World loaded = World::load(path);
  std::remove(path.c_str());
  CHECK(loaded.user_lat == res.world.user_lat);
  CHECK(loaded.item_lat == res.world.item_lat);
  CHECK(loaded.popularity == res.world.popularity);
  CHECK(loaded.cfg.seed == res.world.cfg.seed);
  CHECK(loaded.oracle_relevance(loaded.user_ids[3], loaded.item_ids[7]) ==
        res.world.oracle_relevance(res.world.user_ids[3], res.world.item_ids[7]));
}

TEST_CASE("config validation") {
  WorldConfig bad = small_config();
  bad.zipf_exponent = 0.0;
  CHECK_THROWS_AS(generate(bad), std::invalid_argument);
  bad = small_config();
  bad.n_users = 0;
  CHECK_THROWS_AS(generate(bad), std::invalid_argument);
}

TEST_CASE("config json round-trip") {
  WorldConfig cfg = small_config();
  cfg.organic_temp = 0.375;
  WorldConfig back = WorldConfig::from_json(cfg.to_json());
  CHECK(back.organic_temp == cfg.organic_temp);
  CHECK(back.n_users == cfg.n_users);
  CHECK(back.seed == cfg.seed);
}
