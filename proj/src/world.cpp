#include "argus/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "argus/tensor.hpp"

namespace argus {

using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

int sample_poisson(Rng& rng, double lambda) {
  double limit = std::exp(-lambda);
  double p = 1.0;
  int k = 0;
  do {
    p *= rng.uniform();
    ++k;
  } while (p > limit);
  return k - 1;
}

int sample_geometric_at_least_one(Rng& rng, double mean) {
  if (mean <= 1.0) return 1;
  double p = 1.0 / mean;  // success prob; mean of (1 + failures before success) = 1/p
  double u = std::max(rng.uniform(), 1e-300);
  return 1 + static_cast<int>(std::log(u) / std::log(1.0 - p));
}

std::vector<double> random_unit_vector(Rng& rng, int dim) {
  std::vector<double> v(dim);
  double n2 = 0.0;
  for (double& x : v) {
    x = rng.gaussian();
    n2 += x * x;
  }
  double inv = 1.0 / std::sqrt(std::max(n2, 1e-12));
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace

std::string WorldConfig::to_json() const {
  ordered_json j;
  j["n_users"] = n_users;
  j["n_items"] = n_items;
  j["latent_dim"] = latent_dim;
  j["n_days"] = n_days;
  j["zipf_exponent"] = zipf_exponent;
  j["rec_fraction"] = rec_fraction;
  j["sessions_per_day"] = sessions_per_day;
  j["session_len_mean"] = session_len_mean;
  j["policy_pop_weight"] = policy_pop_weight;
  j["policy_rel_weight"] = policy_rel_weight;
  j["policy_noise"] = policy_noise;
  j["organic_temp"] = organic_temp;
  j["feedback_alpha"] = feedback_alpha;
  j["feedback_noise"] = feedback_noise;
  j["like_bias"] = like_bias;
  j["skip_bias"] = skip_bias;
  j["quality_pop_weight"] = quality_pop_weight;
  j["quality_noise"] = quality_noise;
  j["drift_rate"] = drift_rate;
  j["seed"] = seed;
  return j.dump();
}

WorldConfig WorldConfig::from_json(const std::string& s) {
  json j = json::parse(s);
  WorldConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_users", c.n_users);
  get("n_items", c.n_items);
  get("latent_dim", c.latent_dim);
  get("n_days", c.n_days);
  get("zipf_exponent", c.zipf_exponent);
  get("rec_fraction", c.rec_fraction);
  get("sessions_per_day", c.sessions_per_day);
  get("session_len_mean", c.session_len_mean);
  get("policy_pop_weight", c.policy_pop_weight);
  get("policy_rel_weight", c.policy_rel_weight);
  get("policy_noise", c.policy_noise);
  get("organic_temp", c.organic_temp);
  get("feedback_alpha", c.feedback_alpha);
  get("feedback_noise", c.feedback_noise);
  get("like_bias", c.like_bias);
  get("skip_bias", c.skip_bias);
  get("quality_pop_weight", c.quality_pop_weight);
  get("quality_noise", c.quality_noise);
  get("drift_rate", c.drift_rate);
  get("seed", c.seed);
  return c;
}

void WorldConfig::validate() const {
  if (n_users < 1 || n_items < 1) throw std::invalid_argument("world: need >= 1 user and item");
  if (latent_dim < 1) throw std::invalid_argument("world: latent_dim must be >= 1");
  if (zipf_exponent <= 0) throw std::invalid_argument("world: zipf_exponent must be > 0");
  if (rec_fraction < 0 || rec_fraction > 1)
    throw std::invalid_argument("world: rec_fraction must be in [0,1]");
  if (n_days < 1) throw std::invalid_argument("world: n_days must be >= 1");
}

double World::oracle_relevance(const std::string& user_id, const std::string& item_id) const {
  auto ufind = std::lower_bound(user_ids.begin(), user_ids.end(), user_id);
  if (ufind == user_ids.end() || *ufind != user_id)
    throw std::invalid_argument("oracle_relevance: unknown user " + user_id);
  auto ifind = std::lower_bound(item_ids.begin(), item_ids.end(), item_id);
  if (ifind == item_ids.end() || *ifind != item_id)
    throw std::invalid_argument("oracle_relevance: unknown item " + item_id);
  const auto& u = user_lat[ufind - user_ids.begin()];
  const auto& v = item_lat[ifind - item_ids.begin()];
  double s = 0.0;
  for (size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
  return s;
}

void World::save(const std::string& path) const {
  ordered_json j;
  j["config"] = json::parse(cfg.to_json());
  j["user_ids"] = user_ids;
  j["item_ids"] = item_ids;
  j["user_lat"] = user_lat;
  j["item_lat"] = item_lat;
  j["popularity"] = popularity;
  j["quality"] = quality;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write world state: " + path);
  out << j.dump() << "\n";
}

World World::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read world state: " + path);
  json j = json::parse(in);
  World w;
  w.cfg = WorldConfig::from_json(j.at("config").dump());
  w.user_ids = j.at("user_ids").get<std::vector<std::string>>();
  w.item_ids = j.at("item_ids").get<std::vector<std::string>>();
  w.user_lat = j.at("user_lat").get<std::vector<std::vector<double>>>();
  w.item_lat = j.at("item_lat").get<std::vector<std::vector<double>>>();
  w.popularity = j.at("popularity").get<std::vector<double>>();
  w.quality = j.at("quality").get<std::vector<double>>();
  return w;
}

GenerateResult generate(const WorldConfig& cfg) {
  cfg.validate();
  const int n_items = cfg.n_items;
  const int dim = cfg.latent_dim;

  Rng world_rng(hash_combine(cfg.seed, 0xa175ull));
  GenerateResult res;
  res.world.cfg = cfg;

  auto pad_id = [](const char* prefix, int i, int width) {
    std::string s = std::to_string(i);
    return std::string(prefix) + std::string(width - std::min<int>(width, s.size()), '0') + s;
  };

  // Zipf popularity over item ranks (item index == popularity rank).
  std::vector<double> pop(n_items);
  double norm = 0.0;
  for (int i = 0; i < n_items; ++i) {
    pop[i] = 1.0 / std::pow(static_cast<double>(i + 1), cfg.zipf_exponent);
    norm += pop[i];
  }
  for (double& p : pop) p /= norm;
  std::vector<double> log_pop(n_items);
  double lp_mean = 0.0;
  for (int i = 0; i < n_items; ++i) {
    log_pop[i] = std::log(pop[i]);
    lp_mean += log_pop[i];
  }
  lp_mean /= n_items;
  double lp_sd = 0.0;
  for (int i = 0; i < n_items; ++i) lp_sd += (log_pop[i] - lp_mean) * (log_pop[i] - lp_mean);
  lp_sd = std::sqrt(std::max(lp_sd / n_items, 1e-12));

  res.world.item_ids.resize(n_items);
  res.world.item_lat.resize(n_items);
  res.world.popularity = pop;
  res.world.quality.resize(n_items);
  for (int i = 0; i < n_items; ++i) {
    res.world.item_ids[i] = pad_id("i", i, 6);
    res.world.item_lat[i] = random_unit_vector(world_rng, dim);
    double zpop = (log_pop[i] - lp_mean) / lp_sd;
    res.world.quality[i] = cfg.quality_pop_weight * zpop + cfg.quality_noise * world_rng.gaussian();
  }

  res.world.user_ids.resize(cfg.n_users);
  res.world.user_lat.resize(cfg.n_users);

  const int64_t day_secs = 86400;
  std::vector<double> rel(n_items);
  std::vector<double> organic_cdf(n_items);
  std::vector<double> rec_cdf(n_items);

  // argmax(logits + Gumbel noise) is a softmax sample, so the logging policy
  // draws from a per-user-day CDF instead of perturbing every item per event.
  auto build_cdf = [n_items](const std::vector<double>& logits, double temp,
                             std::vector<double>& cdf) {
    double mx = *std::max_element(logits.begin(), logits.end());
    double acc = 0.0;
    for (int i = 0; i < n_items; ++i) {
      acc += std::exp((logits[i] - mx) / temp);
      cdf[i] = acc;
    }
  };
  auto sample_cdf = [n_items](const std::vector<double>& cdf, Rng& rng) {
    double target = rng.uniform() * cdf[n_items - 1];
    int item = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), target) - cdf.begin());
    return std::min(item, n_items - 1);
  };

  for (int u = 0; u < cfg.n_users; ++u) {
    res.world.user_ids[u] = pad_id("u", u, 5);
    Rng rng(hash_combine(cfg.seed, 0x5e20000ull + u));
    std::vector<double> ulat = random_unit_vector(rng, dim);
    std::string device = rng.uniform() < 0.6 ? "mobile" : (rng.uniform() < 0.5 ? "desktop" : "speaker");

    UserSequence seq{res.world.user_ids[u], {}};

    for (int day = 0; day < cfg.n_days; ++day) {
      int n_sessions = sample_poisson(rng, cfg.sessions_per_day);
      if (n_sessions == 0) {
        // still drift
      } else {
        // per-day relevance (user latent drifts daily, items are static)
        for (int i = 0; i < n_items; ++i) {
          double s = 0.0;
          const auto& v = res.world.item_lat[i];
          for (int k = 0; k < dim; ++k) s += ulat[k] * v[k];
          rel[i] = s;
        }
        bool have_organic_cdf = false;
        bool have_rec_cdf = false;
        std::vector<double> policy_score;
        int argmax_rel = 0;
        for (int i = 1; i < n_items; ++i)
          if (rel[i] > rel[argmax_rel]) argmax_rel = i;

        for (int s = 0; s < n_sessions; ++s) {
          int64_t session_start = day * day_secs + static_cast<int64_t>(rng.next_below(day_secs - 3600));
          int session_len = sample_geometric_at_least_one(rng, cfg.session_len_mean);
          bool recommended = rng.uniform() < cfg.rec_fraction;
          for (int e = 0; e < session_len; ++e) {
            int item;
            if (recommended) {
              if (policy_score.empty()) {
                policy_score.resize(n_items);
                for (int i = 0; i < n_items; ++i)
                  policy_score[i] = cfg.policy_pop_weight * log_pop[i] +
                                    cfg.policy_rel_weight * rel[i];
              }
              if (cfg.policy_noise < 1e-9) {
                item = static_cast<int>(
                    std::max_element(policy_score.begin(), policy_score.end()) -
                    policy_score.begin());
              } else {
                if (!have_rec_cdf) {
                  build_cdf(policy_score, cfg.policy_noise, rec_cdf);
                  have_rec_cdf = true;
                }
                item = sample_cdf(rec_cdf, rng);
              }
            } else if (cfg.organic_temp < 1e-9) {
              item = argmax_rel;
            } else {
              if (!have_organic_cdf) {
                build_cdf(rel, cfg.organic_temp, organic_cdf);
                have_organic_cdf = true;
              }
              item = sample_cdf(organic_cdf, rng);
            }

            double affinity = cfg.feedback_alpha * rel[item] + res.world.quality[item];
            Interaction ev;
            ev.user_id = seq.user_id;
            ev.ts = session_start + 180 * e;
            ev.surface = recommended ? "rec" : "organic";
            ev.device = device;
            ev.item_id = res.world.item_ids[item];
            ev.is_impression = recommended;
            ev.feedback.like = rng.uniform() < sigmoid(affinity + cfg.like_bias) ? 1 : 0;
            ev.feedback.skip = rng.uniform() < sigmoid(-affinity + cfg.skip_bias) ? 1 : 0;
            double listen = affinity + cfg.feedback_noise * rng.gaussian();
            ev.feedback.listen_bucket = listen < -0.75 ? 0 : listen < 0.25 ? 1 : listen < 1.25 ? 2 : 3;
            seq.interactions.push_back(std::move(ev));
          }
        }
      }
      if (cfg.drift_rate > 0.0) {
        double n2 = 0.0;
        for (double& x : ulat) {
          x += cfg.drift_rate * rng.gaussian();
          n2 += x * x;
        }
        double inv = 1.0 / std::sqrt(std::max(n2, 1e-12));
        for (double& x : ulat) x *= inv;
      }
    }
    std::stable_sort(seq.interactions.begin(), seq.interactions.end(),
                     [](const Interaction& a, const Interaction& b) { return a.ts < b.ts; });
    res.world.user_lat[u] = std::move(ulat);
    res.sequences.push_back(std::move(seq));
  }

  res.header.schema = FeedbackSchema{};
  res.header.seed = cfg.seed;
  res.header.n_users = cfg.n_users;
  res.header.n_items = cfg.n_items;
  res.header.n_days = cfg.n_days;
  res.header.item_ids = res.world.item_ids;
  res.header.world_json = cfg.to_json();
  return res;
}

}  // namespace argus
