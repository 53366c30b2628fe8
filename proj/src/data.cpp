#include "argus/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace argus {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

int Feedback::factor(int k) const {
  switch (k) {
    case 0: return like;
    case 1: return skip;
    case 2: return listen_bucket;
    default: throw std::invalid_argument("Feedback::factor: bad index");
  }
}

int feedback_rank(const Feedback& f, bool listen_tiebreak) {
  int base = f.like == 1 ? 2 : (f.skip == 0 ? 1 : 0);
  return base * 8 + (listen_tiebreak ? f.listen_bucket : 0);
}

void DatasetHeader::save(const std::string& path) const {
  ordered_json j;
  j["n_factors"] = schema.n_factors();
  j["factor_names"] = schema.names;
  j["factor_cardinalities"] = schema.cardinalities;
  j["seed"] = seed;
  j["n_users"] = n_users;
  j["n_items"] = n_items;
  j["n_days"] = n_days;
  j["item_ids"] = item_ids;
  if (!world_json.empty()) j["world"] = json::parse(world_json);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write header: " + path);
  out << j.dump(2) << "\n";
}

DatasetHeader DatasetHeader::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read header: " + path);
  json j = json::parse(in);
  DatasetHeader h;
  h.schema.names = j.at("factor_names").get<std::vector<std::string>>();
  h.schema.cardinalities = j.at("factor_cardinalities").get<std::vector<int>>();
  h.seed = j.at("seed").get<uint64_t>();
  h.n_users = j.at("n_users").get<int>();
  h.n_items = j.at("n_items").get<int>();
  h.n_days = j.at("n_days").get<int>();
  h.item_ids = j.at("item_ids").get<std::vector<std::string>>();
  if (j.contains("world")) h.world_json = j["world"].dump();
  return h;
}

namespace {

bool parse_event(const std::string& line, Interaction* out) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return false;
  try {
    out->user_id = j.at("user_id").get<std::string>();
    out->ts = j.at("ts").get<int64_t>();
    out->surface = j.at("surface").get<std::string>();
    out->device = j.at("device").get<std::string>();
    out->item_id = j.at("item_id").get<std::string>();
    out->feedback.like = j.at("like").get<int>();
    out->feedback.skip = j.at("skip").get<int>();
    out->feedback.listen_bucket = j.at("listen_bucket").get<int>();
    out->is_impression = j.at("impression").get<int>() != 0;
  } catch (const json::exception&) {
    return false;
  }
  if (out->ts < 0) return false;
  if (out->feedback.like < 0 || out->feedback.like > 1) return false;
  if (out->feedback.skip < 0 || out->feedback.skip > 1) return false;
  if (out->feedback.listen_bucket < 0 || out->feedback.listen_bucket > 3) return false;
  return true;
}

}  // namespace

std::vector<UserSequence> load_events(const std::string& path, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read event log: " + path);
  std::map<std::string, std::vector<Interaction>> by_user;
  LoadStats st;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++st.total_lines;
    Interaction ev;
    if (!parse_event(line, &ev)) {
      ++st.malformed_lines;
      continue;
    }
    by_user[ev.user_id].push_back(std::move(ev));
  }
  if (st.total_lines > 0 &&
      st.malformed_lines * 100 > st.total_lines) {
    throw std::runtime_error("more than 1% malformed lines in " + path + " (" +
                             std::to_string(st.malformed_lines) + "/" +
                             std::to_string(st.total_lines) + ")");
  }
  if (stats) *stats = st;
  std::vector<UserSequence> seqs;
  seqs.reserve(by_user.size());
  for (auto& [uid, evs] : by_user) {
    std::stable_sort(evs.begin(), evs.end(),
                     [](const Interaction& a, const Interaction& b) { return a.ts < b.ts; });
    seqs.push_back(UserSequence{uid, std::move(evs)});
  }
  return seqs;
}

void save_events(const std::string& path, const std::vector<UserSequence>& seqs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write event log: " + path);
  for (const auto& seq : seqs) {
    for (const auto& ev : seq.interactions) {
      ordered_json j;
      j["user_id"] = ev.user_id;
      j["ts"] = ev.ts;
      j["surface"] = ev.surface;
      j["device"] = ev.device;
      j["item_id"] = ev.item_id;
      j["like"] = ev.feedback.like;
      j["skip"] = ev.feedback.skip;
      j["listen_bucket"] = ev.feedback.listen_bucket;
      j["impression"] = ev.is_impression ? 1 : 0;
      out << j.dump() << "\n";
    }
  }
}

std::vector<Chunk> chunk_sequences(const std::vector<UserSequence>& seqs, int chunk_len) {
  if (chunk_len < 2) throw std::invalid_argument("chunk_sequences: chunk_len must be >= 2");
  std::vector<Chunk> chunks;
  for (const auto& seq : seqs) {
    const auto& evs = seq.interactions;
    for (size_t start = 0; start < evs.size(); start += chunk_len) {
      size_t len = std::min<size_t>(chunk_len, evs.size() - start);
      if (len < 2) break;  // a singleton cannot form a prediction target
      Chunk c;
      c.user_id = seq.user_id;
      c.interactions.assign(evs.begin() + start, evs.begin() + start + len);
      chunks.push_back(std::move(c));
    }
  }
  return chunks;
}

TemporalSplit temporal_split(const std::vector<UserSequence>& seqs, int64_t cutoff_ts,
                             int64_t holdout_span) {
  TemporalSplit split;
  for (const auto& seq : seqs) {
    UserSequence train_seq{seq.user_id, {}};
    HoldoutSequence test_seq{seq.user_id, {}, {}};
    for (const auto& ev : seq.interactions) {
      if (ev.ts < cutoff_ts) {
        train_seq.interactions.push_back(ev);
        test_seq.context.push_back(ev);
      } else if (ev.ts < cutoff_ts + holdout_span) {
        test_seq.targets.push_back(ev);
      }
    }
    if (!train_seq.interactions.empty()) split.train.push_back(std::move(train_seq));
    if (!test_seq.targets.empty()) split.test.push_back(std::move(test_seq));
  }
  return split;
}

std::vector<ImpressionPair> build_impression_pairs(const std::vector<Interaction>& interactions,
                                                   int window, bool listen_tiebreak) {
  if (window < 2) throw std::invalid_argument("build_impression_pairs: window must be >= 2");
  std::vector<int> imp_positions;
  for (size_t i = 0; i < interactions.size(); ++i)
    if (interactions[i].is_impression) imp_positions.push_back(static_cast<int>(i));
  std::vector<ImpressionPair> pairs;
  for (size_t a = 0; a < imp_positions.size(); ++a) {
    for (size_t b = a + 1; b < imp_positions.size() && b - a < static_cast<size_t>(window); ++b) {
      int ra = feedback_rank(interactions[imp_positions[a]].feedback, listen_tiebreak);
      int rb = feedback_rank(interactions[imp_positions[b]].feedback, listen_tiebreak);
      if (ra == rb) continue;
      if (ra > rb)
        pairs.push_back({imp_positions[a], imp_positions[b]});
      else
        pairs.push_back({imp_positions[b], imp_positions[a]});
    }
  }
  return pairs;
}

}  // namespace argus
