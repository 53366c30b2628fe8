#pragma once

// Interaction records and sequence handling: event-log ingestion, chunking,
// the temporal train/holdout split, and adjacent impression-pair formation.

#include <cstdint>
#include <string>
#include <vector>

namespace argus {

// Categorical feedback factors. Default schema: like in {0,1}, skip in {0,1},
// listen_bucket in {0..3}.
struct Feedback {
  int like = 0;
  int skip = 0;
  int listen_bucket = 0;

  int factor(int k) const;
  bool operator==(const Feedback&) const = default;
};

struct FeedbackSchema {
  std::vector<std::string> names{"like", "skip", "listen_bucket"};
  std::vector<int> cardinalities{2, 2, 4};
  int n_factors() const { return static_cast<int>(cardinalities.size()); }
};

struct Interaction {
  std::string user_id;
  int64_t ts = 0;  // seconds
  std::string surface;
  std::string device;
  std::string item_id;
  Feedback feedback;
  bool is_impression = false;

  bool operator==(const Interaction&) const = default;
};

struct UserSequence {
  std::string user_id;
  std::vector<Interaction> interactions;  // non-decreasing ts
};

// Training chunk: a contiguous, order-preserving slice of one user's history.
struct Chunk {
  std::string user_id;
  std::vector<Interaction> interactions;
};

// Holdout sequence: frozen pre-cutoff context plus target interactions.
// Context interactions are inputs only, never targets.
struct HoldoutSequence {
  std::string user_id;
  std::vector<Interaction> context;
  std::vector<Interaction> targets;
};

struct TemporalSplit {
  std::vector<UserSequence> train;
  std::vector<HoldoutSequence> test;
};

// Indices into one interaction vector; `pos` received strictly more positive
// feedback than `neg`.
struct ImpressionPair {
  int pos = 0;
  int neg = 0;
};

// Dataset header: feedback schema, generation seed, and the item catalog.
struct DatasetHeader {
  FeedbackSchema schema;
  uint64_t seed = 0;
  int n_users = 0;
  int n_items = 0;
  int n_days = 0;
  std::vector<std::string> item_ids;
  std::string world_json;  // embedded generator config, empty for foreign data

  void save(const std::string& path) const;
  static DatasetHeader load(const std::string& path);
};

// rank 2 if liked, 1 if not skipped, 0 otherwise; listen_bucket only breaks
// ties when enabled.
int feedback_rank(const Feedback& f, bool listen_tiebreak = false);

struct LoadStats {
  size_t total_lines = 0;
  size_t malformed_lines = 0;
};

// Events grouped by user (user-id order) and sorted by timestamp, ties kept
// in stable input order. Throws if the file is unreadable or more than 1% of
// non-empty lines are malformed.
std::vector<UserSequence> load_events(const std::string& path, LoadStats* stats = nullptr);

void save_events(const std::string& path, const std::vector<UserSequence>& seqs);

// Non-overlapping chunks of at most chunk_len interactions; a short trailing
// chunk is kept only if it has at least 2 interactions.
std::vector<Chunk> chunk_sequences(const std::vector<UserSequence>& seqs, int chunk_len);

// train: ts < cutoff_ts; test targets: ts in [cutoff_ts, cutoff_ts + holdout_span).
TemporalSplit temporal_split(const std::vector<UserSequence>& seqs, int64_t cutoff_ts,
                             int64_t holdout_span);

// One pair per impression duo within `window` consecutive impressions whose
// feedback ranks differ, oriented positive-first.
std::vector<ImpressionPair> build_impression_pairs(const std::vector<Interaction>& interactions,
                                                   int window, bool listen_tiebreak = false);

}  // namespace argus
