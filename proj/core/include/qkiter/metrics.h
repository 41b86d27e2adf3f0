#ifndef QKITER_METRICS_H_
#define QKITER_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "qkiter/matrix.h"

namespace qkiter {

// Set of true (query_id, key_id) matches.
class GroundTruth {
 public:
  GroundTruth() = default;
  explicit GroundTruth(std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs);

  void add(std::uint64_t query_id, std::uint64_t key_id);
  bool contains(std::uint64_t query_id, std::uint64_t key_id) const;
  std::size_t size() const { return pairs_.size(); }
  const std::set<std::pair<std::uint64_t, std::uint64_t>>& pairs() const {
    return pairs_;
  }

  bool operator==(const GroundTruth& other) const = default;

 private:
  std::set<std::pair<std::uint64_t, std::uint64_t>> pairs_;
};

// "query_id,key_id" header then one pair per line.
void write_ground_truth_csv(const std::filesystem::path& path, const GroundTruth& gt);
GroundTruth read_ground_truth_csv(const std::filesystem::path& path);

struct RankedPair {
  std::uint64_t query_id = 0;
  std::uint64_t key_id = 0;
  double score = 0.0;
  bool positive = false;
};

// Pairs sorted by descending score. n_positives counts the ground truth,
// including any positive that never made it into `entries`.
struct RankedPairList {
  std::vector<RankedPair> entries;
  std::size_t n_positives = 0;
};

// Scores every (query, key) pair with pair_score and sorts globally. Pairs
// are ordered by ascending squared distance, then query id, then key id; a
// descending-score order that stays exact when exp() underflows or rounds
// two distinct distances to the same score.
RankedPairList rank_all_pairs(MatrixView queries, std::span<const std::uint64_t> query_ids,
                              MatrixView keys, std::span<const std::uint64_t> key_ids,
                              double tau, const GroundTruth& gt);

// Builds a ranking from arbitrary scores: descending score, ties by
// (query_id, key_id).
RankedPairList rank_scored_pairs(std::vector<RankedPair> pairs, const GroundTruth& gt);

// Area under the precision/recall curve of the single global ranking:
// sum of precision@r over ranks r holding a positive, over n_positives.
double micro_ap(const RankedPairList& ranking);

// Mean per-query AP over queries with at least one ground-truth positive.
double macro_ap(const RankedPairList& ranking);

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
};
// One point per ground-truth positive, taken at its rank.
std::vector<PrPoint> pr_curve(const RankedPairList& ranking);
void write_pr_curve_csv(const std::filesystem::path& path, std::span<const PrPoint> curve);

}  // namespace qkiter

#endif  // QKITER_METRICS_H_
