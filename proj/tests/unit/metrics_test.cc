#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "qkiter/error.h"
#include "qkiter/evaluation.h"
#include "qkiter/metrics.h"
#include "test_util.h"

namespace qkiter {
namespace {

using testing::random_matrix;
using testing::TempDir;

RankedPairList from_flags(const std::vector<bool>& flags, std::size_t n_positives) {
  RankedPairList list;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    list.entries.push_back({0, i, 1.0 - 0.01 * static_cast<double>(i), flags[i]});
  }
  list.n_positives = n_positives;
  return list;
}

TEST(MicroAp, HandRankedCase) {
  EXPECT_NEAR(micro_ap(from_flags({true, false, true, false}, 2)), (1.0 + 2.0 / 3.0) / 2.0,
              1e-15);
  EXPECT_NEAR(micro_ap(from_flags({true, false, true, false}, 2)), 0.8333, 1e-4);
}

TEST(MicroAp, PerfectRankingIsOne) {
  EXPECT_EQ(micro_ap(from_flags({true, true, true, false, false}, 3)), 1.0);
}

TEST(MicroAp, PositivesLastAmongHundredIsSmall) {
  std::vector<bool> flags(100, false);
  flags[98] = flags[99] = true;
  EXPECT_LT(micro_ap(from_flags(flags, 2)), 0.05);
}

TEST(MicroAp, MissingPositivesCountInDenominator) {
  EXPECT_NEAR(micro_ap(from_flags({true, false}, 4)), 0.25, 1e-15);
}

TEST(MicroAp, NoPositivesIsUndefined) {
  try {
    micro_ap(from_flags({false, false}, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUndefinedMetric);
  }
}

// Independent oracle: integrate the precision/recall step curve, i.e. the
// sum of precision times the recall increment at each rank.
double oracle_micro_ap(const std::vector<bool>& ranked, std::size_t n_positives) {
  double area = 0.0;
  double prev_recall = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i]) ++hits;
    const double precision = static_cast<double>(hits) / static_cast<double>(i + 1);
    const double recall = static_cast<double>(hits) / static_cast<double>(n_positives);
    area += precision * (recall - prev_recall);
    prev_recall = recall;
  }
  return area;
}

struct RandomCase {
  Matrix q;
  Matrix k;
  std::vector<std::uint64_t> qids;
  std::vector<std::uint64_t> kids;
  GroundTruth gt;
};

RandomCase random_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> nd(1, 20), dd(1, 4);
  std::bernoulli_distribution coin(0.15);
  RandomCase c;
  const std::size_t nq = nd(rng), nk = nd(rng), d = dd(rng);
  c.q = random_matrix(rng, nq, d);
  c.k = random_matrix(rng, nk, d);
  // Coarse values create exact distance ties.
  if (rng() % 2) {
    for (double& v : c.q.values()) v = std::round(v);
    for (double& v : c.k.values()) v = std::round(v);
  }
  for (std::size_t i = 0; i < nq; ++i) c.qids.push_back(100 + i);
  for (std::size_t j = 0; j < nk; ++j) c.kids.push_back(500 + j);
  for (std::size_t i = 0; i < nq; ++i) {
    for (std::size_t j = 0; j < nk; ++j) {
      if (coin(rng)) c.gt.add(c.qids[i], c.kids[j]);
    }
  }
  if (c.gt.size() == 0) c.gt.add(c.qids[0], c.kids[0]);
  return c;
}

// Brute-force global ranking by (distance asc, query id, key id).
std::vector<bool> oracle_ranking(const RandomCase& c, std::vector<std::uint64_t>* query_of) {
  struct Cell {
    double d2;
    std::uint64_t q;
    std::uint64_t k;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < c.q.rows(); ++i) {
    for (std::size_t j = 0; j < c.k.rows(); ++j) {
      double d2 = 0.0;
      for (std::size_t t = 0; t < c.q.cols(); ++t) {
        const double diff = c.q(i, t) - c.k(j, t);
        d2 += diff * diff;
      }
      cells.push_back({d2, c.qids[i], c.kids[j]});
    }
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    if (a.q != b.q) return a.q < b.q;
    return a.k < b.k;
  });
  std::vector<bool> flags;
  for (const Cell& cell : cells) {
    flags.push_back(c.gt.contains(cell.q, cell.k));
    if (query_of != nullptr) query_of->push_back(cell.q);
  }
  return flags;
}

TEST(MicroAp, MatchesBruteForcePrCurveOracle) {
  std::mt19937_64 rng(70);
  for (int trial = 0; trial < 500; ++trial) {
    const RandomCase c = random_case(rng);
    const RankedPairList ranking = rank_all_pairs(c.q, c.qids, c.k, c.kids, 0.07, c.gt);
    const std::vector<bool> oracle = oracle_ranking(c, nullptr);
    ASSERT_EQ(ranking.entries.size(), oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) ASSERT_EQ(ranking.entries[i].positive, oracle[i]);
    ASSERT_NEAR(micro_ap(ranking), oracle_micro_ap(oracle, c.gt.size()), 1e-12) << trial;
  }
}

TEST(MacroAp, MatchesPerQueryOracle) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 300; ++trial) {
    const RandomCase c = random_case(rng);
    const RankedPairList ranking = rank_all_pairs(c.q, c.qids, c.k, c.kids, 0.07, c.gt);
    std::vector<std::uint64_t> query_of;
    const std::vector<bool> flags = oracle_ranking(c, &query_of);
    std::map<std::uint64_t, std::vector<bool>> per_query;
    for (std::size_t i = 0; i < flags.size(); ++i) per_query[query_of[i]].push_back(flags[i]);
    double sum = 0.0;
    std::size_t groups = 0;
    for (const auto& [qid, list] : per_query) {
      const auto n_pos = static_cast<std::size_t>(std::count(list.begin(), list.end(), true));
      if (n_pos == 0) continue;
      sum += oracle_micro_ap(list, n_pos);
      ++groups;
    }
    ASSERT_NEAR(macro_ap(ranking), sum / static_cast<double>(groups), 1e-12) << trial;
  }
}

TEST(MacroAp, SingleQueryEqualsMicro) {
  std::vector<RankedPair> pairs{{1, 1, 0.9, false}, {1, 2, 0.8, false}, {1, 3, 0.7, false}};
  const GroundTruth gt({{1, 2}});
  const RankedPairList list = rank_scored_pairs(pairs, gt);
  EXPECT_DOUBLE_EQ(macro_ap(list), micro_ap(list));
  EXPECT_DOUBLE_EQ(micro_ap(list), 0.5);
}

TEST(MacroAp, PerfectAndWorstQueriesAverage) {
  std::vector<RankedPair> pairs{{1, 10, 0.9, false}, {1, 11, 0.1, false},
                                {2, 20, 0.8, false}, {2, 21, 0.2, false}};
  const GroundTruth gt({{1, 10}, {2, 21}});
  EXPECT_DOUBLE_EQ(macro_ap(rank_scored_pairs(pairs, gt)), 0.5 * (1.0 + 0.5));
}

TEST(Ranking, SingleEntryAndLexicographicTies) {
  const GroundTruth gt({{0, 0}});
  const Matrix one(1, 2, 0.0);
  const std::vector<std::uint64_t> id0{0};
  EXPECT_EQ(rank_all_pairs(one, id0, one, id0, 0.07, gt).entries.size(), 1u);

  std::vector<RankedPair> pairs{{2, 1, 0.5, false}, {1, 2, 0.5, false}, {1, 1, 0.5, false}};
  const RankedPairList list = rank_scored_pairs(pairs, gt);
  ASSERT_EQ(list.entries.size(), 3u);
  EXPECT_EQ(list.entries[0].query_id, 1u);
  EXPECT_EQ(list.entries[0].key_id, 1u);
  EXPECT_EQ(list.entries[1].key_id, 2u);
  EXPECT_EQ(list.entries[2].query_id, 2u);
}

TEST(Ranking, ScoresThatUnderflowStillRankByDistance) {
  const Matrix q(1, 1, 0.0);
  Matrix k(2, 1);
  k(0, 0) = 40.0;
  k(1, 0) = 30.0;  // both scores underflow to 0 at tau 0.07
  const GroundTruth gt({{0, 1}});
  const std::vector<std::uint64_t> qid{0}, kid{0, 1};
  const RankedPairList list = rank_all_pairs(q, qid, k, kid, 0.07, gt);
  EXPECT_EQ(list.entries[0].key_id, 1u);
  EXPECT_EQ(micro_ap(list), 1.0);
}

TEST(PrCurve, EndsAtFullRecallForCompleteRanking) {
  const RankedPairList list = from_flags({false, true, true}, 2);
  const std::vector<PrPoint> curve = pr_curve(list);
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_DOUBLE_EQ(curve.front().precision, 0.5);
  EXPECT_DOUBLE_EQ(curve.front().recall, 0.5);
  EXPECT_DOUBLE_EQ(curve.back().recall, 1.0);
  EXPECT_DOUBLE_EQ(curve.back().precision, 2.0 / 3.0);
}

TEST(GroundTruth, CsvRoundTrip) {
  TempDir dir("gt");
  const GroundTruth gt({{3, 10003}, {0, 10000}, {7, 10007}});
  write_ground_truth_csv(dir / "gt.csv", gt);
  EXPECT_EQ(read_ground_truth_csv(dir / "gt.csv"), gt);
}

TEST(Evaluation, DescriptorsAgreeWithDirectRanking) {
  std::mt19937_64 rng(72);
  EvalSet set;
  set.queries = random_matrix(rng, 6, 3);
  set.keys = random_matrix(rng, 4, 3);
  set.query_ids = {0, 1, 2, 3, 4, 5};
  set.key_ids = {10, 11, 12, 13};
  set.ground_truth = GroundTruth({{0, 10}, {1, 11}, {2, 12}, {3, 13}});
  const EvalMetrics m = evaluate_descriptors(set.queries, set.keys, set);
  const RankedPairList list =
      rank_all_pairs(set.queries, set.query_ids, set.keys, set.key_ids, kEvalTau, set.ground_truth);
  EXPECT_EQ(m.mu_ap, micro_ap(list));
  EXPECT_EQ(m.n_pairs, 24u);
  EXPECT_EQ(m.n_positives, 4u);
}

}  // namespace
}  // namespace qkiter
