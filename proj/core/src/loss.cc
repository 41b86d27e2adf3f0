#include "qkiter/loss.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qkiter/error.h"
#include "qkiter/parallel.h"

namespace qkiter {

void LossConfig::validate() const {
  require(tau > 0.0 && std::isfinite(tau), ErrorKind::kValidation, "tau must be > 0");
  require(hard_negatives >= 1, ErrorKind::kValidation, "M (hard negatives) must be >= 1");
  require(w_pos >= 0.0 && w_neg >= 0.0, ErrorKind::kValidation,
          "loss weights must be non-negative");
  require(clamp > 0.0 && clamp < 0.5, ErrorKind::kValidation, "clamp must be in (0, 0.5)");
}

double pair_score(std::span<const double> q, std::span<const double> k, double tau) {
  require(q.size() == k.size(), ErrorKind::kInputShape,
          "descriptor lengths differ (" + std::to_string(q.size()) + " vs " +
              std::to_string(k.size()) + ")");
  return std::exp(-squared_distance(q, k) / tau);
}

ScoreMatrix score_matrix(MatrixView batch, std::span<const MatrixView> db_chunks, double tau,
                         std::span<const std::size_t> positive_cols, std::size_t workers) {
  require(tau > 0.0, ErrorKind::kValidation, "tau must be > 0");
  std::size_t n = 0;
  for (const MatrixView& chunk : db_chunks) {
    require(chunk.cols() == batch.cols(), ErrorKind::kInputShape,
            "database chunk has descriptors of length " + std::to_string(chunk.cols()) +
                ", batch has " + std::to_string(batch.cols()));
    n += chunk.rows();
  }
  require(positive_cols.size() == batch.rows(), ErrorKind::kMapping,
          "positive map has " + std::to_string(positive_cols.size()) + " entries for " +
              std::to_string(batch.rows()) + " batch rows");
  for (std::size_t r = 0; r < positive_cols.size(); ++r) {
    require(positive_cols[r] < n, ErrorKind::kMapping,
            "batch row " + std::to_string(r) + " maps to database column " +
                std::to_string(positive_cols[r]) + " but the database has " +
                std::to_string(n) + " rows");
  }

  ScoreMatrix sm;
  sm.values = Matrix(batch.rows(), n);
  sm.positive_cols.assign(positive_cols.begin(), positive_cols.end());
  sm.batch_ids.resize(batch.rows());
  std::iota(sm.batch_ids.begin(), sm.batch_ids.end(), 0);
  sm.db_ids.resize(n);
  std::iota(sm.db_ids.begin(), sm.db_ids.end(), 0);

  std::size_t offset = 0;
  for (const MatrixView& chunk : db_chunks) {
    parallel_for(chunk.rows(), workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t r = 0; r < batch.rows(); ++r) {
        const auto q = batch.row(r);
        for (std::size_t j = begin; j < end; ++j) {
          sm.values(r, offset + j) = std::exp(-squared_distance(q, chunk.row(j)) / tau);
        }
      }
    });
    offset += chunk.rows();
  }
  return sm;
}

ScoreMatrix score_matrix(MatrixView batch, MatrixView db, double tau,
                         std::span<const std::size_t> positive_cols, std::size_t workers) {
  const MatrixView chunks[] = {db};
  return score_matrix(batch, chunks, tau, positive_cols, workers);
}

namespace {

struct Candidate {
  double score;
  std::uint32_t row;
  std::uint32_t col;
};

bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.row != b.row) return a.row < b.row;
  return a.col < b.col;
}

// Keeps the `k` best candidates (by ranks_before), sorted.
void keep_top(std::vector<Candidate>& candidates, std::size_t k) {
  if (k < candidates.size()) {
    std::nth_element(candidates.begin(), candidates.begin() + static_cast<long>(k),
                     candidates.end(), ranks_before);
    candidates.resize(k);
  }
  std::sort(candidates.begin(), candidates.end(), ranks_before);
}

}  // namespace

MiningResult mine_hard_negatives(const ScoreMatrix& sm, std::size_t hard_negatives,
                                 MiningMode mode) {
  const std::size_t b = sm.batch_size();
  const std::size_t n = sm.db_size();
  require(sm.positive_cols.size() == b, ErrorKind::kMapping,
          "positive map does not cover every batch row");
  MiningResult result;
  auto row_candidates = [&](std::size_t r, std::vector<Candidate>& out) {
    for (std::size_t c = 0; c < n; ++c) {
      if (c == sm.positive_cols[r]) continue;
      out.push_back({sm.values(r, c), static_cast<std::uint32_t>(r),
                     static_cast<std::uint32_t>(c)});
    }
  };

  std::vector<Candidate> selected;
  if (mode == MiningMode::kGlobal) {
    const std::size_t want = b * hard_negatives;
    std::vector<Candidate> candidates;
    candidates.reserve(b * (n > 0 ? n - 1 : 0));
    for (std::size_t r = 0; r < b; ++r) row_candidates(r, candidates);
    result.short_mine = candidates.size() < want;
    keep_top(candidates, want);
    selected = std::move(candidates);
  } else {
    std::vector<Candidate> row;
    for (std::size_t r = 0; r < b; ++r) {
      row.clear();
      row_candidates(r, row);
      result.short_mine = result.short_mine || row.size() < hard_negatives;
      keep_top(row, hard_negatives);
      selected.insert(selected.end(), row.begin(), row.end());
    }
  }
  result.pairs.reserve(selected.size());
  for (const Candidate& c : selected) result.pairs.push_back({c.row, c.col});
  return result;
}

LossBreakdown contrastive_bce(const ScoreMatrix& sm, const LossConfig& config,
                              const MiningResult& mined) {
  config.validate();
  const std::size_t b = sm.batch_size();
  require(b > 0, ErrorKind::kDegenerateInput, "contrastive loss over an empty batch");
  require(sm.positive_cols.size() == b, ErrorKind::kMapping,
          "positive map does not cover every batch row");
  const double lo = config.clamp;
  const double hi = 1.0 - config.clamp;

  LossBreakdown out;
  double pos_sum = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    const double p = std::clamp(sm.values(r, sm.positive_cols[r]), lo, hi);
    pos_sum += -std::log(p);
  }
  double neg_sum = 0.0;
  for (const PairIndex& pair : mined.pairs) {
    const double p = std::clamp(sm.values(pair.row, pair.col), lo, hi);
    neg_sum += -std::log(1.0 - p);
  }
  out.loss_pos = pos_sum / static_cast<double>(b);
  out.loss_neg = neg_sum / static_cast<double>(b * config.hard_negatives);
  out.loss = config.w_pos * out.loss_pos + config.w_neg * out.loss_neg;
  out.mined = mined.pairs;
  out.short_mine = mined.short_mine;
  return out;
}

LossBreakdown contrastive_bce(const ScoreMatrix& sm, const LossConfig& config) {
  config.validate();
  return contrastive_bce(sm, config, mine_hard_negatives(sm, config.hard_negatives,
                                                         config.mining));
}

LossGradients loss_backward(const ScoreMatrix& sm, const LossConfig& config,
                            const LossBreakdown& breakdown, MatrixView batch, MatrixView db) {
  const std::size_t b = sm.batch_size();
  const std::size_t n = sm.db_size();
  require(batch.rows() == b && db.rows() == n && batch.cols() == db.cols(),
          ErrorKind::kInternal, "descriptors do not match the score matrix they produced");
  require(b > 0, ErrorKind::kDegenerateInput, "loss backward over an empty batch");
  const std::size_t d = batch.cols();
  const double lo = config.clamp;
  const double hi = 1.0 - config.clamp;

  LossGradients grads;
  grads.batch = Matrix(b, d);
  auto push = [&](std::size_t r, std::size_t c, double coefficient) {
    // coefficient * (q_r - k_c) is d(term)/d q_r; k_c gets the negation.
    Vector& gk = grads.db.try_emplace(c, d, 0.0).first->second;
    if (coefficient == 0.0) return;
    const auto q = batch.row(r);
    const auto k = db.row(c);
    auto gq = grads.batch.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      const double g = coefficient * (q[i] - k[i]);
      gq[i] += g;
      gk[i] -= g;
    }
  };

  const double pos_scale = config.w_pos / static_cast<double>(b);
  for (std::size_t r = 0; r < b; ++r) {
    const std::size_t c = sm.positive_cols[r];
    const double p = sm.values(r, c);
    // -log P = d^2 / tau inside the clamp; flat outside it.
    const double coefficient = (p > lo && p < hi) ? pos_scale * 2.0 / config.tau : 0.0;
    push(r, c, coefficient);
  }

  const double neg_scale =
      config.w_neg / static_cast<double>(b * config.hard_negatives);
  for (const PairIndex& pair : breakdown.mined) {
    require(pair.row < b && pair.col < n, ErrorKind::kInternal,
            "mined pair outside the score matrix");
    require(pair.col != sm.positive_cols[pair.row], ErrorKind::kInternal,
            "mined pair is a positive pair");
    const double p = sm.values(pair.row, pair.col);
    const double coefficient =
        (p > lo && p < hi) ? -neg_scale * 2.0 * p / (config.tau * (1.0 - p)) : 0.0;
    push(pair.row, pair.col, coefficient);
  }
  return grads;
}

}  // namespace qkiter
