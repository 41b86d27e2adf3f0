#ifndef QKITER_LOSS_H_
#define QKITER_LOSS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "qkiter/matrix.h"

namespace qkiter {

enum class MiningMode {
  kGlobal,  // top B*M negatives over the whole B x N block
  kPerRow,  // top M negatives of every batch row (ablation)
};

struct LossConfig {
  double tau = 0.07;
  std::size_t hard_negatives = 10;  // M
  double w_pos = 1.0;
  double w_neg = 3.0;
  double clamp = 1e-7;
  MiningMode mining = MiningMode::kGlobal;

  void validate() const;
};

// exp(-|q - k|^2 / tau).
double pair_score(std::span<const double> q, std::span<const double> k, double tau);

// B x N pair scores of a batch against the database; row r's positive sits
// in column positive_cols[r].
struct ScoreMatrix {
  Matrix values;
  std::vector<std::uint64_t> batch_ids;
  std::vector<std::uint64_t> db_ids;
  std::vector<std::size_t> positive_cols;

  std::size_t batch_size() const { return values.rows(); }
  std::size_t db_size() const { return values.cols(); }
};

// The database arrives as consecutive row blocks (chunks) totalling N rows.
// Every entry is computed independently, so any chunking yields the same
// bits. Throws kMapping when positive_cols is malformed.
ScoreMatrix score_matrix(MatrixView batch, std::span<const MatrixView> db_chunks,
                         double tau, std::span<const std::size_t> positive_cols,
                         std::size_t workers = 1);
ScoreMatrix score_matrix(MatrixView batch, MatrixView db, double tau,
                         std::span<const std::size_t> positive_cols,
                         std::size_t workers = 1);

struct PairIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const PairIndex& other) const = default;
};

struct MiningResult {
  std::vector<PairIndex> pairs;  // highest score first
  bool short_mine = false;       // fewer than the requested count existed
};

// Highest-scoring negatives (positive cells excluded); ties go to the lower
// row, then the lower column.
MiningResult mine_hard_negatives(const ScoreMatrix& sm, std::size_t hard_negatives,
                                 MiningMode mode = MiningMode::kGlobal);

struct LossBreakdown {
  double loss_pos = 0.0;
  double loss_neg = 0.0;
  double loss = 0.0;
  std::vector<PairIndex> mined;
  bool short_mine = false;
};

// Binary cross entropy over the positives and the mined negatives:
//   L_pos = sum -log P~ / B,  L_neg = sum -log(1 - P~) / (B*M),
//   L = w_pos * L_pos + w_neg * L_neg,  P~ = clamp(P, c, 1 - c).
// The B*M denominator uses the configured M even on a short mine.
LossBreakdown contrastive_bce(const ScoreMatrix& sm, const LossConfig& config);
// Mines with config's mode, then evaluates contrastive_bce.
LossBreakdown contrastive_bce(const ScoreMatrix& sm, const LossConfig& config,
                              const MiningResult& mined);

struct LossGradients {
  Matrix batch;                  // B x d
  std::map<std::size_t, Vector> db;  // only columns in a positive or mined pair
};

// Analytic gradient of L with respect to every batch descriptor and to the
// participating database descriptors. `db` must be the same descriptors the
// score matrix was built from.
LossGradients loss_backward(const ScoreMatrix& sm, const LossConfig& config,
                            const LossBreakdown& breakdown, MatrixView batch,
                            MatrixView db);

}  // namespace qkiter

#endif  // QKITER_LOSS_H_
