#ifndef QKITER_EVALUATION_H_
#define QKITER_EVALUATION_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qkiter/encoder.h"
#include "qkiter/featurizer.h"
#include "qkiter/matrix.h"
#include "qkiter/metrics.h"

namespace qkiter {

struct EvalSet {
  Matrix queries;
  std::vector<std::uint64_t> query_ids;
  Matrix keys;
  std::vector<std::uint64_t> key_ids;
  GroundTruth ground_truth;

  void validate() const;
};

struct EvalMetrics {
  double mu_ap = 0.0;
  double macro_ap = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_positives = 0;
};

// Score used for ranking during evaluation. Ranking never depends on it,
// only the reported scores do.
inline constexpr double kEvalTau = 0.07;

EvalMetrics evaluate_descriptors(MatrixView query_desc, MatrixView key_desc,
                                 const EvalSet& set);

// Embeds both sides with full forward passes (no store) and ranks all pairs.
EvalMetrics evaluate_model(const EncoderParams& query, const EncoderParams& key,
                           const BaselineFeaturizer& featurizer, const EvalSet& set,
                           std::size_t workers = 1);

// The untrained reference: the featurizer's descriptors on both sides.
EvalMetrics evaluate_baseline(const BaselineFeaturizer& featurizer, const EvalSet& set,
                              std::size_t workers = 1);

}  // namespace qkiter

#endif  // QKITER_EVALUATION_H_
