#include "qkiter/evaluation.h"

#include <string>

#include "qkiter/error.h"

namespace qkiter {

void EvalSet::validate() const {
  require(queries.rows() > 0 && keys.rows() > 0, ErrorKind::kDegenerateInput,
          "evaluation set needs queries and keys");
  require(query_ids.size() == queries.rows() && key_ids.size() == keys.rows(),
          ErrorKind::kInputShape, "evaluation ids do not match row counts");
  require(queries.cols() == keys.cols(), ErrorKind::kInputShape,
          "evaluation queries and keys differ in dimension");
}

EvalMetrics evaluate_descriptors(MatrixView query_desc, MatrixView key_desc,
                                 const EvalSet& set) {
  const RankedPairList ranking =
      rank_all_pairs(query_desc, set.query_ids, key_desc, set.key_ids, kEvalTau,
                     set.ground_truth);
  EvalMetrics m;
  m.mu_ap = micro_ap(ranking);
  m.macro_ap = macro_ap(ranking);
  m.n_pairs = ranking.entries.size();
  m.n_positives = ranking.n_positives;
  return m;
}

EvalMetrics evaluate_model(const EncoderParams& query, const EncoderParams& key,
                           const BaselineFeaturizer& featurizer, const EvalSet& set,
                           std::size_t workers) {
  set.validate();
  require(query.input_dim() == set.queries.cols() && key.input_dim() == set.keys.cols(),
          ErrorKind::kInputShape, "encoders do not match the evaluation data dimension");
  const Matrix query_base = baseline_featurize_rows(featurizer, set.queries, workers);
  const Matrix key_base = baseline_featurize_rows(featurizer, set.keys, workers);
  const Matrix query_desc = encoder_forward_rows(query, set.queries, query_base, workers);
  const Matrix key_desc = encoder_forward_rows(key, set.keys, key_base, workers);
  return evaluate_descriptors(query_desc, key_desc, set);
}

EvalMetrics evaluate_baseline(const BaselineFeaturizer& featurizer, const EvalSet& set,
                              std::size_t workers) {
  set.validate();
  const Matrix query_base = baseline_featurize_rows(featurizer, set.queries, workers);
  const Matrix key_base = baseline_featurize_rows(featurizer, set.keys, workers);
  return evaluate_descriptors(query_base, key_base, set);
}

}  // namespace qkiter
