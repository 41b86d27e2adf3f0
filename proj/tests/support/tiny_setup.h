#ifndef QKITER_TESTS_TINY_SETUP_H_
#define QKITER_TESTS_TINY_SETUP_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <vector>

#include "qkiter/encoder.h"
#include "qkiter/evaluation.h"
#include "qkiter/featurizer.h"
#include "qkiter/synth.h"
#include "qkiter/trainer.h"

namespace qkiter::testing {

// A small end-to-end training problem: synthetic keys, their augmented
// queries, a fitted featurizer, fresh encoders and a held-out eval set.
struct TinySetup {
  SynthConfig synth;
  EncoderDims dims;
  TrainingData data;
  EvalSet eval;
  TrainState state;
  TrainOptions options;
};

inline std::vector<std::uint64_t> id_range(std::uint64_t base, std::size_t n) {
  std::vector<std::uint64_t> ids(n);
  std::iota(ids.begin(), ids.end(), base);
  return ids;
}

inline EvalSet eval_set_from(const EvalSplit& split) {
  EvalSet set;
  set.queries = split.queries;
  set.query_ids = id_range(split.query_id_base, split.queries.rows());
  set.keys = split.keys;
  set.key_ids = id_range(split.key_id_base, split.keys.rows());
  set.ground_truth = split.ground_truth;
  return set;
}

inline TinySetup make_tiny_setup(const std::filesystem::path& store_dir,
                                 std::uint64_t seed = 5, std::size_t n_keys = 48,
                                 std::size_t batch_size = 8) {
  TinySetup s;
  s.synth.n_keys = n_keys;
  s.synth.d_in = 8;
  s.synth.n_clusters = 6;
  s.synth.seed = seed;
  s.dims = EncoderDims{8, 12, 10, 12, 4};

  Matrix keys = generate_keys(s.synth);
  Matrix queries = augment_rows(keys, s.synth);
  const FeaturizerSpec spec{seed + 1, 8, 16, 4, 0.5};
  BaselineFeaturizer featurizer = BaselineFeaturizer::fit(spec, keys);
  EncoderParams q = init_encoder(Role::kQuery, s.dims, NormStats::fit(queries), seed + 2);
  EncoderParams k = init_encoder(Role::kKey, s.dims, NormStats::fit(keys), seed + 3);
  s.data = TrainingData::build(std::move(keys), std::move(queries), featurizer);
  s.eval = eval_set_from(build_eval_split(s.synth, 24, 8));
  s.state = init_train_state(std::move(q), std::move(k), std::move(featurizer));

  s.options.lr = CosineSchedule{1e-3, 200, 0.5};
  s.options.batch_size = batch_size;
  s.options.chunk_size = 16;
  s.options.store_dir = store_dir;
  return s;
}

inline PhaseSpec phase_spec(const char* name, Phase kind, std::size_t steps) {
  PhaseSpec p;
  p.name = name;
  p.kind = kind;
  p.max_steps = steps;
  return p;
}

inline std::vector<std::size_t> first_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace qkiter::testing

#endif  // QKITER_TESTS_TINY_SETUP_H_
