#include <benchmark/benchmark.h>

#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <vector>

#include "qkiter/encoder.h"
#include "qkiter/half.h"
#include "qkiter/loss.h"
#include "qkiter/metrics.h"
#include "qkiter/synth.h"
#include "qkiter/trainer.h"

namespace {

using namespace qkiter;

Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.3);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

void BM_ScoreMatrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix batch = gaussian(32, 32, 1);
  const Matrix db = gaussian(n, 32, 2);
  const auto pos = iota(32);
  for (auto _ : state) benchmark::DoNotOptimize(score_matrix(batch, db, 0.07, pos));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(32 * n));
}
BENCHMARK(BM_ScoreMatrix)->Arg(1000)->Arg(10000);

void BM_MineHardNegatives(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ScoreMatrix sm = score_matrix(gaussian(32, 32, 3), gaussian(n, 32, 4), 0.07, iota(32));
  for (auto _ : state) benchmark::DoNotOptimize(mine_hard_negatives(sm, 10));
}
BENCHMARK(BM_MineHardNegatives)->Arg(1000)->Arg(10000);

void BM_HalfRoundTrip(benchmark::State& state) {
  const Matrix rows = gaussian(1, 4096, 5);
  std::vector<std::uint16_t> codes(4096);
  std::vector<double> back(4096);
  for (auto _ : state) {
    encode_half_row(rows.row(0), codes, 0);
    decode_half_row(codes, back);
    benchmark::DoNotOptimize(back.data());
  }
  state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_HalfRoundTrip);

void BM_MicroAp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix q = gaussian(n, 32, 6);
  const Matrix k = gaussian(n, 32, 7);
  std::vector<std::uint64_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  GroundTruth gt;
  for (std::uint64_t i = 0; i < n; ++i) gt.add(i, i);
  for (auto _ : state) {
    benchmark::DoNotOptimize(micro_ap(rank_all_pairs(q, ids, k, ids, 0.07, gt)));
  }
}
BENCHMARK(BM_MicroAp)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

// One co-learn step against a frozen key side of n stored intermediates.
void BM_PhaseStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SynthConfig synth;
  synth.n_keys = n;
  synth.n_clusters = n / 20;
  Matrix keys = generate_keys(synth);
  Matrix queries = augment_rows(keys, synth);
  const BaselineFeaturizer featurizer =
      BaselineFeaturizer::fit(FeaturizerSpec{9, 64, 96, 32, 0.1}, keys);
  const EncoderDims dims;
  EncoderParams q = init_encoder(Role::kQuery, dims, NormStats::fit(queries), 1);
  EncoderParams k = init_encoder(Role::kKey, dims, NormStats::fit(keys), 2);
  const TrainingData data = TrainingData::build(std::move(keys), std::move(queries), featurizer);
  TrainState ts = init_train_state(std::move(q), std::move(k), featurizer);
  TrainOptions options;
  options.lr = CosineSchedule{1e-3, 1000, 0.5};
  options.store_dir = std::filesystem::temp_directory_path() / "qkiter_bench_store";
  PhaseSpec spec;
  spec.name = "Q1";
  begin_phase(ts, spec, data, options);
  BatchSampler sampler(1, 16, n, options.batch_size);
  for (auto _ : state) benchmark::DoNotOptimize(phase_step(ts, data, sampler.next(), options, 1e-3));
  std::filesystem::remove_all(options.store_dir);
}
BENCHMARK(BM_PhaseStep)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
