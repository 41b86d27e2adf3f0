#ifndef QKITER_TRAINER_H_
#define QKITER_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qkiter/adam.h"
#include "qkiter/cosine_schedule.h"
#include "qkiter/digest.h"
#include "qkiter/encoder.h"
#include "qkiter/evaluation.h"
#include "qkiter/featurizer.h"
#include "qkiter/loss.h"
#include "qkiter/matrix.h"
#include "qkiter/store.h"

namespace qkiter {

struct PhaseSpec {
  std::string name;  // "Q1", "K1", ...
  Phase kind = Phase::kQuery;
  std::size_t max_steps = 1;
  std::size_t eval_every = 0;  // 0 evaluates only at the end of the phase
  // Early stop once the best score of the last `plateau_window`
  // evaluations beats everything before them by less than
  // plateau_min_rel_improve (relative). A window of 0 disables it.
  std::size_t plateau_window = 0;
  double plateau_min_rel_improve = 0.0;
};

struct PhaseSchedule {
  std::vector<PhaseSpec> phases;
  std::uint64_t seed = 0;

  // Throws kValidation (empty schedule, max_steps == 0, bad names).
  void validate() const;
  std::uint64_t total_steps() const;
};

// Both sides of the training set. Row i of `queries` is the augmented copy
// of row i of `keys`; the *_base matrices hold their baseline descriptors.
struct TrainingData {
  Matrix keys;
  Matrix queries;
  Matrix key_base;
  Matrix query_base;
  Digest key_digest{};
  Digest query_digest{};

  static TrainingData build(Matrix keys, Matrix queries,
                            const BaselineFeaturizer& featurizer, std::size_t workers = 1);

  std::size_t size() const { return keys.rows(); }
  MatrixView inputs(Role role) const { return role == Role::kQuery ? queries : keys; }
  MatrixView base(Role role) const { return role == Role::kQuery ? query_base : key_base; }
  const Digest& digest(Role role) const {
    return role == Role::kQuery ? query_digest : key_digest;
  }
};

struct TrainOptions {
  LossConfig loss;
  CosineSchedule lr;
  AdamConfig adam;
  std::size_t batch_size = 32;
  std::size_t chunk_size = kDefaultChunkSize;
  std::size_t workers = 1;
  // Recompute the frozen side's database descriptors every this many steps.
  std::size_t db_refresh_every = 1;
  std::filesystem::path store_dir = ".";

  void validate() const;
};

struct TrainState {
  EncoderParams query;
  EncoderParams key;
  BaselineFeaturizer featurizer;
  std::map<std::string, AdamState> adam;  // by parameter-group name
  std::uint64_t step = 0;                 // optimizer steps taken so far
  std::size_t phase_index = 0;            // next phase to run
  std::optional<IntermediateStore> store;
  std::size_t bulk_evaluations = 0;

  // Frozen-side database descriptors, reused between refreshes.
  Matrix db_desc;
  std::uint64_t db_desc_step = 0;
  bool db_desc_valid = false;

  EncoderParams& encoder(Role role) { return role == Role::kQuery ? query : key; }
  const EncoderParams& encoder(Role role) const {
    return role == Role::kQuery ? query : key;
  }
};

// Parameter-group names used as Adam state keys, e.g. "query.backbone".
std::string group_name(Role role, bool backbone);

TrainState init_train_state(EncoderParams query, EncoderParams key,
                            BaselineFeaturizer featurizer, const AdamConfig& adam = {});

struct StepRecord {
  std::uint64_t step = 0;  // 1-based index of the optimizer step
  std::string phase;
  double lr = 0.0;
  double loss = 0.0;
  double loss_pos = 0.0;
  double loss_neg = 0.0;
  bool short_mine = false;
  double wall_time = 0.0;  // seconds spent in the step
};

struct EvalRecord {
  std::uint64_t step = 0;
  std::string phase;
  EvalMetrics metrics;
};

struct PhaseResult {
  std::string name;
  Phase kind = Phase::kQuery;
  std::size_t steps_run = 0;
  bool early_stopped = false;
  double final_loss = 0.0;
  EvalMetrics metrics;  // at the end of the phase
};

struct TrainObserver {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EvalRecord&)> on_eval;
  std::function<void(const PhaseResult&, const TrainState&)> on_phase_end;
};

// Source tag binding a store to the exact backbone (role, layers, norm
// stats) and the dataset it was evaluated on.
Digest backbone_tag(const EncoderParams& encoder, const Digest& dataset_digest);

// Runs the (frozen) backbone over every input row into a chunked binary16
// store. Throws kContract if the backbone is trainable.
IntermediateStore bulk_evaluate(const EncoderParams& frozen, MatrixView inputs,
                                const Digest& dataset_digest, std::size_t chunk_size,
                                const std::filesystem::path& path, std::size_t workers = 1);

// Sets trainability for `spec`, resets the Adam state of a backbone that
// was frozen and now trains, and bulk-evaluates the newly frozen side.
void begin_phase(TrainState& state, const PhaseSpec& spec, const TrainingData& data,
                 const TrainOptions& options);

// One co-learn optimizer step: the moving side runs fully on the batch,
// the frozen side's head runs over every stored intermediate, and the
// moving encoder plus the frozen head are updated. Throws kContract on a
// stale store and kNumeric on a non-finite loss.
StepRecord phase_step(TrainState& state, const TrainingData& data,
                      std::span<const std::size_t> batch, const TrainOptions& options,
                      double lr, LossBreakdown* breakdown = nullptr);

PhaseResult run_phase(TrainState& state, const PhaseSpec& spec, const TrainingData& data,
                      const EvalSet& eval, const TrainOptions& options,
                      std::uint64_t schedule_seed, const TrainObserver& observer = {});

struct QkRunResult {
  TrainState state;
  EvalMetrics baseline;
  std::vector<PhaseResult> phases;
};

// Runs schedule phases from state.phase_index onwards (a fresh state starts
// at the first phase; a restored one resumes).
QkRunResult run_qk_iteration(const PhaseSchedule& schedule, TrainState state,
                             const TrainingData& data, const EvalSet& eval,
                             const TrainOptions& options, const TrainObserver& observer = {});

// In-batch baseline: both encoders fully trainable, the database is the
// batch's own B key descriptors.
StepRecord simclr_step(TrainState& state, const TrainingData& data,
                       std::span<const std::size_t> batch, const TrainOptions& options,
                       double lr, LossBreakdown* breakdown = nullptr);

struct SimclrResult {
  TrainState state;
  EvalMetrics baseline;
  EvalMetrics final_metrics;
  std::vector<EvalRecord> evals;
};

SimclrResult run_simclr(TrainState state, const TrainingData& data, const EvalSet& eval,
                        const TrainOptions& options, std::size_t total_steps,
                        std::size_t eval_every, std::uint64_t seed,
                        const TrainObserver& observer = {});

// Resumable training state: "QKTS" | u32 version | u64 step | u64 phase_index
// | query encoder | key encoder | featurizer | u32 group count | per group
// (name, u64 t, f64 beta1, beta2, epsilon, u64 size, m, v). The
// intermediate store is rebuilt by the next phase and is not saved.
void write_train_state(const std::filesystem::path& path, const TrainState& state);
TrainState read_train_state(const std::filesystem::path& path);

// Epoch-wise seeded permutations of [0, n), served B at a time.
class BatchSampler {
 public:
  BatchSampler(std::uint64_t seed, std::uint64_t stream, std::size_t n,
               std::size_t batch_size);

  std::vector<std::size_t> next();

 private:
  void reshuffle();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::uint64_t epoch_ = 0;
};

}  // namespace qkiter

#endif  // QKITER_TRAINER_H_
