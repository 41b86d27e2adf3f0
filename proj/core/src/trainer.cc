#include "qkiter/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

#include "qkiter/binary_io.h"
#include "qkiter/checkpoint.h"
#include "qkiter/error.h"
#include "qkiter/synth.h"

namespace qkiter {

namespace {

constexpr std::string_view kTrainStateMagic = "QKTS";
constexpr std::uint32_t kTrainStateVersion = 1;
constexpr std::uint64_t kStreamBatches = 16;
constexpr std::uint64_t kStreamSimclr = 17;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// The side whose backbone trains; exactly one must qualify.
Role moving_role(const TrainState& state) {
  const bool q = state.query.trainable_backbone;
  const bool k = state.key.trainable_backbone;
  require(q != k, ErrorKind::kContract,
          "co-learn step needs exactly one trainable backbone (query " +
              std::string(q ? "trainable" : "frozen") + ", key " +
              std::string(k ? "trainable" : "frozen") + ")");
  return q ? Role::kQuery : Role::kKey;
}

AdamState& adam_group(TrainState& state, const std::string& name, std::size_t size) {
  auto it = state.adam.find(name);
  require(it != state.adam.end(), ErrorKind::kContract, "no optimizer state for group " + name);
  require(it->second.size() == size, ErrorKind::kContract,
          "optimizer state for group " + name + " has the wrong size");
  return it->second;
}

void apply_update(TrainState& state, std::vector<DenseLayer>& layers,
                  const std::vector<DenseGrad>& grads, const std::string& name, double lr) {
  Vector params = flatten_parameters(layers);
  const Vector flat_grad = flatten_gradients(grads);
  adam_update(params, flat_grad, adam_group(state, name, params.size()), lr, name);
  assign_parameters(params, layers);
}

// Runs the moving encoder over the batch rows, keeping caches for backward.
Matrix forward_batch(const EncoderParams& enc, MatrixView inputs, MatrixView base,
                     std::span<const std::size_t> batch, std::vector<EncoderCache>& caches) {
  Matrix out(batch.size(), enc.out_dim());
  caches.assign(batch.size(), {});
  for (std::size_t r = 0; r < batch.size(); ++r) {
    out.set_row(r, encoder_forward_with_base(enc, inputs.row(batch[r]), base.row(batch[r]),
                                             &caches[r]));
  }
  return out;
}

struct BatchGrads {
  std::vector<DenseGrad> backbone;
  std::vector<DenseGrad> head;
};

BatchGrads backward_batch(const EncoderParams& enc, const std::vector<EncoderCache>& caches,
                          MatrixView grad_desc) {
  BatchGrads sum{zero_grads_like(enc.backbone), zero_grads_like(enc.head)};
  for (std::size_t r = 0; r < caches.size(); ++r) {
    EncoderGrads g = encoder_backward(enc, caches[r], grad_desc.row(r));
    if (g.backbone) accumulate(sum.backbone, *g.backbone);
    if (g.head) accumulate(sum.head, *g.head);
  }
  return sum;
}

std::vector<std::size_t> positions(std::size_t n) {
  std::vector<std::size_t> cols(n);
  std::iota(cols.begin(), cols.end(), 0);
  return cols;
}

void check_loss(const LossBreakdown& b, std::uint64_t step, std::string_view where) {
  if (std::isfinite(b.loss)) return;
  std::ostringstream msg;
  msg << "non-finite loss at step " << step << " (" << where << "): loss_pos=" << b.loss_pos
      << " loss_neg=" << b.loss_neg << " mined=" << b.mined.size();
  fail(ErrorKind::kNumeric, msg.str());
}

// Early-stop rule over the evaluation history of one phase.
bool plateaued(const std::vector<double>& history, const PhaseSpec& spec) {
  const std::size_t w = spec.plateau_window;
  if (w == 0 || history.size() <= w) return false;
  const auto split = history.end() - static_cast<std::ptrdiff_t>(w);
  const double best_before = *std::max_element(history.begin(), split);
  const double best = *std::max_element(history.begin(), history.end());
  return best - best_before < spec.plateau_min_rel_improve * std::abs(best_before);
}

}  // namespace

void PhaseSchedule::validate() const {
  require(!phases.empty(), ErrorKind::kValidation, "phase schedule is empty");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const PhaseSpec& p = phases[i];
    const std::string at = "phase " + std::to_string(i);
    require(!p.name.empty(), ErrorKind::kValidation, at + " has no name");
    require(p.max_steps >= 1, ErrorKind::kValidation, at + " (" + p.name + ") has max_steps 0");
    require(p.plateau_min_rel_improve >= 0.0 && std::isfinite(p.plateau_min_rel_improve),
            ErrorKind::kValidation, at + " (" + p.name + ") has a negative plateau threshold");
  }
}

std::uint64_t PhaseSchedule::total_steps() const {
  std::uint64_t total = 0;
  for (const PhaseSpec& p : phases) total += p.max_steps;
  return total;
}

TrainingData TrainingData::build(Matrix keys, Matrix queries,
                                 const BaselineFeaturizer& featurizer, std::size_t workers) {
  require(keys.rows() == queries.rows() && keys.cols() == queries.cols(),
          ErrorKind::kInputShape, "training keys and queries must have the same shape");
  require(keys.rows() >= 1, ErrorKind::kDegenerateInput, "training set is empty");
  TrainingData data;
  data.key_base = baseline_featurize_rows(featurizer, keys, workers);
  data.query_base = baseline_featurize_rows(featurizer, queries, workers);
  data.key_digest = digest_matrix(keys);
  data.query_digest = digest_matrix(queries);
  data.keys = std::move(keys);
  data.queries = std::move(queries);
  return data;
}

void TrainOptions::validate() const {
  loss.validate();
  lr.validate();
  require(batch_size >= 1, ErrorKind::kValidation, "batch_size must be >= 1");
  require(chunk_size >= 1, ErrorKind::kValidation, "chunk_size must be >= 1");
  require(workers >= 1, ErrorKind::kValidation, "workers must be >= 1");
  require(db_refresh_every >= 1, ErrorKind::kValidation, "db_refresh_every must be >= 1");
}

std::string group_name(Role role, bool backbone) {
  return std::string(role_name(role)) + (backbone ? ".backbone" : ".head");
}

TrainState init_train_state(EncoderParams query, EncoderParams key,
                            BaselineFeaturizer featurizer, const AdamConfig& adam) {
  query.validate();
  key.validate();
  require(query.role == Role::kQuery && key.role == Role::kKey, ErrorKind::kContract,
          "encoder roles are swapped");
  for (const EncoderParams* enc : {&query, &key}) {
    require(enc->input_dim() == featurizer.in_dim() && enc->base_dim() == featurizer.out_dim(),
            ErrorKind::kInputShape,
            std::string(role_name(enc->role)) + " encoder does not match the featurizer");
  }
  TrainState state;
  for (const EncoderParams* enc : {&query, &key}) {
    state.adam.emplace(group_name(enc->role, true),
                       AdamState(flatten_parameters(enc->backbone).size(), adam));
    state.adam.emplace(group_name(enc->role, false),
                       AdamState(flatten_parameters(enc->head).size(), adam));
  }
  state.query = std::move(query);
  state.key = std::move(key);
  state.featurizer = std::move(featurizer);
  return state;
}

Digest backbone_tag(const EncoderParams& encoder, const Digest& dataset_digest) {
  Sha256 h;
  h.update("qkiter-backbone-tag");
  h.update_u64(static_cast<std::uint64_t>(encoder.role));
  h.update(backbone_bytes(encoder));
  h.update(dataset_digest);
  return h.finish();
}

IntermediateStore bulk_evaluate(const EncoderParams& frozen, MatrixView inputs,
                                const Digest& dataset_digest, std::size_t chunk_size,
                                const std::filesystem::path& path, std::size_t workers) {
  require(!frozen.trainable_backbone, ErrorKind::kContract,
          "bulk evaluation needs a frozen " + std::string(role_name(frozen.role)) + " backbone");
  require(chunk_size >= 1, ErrorKind::kValidation, "chunk_size must be >= 1");
  StoreWriter writer(path, frozen.mid_dim(), chunk_size, backbone_tag(frozen, dataset_digest));
  for (std::size_t begin = 0; begin < inputs.rows(); begin += chunk_size) {
    const std::size_t count = std::min(chunk_size, inputs.rows() - begin);
    const Matrix mid = backbone_forward_rows(frozen, inputs.slice_rows(begin, count), workers);
    for (std::size_t r = 0; r < count; ++r) writer.append(mid.row(r));
  }
  return writer.finish();
}

void begin_phase(TrainState& state, const PhaseSpec& spec, const TrainingData& data,
                 const TrainOptions& options) {
  const bool query_was_frozen = !state.query.trainable_backbone;
  const bool key_was_frozen = !state.key.trainable_backbone;
  set_phase_trainability(state.query, state.key, spec.kind);
  if (query_was_frozen && state.query.trainable_backbone) {
    state.adam.at(group_name(Role::kQuery, true)).reset();
  }
  if (key_was_frozen && state.key.trainable_backbone) {
    state.adam.at(group_name(Role::kKey, true)).reset();
  }

  const Role frozen = spec.kind == Phase::kQuery ? Role::kKey : Role::kQuery;
  std::filesystem::create_directories(options.store_dir);
  const auto path = options.store_dir / ("phase_" + std::to_string(state.phase_index) + "_" +
                                         spec.name + ".qkis");
  state.store.reset();
  state.store = bulk_evaluate(state.encoder(frozen), data.inputs(frozen), data.digest(frozen),
                              options.chunk_size, path, options.workers);
  ++state.bulk_evaluations;
  state.db_desc_valid = false;
}

StepRecord phase_step(TrainState& state, const TrainingData& data,
                      std::span<const std::size_t> batch, const TrainOptions& options,
                      double lr, LossBreakdown* breakdown) {
  const auto start = Clock::now();
  const Role moving = moving_role(state);
  const Role frozen = other_role(moving);
  EncoderParams& mov = state.encoder(moving);
  EncoderParams& frz = state.encoder(frozen);

  require(state.store.has_value(), ErrorKind::kContract, "no intermediate store; begin a phase");
  const IntermediateStore& store = *state.store;
  require(store.source_tag() == backbone_tag(frz, data.digest(frozen)) &&
              store.n_rows() == data.size(),
          ErrorKind::kContract,
          "intermediate store " + store.path().string() + " is stale for the " +
              std::string(role_name(frozen)) + " backbone");
  for (std::size_t i : batch) {
    require(i < data.size(), ErrorKind::kIndex,
            "batch index " + std::to_string(i) + " outside the training set");
  }

  std::vector<EncoderCache> caches;
  const Matrix batch_desc = forward_batch(mov, data.inputs(moving), data.base(moving), batch, caches);

  const MatrixView frozen_base = data.base(frozen);
  if (!state.db_desc_valid || state.step - state.db_desc_step >= options.db_refresh_every) {
    state.db_desc = Matrix(store.n_rows(), frz.out_dim());
    Matrix mid;
    for (std::size_t c = 0; c < store.chunk_count(); ++c) {
      store.read_chunk_into(c, mid);
      const std::size_t begin = store.chunk_begin(c);
      const Matrix desc = head_forward_rows(frz, mid, frozen_base.slice_rows(begin, mid.rows()),
                                            options.workers);
      std::copy(desc.values().begin(), desc.values().end(),
                state.db_desc.values().begin() + static_cast<std::ptrdiff_t>(begin * desc.cols()));
    }
    state.db_desc_step = state.step;
    state.db_desc_valid = true;
  }

  const std::vector<std::size_t> positive_cols(batch.begin(), batch.end());
  const ScoreMatrix sm = score_matrix(batch_desc, state.db_desc, options.loss.tau, positive_cols,
                                      options.workers);
  LossBreakdown b = contrastive_bce(sm, options.loss);
  check_loss(b, state.step + 1, "co-learn");
  const LossGradients lg = loss_backward(sm, options.loss, b, batch_desc, state.db_desc);

  const BatchGrads moving_grads = backward_batch(mov, caches, lg.batch);
  std::vector<DenseGrad> frozen_head = zero_grads_like(frz.head);
  for (const auto& [col, grad] : lg.db) {
    HeadCache hc;
    head_forward(frz, store.read_row(col), frozen_base.row(col), &hc);
    accumulate(frozen_head, head_backward(frz, hc, grad));
  }

  if (mov.trainable_backbone) {
    apply_update(state, mov.backbone, moving_grads.backbone, group_name(moving, true), lr);
  }
  if (mov.trainable_head) {
    apply_update(state, mov.head, moving_grads.head, group_name(moving, false), lr);
  }
  if (frz.trainable_head) {
    apply_update(state, frz.head, frozen_head, group_name(frozen, false), lr);
  }
  ++state.step;

  StepRecord rec;
  rec.step = state.step;
  rec.lr = lr;
  rec.loss = b.loss;
  rec.loss_pos = b.loss_pos;
  rec.loss_neg = b.loss_neg;
  rec.short_mine = b.short_mine;
  rec.wall_time = seconds_since(start);
  if (breakdown != nullptr) *breakdown = std::move(b);
  return rec;
}

PhaseResult run_phase(TrainState& state, const PhaseSpec& spec, const TrainingData& data,
                      const EvalSet& eval, const TrainOptions& options,
                      std::uint64_t schedule_seed, const TrainObserver& observer) {
  begin_phase(state, spec, data, options);
  BatchSampler sampler(schedule_seed, kStreamBatches + state.phase_index, data.size(),
                       options.batch_size);
  PhaseResult result;
  result.name = spec.name;
  result.kind = spec.kind;
  std::vector<double> history;

  auto evaluate = [&]() {
    EvalRecord rec{state.step, spec.name,
                   evaluate_model(state.query, state.key, state.featurizer, eval, options.workers)};
    history.push_back(rec.metrics.mu_ap);
    if (observer.on_eval) observer.on_eval(rec);
    return rec.metrics;
  };

  for (std::size_t s = 0; s < spec.max_steps; ++s) {
    const std::vector<std::size_t> batch = sampler.next();
    StepRecord rec = phase_step(state, data, batch, options, cosine_lr(options.lr, state.step));
    rec.phase = spec.name;
    result.final_loss = rec.loss;
    ++result.steps_run;
    if (observer.on_step) observer.on_step(rec);
    const bool last = s + 1 == spec.max_steps;
    if (!last && spec.eval_every > 0 && (s + 1) % spec.eval_every == 0) {
      evaluate();
      if (plateaued(history, spec)) {
        result.early_stopped = true;
        break;
      }
    }
  }
  result.metrics = evaluate();
  ++state.phase_index;
  if (observer.on_phase_end) observer.on_phase_end(result, state);
  return result;
}

QkRunResult run_qk_iteration(const PhaseSchedule& schedule, TrainState state,
                             const TrainingData& data, const EvalSet& eval,
                             const TrainOptions& options, const TrainObserver& observer) {
  schedule.validate();
  options.validate();
  eval.validate();
  require(state.phase_index <= schedule.phases.size(), ErrorKind::kContract,
          "train state is past the end of the schedule");
  QkRunResult run;
  run.baseline = evaluate_baseline(state.featurizer, eval, options.workers);
  while (state.phase_index < schedule.phases.size()) {
    const PhaseSpec& spec = schedule.phases[state.phase_index];
    run.phases.push_back(run_phase(state, spec, data, eval, options, schedule.seed, observer));
  }
  run.state = std::move(state);
  return run;
}

StepRecord simclr_step(TrainState& state, const TrainingData& data,
                       std::span<const std::size_t> batch, const TrainOptions& options,
                       double lr, LossBreakdown* breakdown) {
  const auto start = Clock::now();
  for (EncoderParams* enc : {&state.query, &state.key}) {
    enc->trainable_backbone = true;
    enc->trainable_head = true;
  }
  for (std::size_t i : batch) {
    require(i < data.size(), ErrorKind::kIndex,
            "batch index " + std::to_string(i) + " outside the training set");
  }
  std::vector<EncoderCache> q_caches;
  std::vector<EncoderCache> k_caches;
  const Matrix q_desc = forward_batch(state.query, data.queries, data.query_base, batch, q_caches);
  const Matrix k_desc = forward_batch(state.key, data.keys, data.key_base, batch, k_caches);

  const ScoreMatrix sm =
      score_matrix(q_desc, k_desc, options.loss.tau, positions(batch.size()), options.workers);
  LossBreakdown b = contrastive_bce(sm, options.loss);
  check_loss(b, state.step + 1, "in-batch");
  const LossGradients lg = loss_backward(sm, options.loss, b, q_desc, k_desc);

  Matrix k_grad(batch.size(), state.key.out_dim());
  for (const auto& [col, grad] : lg.db) k_grad.set_row(col, grad);
  const BatchGrads qg = backward_batch(state.query, q_caches, lg.batch);
  const BatchGrads kg = backward_batch(state.key, k_caches, k_grad);

  apply_update(state, state.query.backbone, qg.backbone, group_name(Role::kQuery, true), lr);
  apply_update(state, state.query.head, qg.head, group_name(Role::kQuery, false), lr);
  apply_update(state, state.key.backbone, kg.backbone, group_name(Role::kKey, true), lr);
  apply_update(state, state.key.head, kg.head, group_name(Role::kKey, false), lr);
  ++state.step;

  StepRecord rec;
  rec.step = state.step;
  rec.phase = "simclr";
  rec.lr = lr;
  rec.loss = b.loss;
  rec.loss_pos = b.loss_pos;
  rec.loss_neg = b.loss_neg;
  rec.short_mine = b.short_mine;
  rec.wall_time = seconds_since(start);
  if (breakdown != nullptr) *breakdown = std::move(b);
  return rec;
}

SimclrResult run_simclr(TrainState state, const TrainingData& data, const EvalSet& eval,
                        const TrainOptions& options, std::size_t total_steps,
                        std::size_t eval_every, std::uint64_t seed,
                        const TrainObserver& observer) {
  options.validate();
  eval.validate();
  require(total_steps >= 1, ErrorKind::kValidation, "total_steps must be >= 1");
  SimclrResult run;
  run.baseline = evaluate_baseline(state.featurizer, eval, options.workers);
  BatchSampler sampler(seed, kStreamSimclr, data.size(), options.batch_size);

  auto evaluate = [&]() {
    EvalRecord rec{state.step, "simclr",
                   evaluate_model(state.query, state.key, state.featurizer, eval, options.workers)};
    run.evals.push_back(rec);
    if (observer.on_eval) observer.on_eval(rec);
  };

  for (std::size_t s = 0; s < total_steps; ++s) {
    const std::vector<std::size_t> batch = sampler.next();
    const StepRecord rec =
        simclr_step(state, data, batch, options, cosine_lr(options.lr, state.step));
    if (observer.on_step) observer.on_step(rec);
    if (s + 1 < total_steps && eval_every > 0 && (s + 1) % eval_every == 0) evaluate();
  }
  evaluate();
  run.final_metrics = run.evals.back().metrics;
  run.state = std::move(state);
  return run;
}

void write_train_state(const std::filesystem::path& path, const TrainState& state) {
  BinaryWriter out(path);
  out.write_magic(kTrainStateMagic);
  out.write_u32(kTrainStateVersion);
  out.write_u64(state.step);
  out.write_u64(state.phase_index);
  write_encoder_section(out, state.query);
  write_encoder_section(out, state.key);
  write_featurizer_section(out, state.featurizer);
  out.write_u32(static_cast<std::uint32_t>(state.adam.size()));
  for (const auto& [name, adam] : state.adam) {
    out.write_string(name);
    out.write_u64(adam.t);
    out.write_f64(adam.beta1);
    out.write_f64(adam.beta2);
    out.write_f64(adam.epsilon);
    out.write_u64(adam.size());
    out.write_f64s(adam.m);
    out.write_f64s(adam.v);
  }
  out.commit();
}

TrainState read_train_state(const std::filesystem::path& path) {
  BinaryReader in(path);
  in.expect_magic(kTrainStateMagic);
  const std::uint32_t version = in.read_u32();
  require(version == kTrainStateVersion, ErrorKind::kFormat,
          path.string() + ": unsupported train-state version " + std::to_string(version));
  TrainState state;
  state.step = in.read_u64();
  state.phase_index = in.read_u64();
  state.query = read_encoder_section(in);
  state.key = read_encoder_section(in);
  require(state.query.role == Role::kQuery && state.key.role == Role::kKey, ErrorKind::kFormat,
          path.string() + ": encoder roles out of order");
  state.featurizer = read_featurizer_section(in);
  const std::uint32_t groups = in.read_u32();
  for (std::uint32_t g = 0; g < groups; ++g) {
    std::string name = in.read_string();
    AdamState adam;
    adam.t = in.read_u64();
    adam.beta1 = in.read_f64();
    adam.beta2 = in.read_f64();
    adam.epsilon = in.read_f64();
    const std::uint64_t size = in.read_u64();
    require(size <= in.remaining() / (2 * sizeof(double)), ErrorKind::kFormat,
            path.string() + ": optimizer group " + name + " is truncated");
    adam.m.resize(size);
    adam.v.resize(size);
    in.read_f64s(adam.m);
    in.read_f64s(adam.v);
    state.adam.emplace(std::move(name), std::move(adam));
  }
  require(in.remaining() == 0, ErrorKind::kFormat, path.string() + ": trailing bytes");
  return state;
}

BatchSampler::BatchSampler(std::uint64_t seed, std::uint64_t stream, std::size_t n,
                           std::size_t batch_size)
    : seed_(seed), stream_(stream), batch_size_(batch_size), order_(n) {
  require(batch_size >= 1 && batch_size <= n, ErrorKind::kValidation,
          "batch size " + std::to_string(batch_size) + " must be in [1, " + std::to_string(n) +
              "]");
  reshuffle();
}

void BatchSampler::reshuffle() {
  std::iota(order_.begin(), order_.end(), 0);
  std::mt19937_64 rng(derive_seed(seed_, stream_, epoch_));
  std::shuffle(order_.begin(), order_.end(), rng);
  cursor_ = 0;
  ++epoch_;
}

std::vector<std::size_t> BatchSampler::next() {
  if (cursor_ + batch_size_ > order_.size()) reshuffle();
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_size_));
  cursor_ += batch_size_;
  return batch;
}

}  // namespace qkiter
