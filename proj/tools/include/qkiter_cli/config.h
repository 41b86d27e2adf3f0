#ifndef QKITER_CLI_CONFIG_H_
#define QKITER_CLI_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "qkiter/adam.h"
#include "qkiter/loss.h"
#include "qkiter/synth.h"
#include "qkiter/trainer.h"

namespace qkiter::cli {

struct DataConfig {
  SynthConfig synth;
  std::size_t n_eval_queries = 1000;
  std::size_t n_distractors = 1000;
};

struct ModelConfig {
  std::size_t backbone_hidden = 64;
  std::size_t mid_dim = 64;
  std::size_t head_hidden = 64;
  std::size_t out_dim = 32;
  std::size_t featurizer_dim = 96;  // width of the random projection before PCA
  double projection_scale = 0.1;
};

struct OptimizerConfig {
  double lr0 = 1e-3;
  std::uint64_t decay_steps = 0;  // 0: the schedule's total step count
  double alpha = 0.5;
  AdamConfig adam;
};

struct TrainingConfig {
  std::size_t batch_size = 32;
  std::size_t chunk_size = kDefaultChunkSize;
  std::size_t db_refresh_every = 1;
  std::size_t simclr_steps = 0;  // 0: the schedule's total step count
  std::size_t simclr_eval_every = 0;
  double simclr_lr0 = 0.0;       // 0: optimizer.lr0
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  DataConfig data;
  ModelConfig model;
  LossConfig loss;
  OptimizerConfig optimizer;
  TrainingConfig training;
  PhaseSchedule schedule;
  std::filesystem::path data_dir;  // absolute after loading

  // Throws kConfig naming the offending key.
  void validate() const;
  EncoderDims encoder_dims() const;
  std::uint64_t total_steps() const { return schedule.total_steps(); }
  std::size_t simclr_steps() const;
};

// Parses and validates. Unknown keys and type mismatches throw kConfig with
// the dotted key path. Relative data paths resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

// The fully resolved config minus filesystem paths, so manifests do not
// depend on where a run lives.
nlohmann::json config_to_json(const ExperimentConfig& config);

// Replaces the master seed and every seed derived from it.
void set_seed(ExperimentConfig& config, std::uint64_t seed);

// Sub-seeds derived from the master seed.
std::uint64_t featurizer_seed(const ExperimentConfig& config);
std::uint64_t encoder_seed(const ExperimentConfig& config, Role role);
std::uint64_t schedule_seed(const ExperimentConfig& config);

}  // namespace qkiter::cli

#endif  // QKITER_CLI_CONFIG_H_
