#ifndef QKITER_CLI_COMMANDS_H_
#define QKITER_CLI_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "qkiter/error.h"
#include "qkiter/evaluation.h"
#include "qkiter/trainer.h"
#include "qkiter_cli/config.h"

namespace qkiter::cli {

// Process exit status for an error kind: 2 config, 3 data, 4 numeric, 1 other.
int exit_code(ErrorKind kind);

// Files written by gen-data and read by train / compare.
inline constexpr const char* kTrainKeysFile = "train_keys.qkds";
inline constexpr const char* kTrainQueriesFile = "train_queries.qkds";
inline constexpr const char* kEvalKeysFile = "eval_keys.qkds";
inline constexpr const char* kEvalQueriesFile = "eval_queries.qkds";
inline constexpr const char* kEvalGroundTruthFile = "eval_gt.csv";
inline constexpr const char* kManifestFile = "manifest.json";

struct RunArgs {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::filesystem::path> data_dir;  // overrides paths.data_dir
  std::size_t workers = 1;
  std::optional<std::uint64_t> seed_override;
};

struct TrainArgs : RunArgs {
  std::string mode = "qk";  // "qk" or "simclr"
  bool resume = false;
  // Stop once this many schedule phases are complete (simulates an
  // interrupted run; a later --resume continues from the train state).
  std::optional<std::size_t> max_phases;
};

struct EmbedArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;
  Role role = Role::kQuery;
  std::filesystem::path out;
  std::size_t workers = 1;
};

struct EvaluateArgs {
  std::filesystem::path queries;
  std::filesystem::path keys;
  std::filesystem::path ground_truth;
  std::optional<std::filesystem::path> out;  // metrics JSON; stdout otherwise
};

// Everything a training run needs, built deterministically from a config
// and the generated data files.
struct Experiment {
  ExperimentConfig config;
  TrainingData data;
  EvalSet eval;
  TrainState state;
  TrainOptions options;
};

ExperimentConfig resolve_config(const RunArgs& args);
Experiment load_experiment(const ExperimentConfig& config, std::size_t workers,
                           const std::filesystem::path& store_dir);
EvalSet load_eval_set(const std::filesystem::path& data_dir);

void cmd_gen_data(const RunArgs& args);
// Returns the run summary also written to <out>/metrics.json.
nlohmann::json cmd_train(const TrainArgs& args);
void cmd_embed(const EmbedArgs& args);
nlohmann::json cmd_evaluate(const EvaluateArgs& args);
// Runs both modes from the same seed into <out>/qk and <out>/simclr and
// writes <out>/comparison.{json,csv}.
nlohmann::json cmd_compare(const RunArgs& args);

nlohmann::json metrics_json(const EvalMetrics& metrics);

}  // namespace qkiter::cli

#endif  // QKITER_CLI_COMMANDS_H_
