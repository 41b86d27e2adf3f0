#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qkiter/checkpoint.h"
#include "qkiter/dataset_io.h"
#include "qkiter/evaluation.h"
#include "qkiter_cli/commands.h"
#include "test_util.h"

namespace qkiter {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the command-line tool; returns its exit status. stderr goes to
// `err_file` when given.
int run_cli(const std::string& args, const fs::path& err_file = {}) {
  std::string cmd = std::string(QKITER_CLI_PATH) + " " + args + " > /dev/null";
  cmd += err_file.empty() ? " 2> /dev/null" : " 2> '" + err_file.string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json small_config() {
  return json::parse(R"({
    "seed": 3,
    "data": {"n_keys": 160, "d_in": 8, "n_clusters": 16, "n_eval_queries": 40,
             "n_distractors": 10},
    "model": {"backbone_hidden": 8, "mid_dim": 8, "head_hidden": 8, "out_dim": 4,
              "featurizer_dim": 12},
    "training": {"batch_size": 8, "chunk_size": 32, "simclr_steps": 12},
    "schedule": {"phases": ["Q1", "K1", "Q2"], "steps_per_phase": 6},
    "paths": {"data_dir": "data"}
  })");
}

fs::path write_config(const TempDir& dir, const json& config, const std::string& name = "c.json") {
  std::ofstream(dir / name) << config.dump(2);
  return dir / name;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    config_ = write_config(dir_, small_config());
    ASSERT_EQ(run_cli("gen-data --config " + q(config_) + " --out " + q(dir_ / "data")), 0);
  }

  int train(const fs::path& out, const std::string& extra = "") {
    return run_cli("train --config " + q(config_) + " --out " + q(out) + " " + extra);
  }

  TempDir dir_{"cli"};
  fs::path config_;
};

TEST(Cli, UnknownConfigKeyIsConfigErrorNamingTheKey) {
  TempDir dir("cli");
  json c = small_config();
  c["training"]["bacth_size"] = 4;
  const fs::path cfg = write_config(dir, c);
  EXPECT_EQ(run_cli("gen-data --config " + q(cfg) + " --out " + q(dir / "d"), dir / "err"), 2);
  EXPECT_NE(slurp(dir / "err").find("training.bacth_size"), std::string::npos);
}

TEST(Cli, BadArgumentsAndMissingFiles) {
  TempDir dir("cli");
  EXPECT_EQ(run_cli("train --mode fancy --config x --out y"), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  EXPECT_EQ(run_cli("gen-data --config " + q(dir / "absent.json") + " --out " + q(dir / "d")), 2);
  json c = small_config();
  c["loss"]["tau"] = -1.0;
  EXPECT_EQ(run_cli("gen-data --config " + q(write_config(dir, c)) + " --out " + q(dir / "d")),
            2);
}

TEST_F(CliRun, GenDataIsBitwiseReproducible) {
  ASSERT_EQ(run_cli("gen-data --config " + q(config_) + " --out " + q(dir_ / "again") +
                    " --workers 3"),
            0);
  for (const char* f : {cli::kTrainKeysFile, cli::kTrainQueriesFile, cli::kEvalKeysFile,
                        cli::kEvalQueriesFile, cli::kEvalGroundTruthFile, cli::kManifestFile}) {
    EXPECT_EQ(slurp(dir_ / "data" / f), slurp(dir_ / "again" / f)) << f;
  }
  const Dataset keys = read_dataset(dir_ / "data" / cli::kTrainKeysFile);
  const Dataset eval_keys = read_dataset(dir_ / "data" / cli::kEvalKeysFile);
  EXPECT_EQ(keys.rows.rows(), 160u);
  EXPECT_GE(eval_keys.id_base, keys.id_base + keys.rows.rows());
}

TEST_F(CliRun, TrainWritesPhaseTableAndEmbedEvaluateAgrees) {
  const fs::path out = dir_ / "run";
  ASSERT_EQ(train(out), 0);
  const json table = json::parse(slurp(out / "phase_table.json"));
  ASSERT_EQ(table["phases"].size(), 3u);
  EXPECT_EQ(table["phases"][0]["phase"], "Q1");
  EXPECT_EQ(table["phases"][2]["phase"], "Q2");
  EXPECT_TRUE(fs::exists(out / "stores"));

  const fs::path data = dir_ / "data";
  ASSERT_EQ(run_cli("embed --checkpoint " + q(out / "query.qkcp") + " --dataset " +
                    q(data / cli::kEvalQueriesFile) + " --role query --out " + q(dir_ / "q.qkdv")),
            0);
  ASSERT_EQ(run_cli("embed --checkpoint " + q(out / "key.qkcp") + " --dataset " +
                    q(data / cli::kEvalKeysFile) + " --role key --out " + q(dir_ / "k.qkdv")),
            0);
  ASSERT_EQ(run_cli("evaluate --queries " + q(dir_ / "q.qkdv") + " --keys " + q(dir_ / "k.qkdv") +
                    " --ground-truth " + q(data / cli::kEvalGroundTruthFile) + " --out " +
                    q(dir_ / "m.json")),
            0);
  const double cli_mu_ap = json::parse(slurp(dir_ / "m.json"))["mu_ap"].get<double>();

  const Checkpoint qc = read_checkpoint(out / "query.qkcp", Role::kQuery);
  const Checkpoint kc = read_checkpoint(out / "key.qkcp", Role::kKey);
  const EvalSet set = cli::load_eval_set(data);
  const EvalMetrics direct = evaluate_model(qc.encoder, kc.encoder, qc.featurizer, set);
  EXPECT_NEAR(cli_mu_ap, direct.mu_ap, 1e-12);
  const json metrics = json::parse(slurp(out / "metrics.json"));
  EXPECT_NEAR(metrics["final"]["mu_ap"].get<double>(), direct.mu_ap, 1e-12);
}

TEST_F(CliRun, EmbedRefusesRoleMismatchAndEmptyDatasets) {
  const fs::path out = dir_ / "run";
  ASSERT_EQ(train(out, "--max-phases 1"), 0);
  EXPECT_EQ(run_cli("embed --checkpoint " + q(out / "query.qkcp") + " --dataset " +
                        q(dir_ / "data" / cli::kEvalKeysFile) + " --role key --out " +
                        q(dir_ / "x.qkdv"),
                    dir_ / "err"),
            3);
  EXPECT_NE(slurp(dir_ / "err").find("role"), std::string::npos);

  write_dataset(dir_ / "empty.qkds", Matrix(0, 8), 0);
  EXPECT_EQ(run_cli("embed --checkpoint " + q(out / "query.qkcp") + " --dataset " +
                    q(dir_ / "empty.qkds") + " --role query --out " + q(dir_ / "e.qkdv")),
            3);
  EXPECT_FALSE(fs::exists(dir_ / "e.qkdv"));
}

TEST_F(CliRun, ResumedRunMatchesUninterruptedRun) {
  const fs::path whole = dir_ / "whole";
  const fs::path split = dir_ / "split";
  ASSERT_EQ(train(whole), 0);
  ASSERT_EQ(train(split, "--max-phases 1"), 0);
  EXPECT_EQ(json::parse(slurp(split / "phase_table.json"))["phases"].size(), 1u);
  ASSERT_EQ(train(split, "--resume --workers 2"), 0);
  for (const char* f : {"train_log.jsonl", "evals.jsonl", "query.qkcp", "key.qkcp",
                        "train_state.qkts", "phase_table.csv", "metrics.json"}) {
    EXPECT_EQ(slurp(whole / f), slurp(split / f)) << f;
  }
}

TEST_F(CliRun, SimclrModeWritesNoStores) {
  const fs::path out = dir_ / "simclr";
  ASSERT_EQ(train(out, "--mode simclr"), 0);
  EXPECT_FALSE(fs::exists(out / "stores"));
  EXPECT_TRUE(fs::exists(out / "query.qkcp"));
  const json metrics = json::parse(slurp(out / "metrics.json"));
  EXPECT_EQ(metrics["mode"], "simclr");
  EXPECT_EQ(train(out, "--mode simclr --resume"), 2);
}

TEST_F(CliRun, SeedOverrideChangesData) {
  ASSERT_EQ(run_cli("gen-data --config " + q(config_) + " --out " + q(dir_ / "other") +
                    " --seed-override 99"),
            0);
  EXPECT_NE(slurp(dir_ / "data" / cli::kTrainKeysFile),
            slurp(dir_ / "other" / cli::kTrainKeysFile));
}

}  // namespace
}  // namespace qkiter
